import numpy as np
import pytest

from wecdb import Database


def write_wec_text(path, words, dims, rng=None, fmt="%.5f", header=None):
    """Write a plain-text WEC file; returns {word: float32 vector} of expectation."""
    rng = rng or np.random.default_rng(0)
    expected = {}
    lines = []
    if header is not None:
        lines.append(header)
    for word in words:
        values = rng.uniform(-1.0, 1.0, size=dims)
        fields = [fmt % v for v in values]
        lines.append(word + " " + " ".join(fields))
        expected[word] = np.array(fields, dtype="<f8").astype("<f4")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return expected


@pytest.fixture
def db(tmp_path):
    database = Database(tmp_path / "catalog", create_if_missing=True)
    yield database
    database.close()


@pytest.fixture
def toy_wec(db, tmp_path):
    """Small fold:1 WEC with a phrase token, vocabulary join enabled."""
    words = ["theory", "of", "computation", "petri", "net", "petri_net", "analysis", "the"]
    expected = write_wec_text(tmp_path / "toy.txt", words, dims=4)
    ident = "algo:glove;dataset:toy;dims:4;fold:1;unit:token"
    db.import_from_file(tmp_path / "toy.txt", ident, vocab_join_max_len=4)
    return ident, expected
