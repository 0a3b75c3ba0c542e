import numpy as np
import pytest

from wecdb import (
    Database,
    DuplicateWordError,
    HeaderError,
    MalformedLineError,
    WecImportError,
)
from wecdb.store import WecStore, import_from_file, parse_vector_text

from conftest import write_wec_text

IDENT = "algo:test;dataset:d;dims:4;fold:0;unit:token"


def test_import_counts_three_lines(db, tmp_path):
    path = tmp_path / "t.txt"
    path.write_text("a 1 2 3 4\nb 5 6 7 8\nc 9 10 11 12\n")
    report = db.import_from_file(path, IDENT)
    assert report.imported == 3
    assert report.skipped_duplicates == 0
    assert report.malformed_lines == []
    assert db.vocab_size(IDENT) == 3
    # catalog entry tracks the store's record count
    assert db.catalog.lookup(IDENT).vocab_size == 3


def test_bit_exact_round_trip(db, tmp_path):
    words = [f"w{i}" for i in range(200)]
    expected = write_wec_text(tmp_path / "t.txt", words, dims=4, fmt="%.7g")
    db.import_from_file(tmp_path / "t.txt", IDENT)
    for word, vec in expected.items():
        got = db.get_vector(IDENT, word)
        assert got.dtype == np.dtype("<f4")
        assert got.tobytes() == vec.tobytes(), word


def test_absent_word_returns_none_not_error(db, tmp_path):
    (tmp_path / "t.txt").write_text("a 1 2 3 4\n")
    db.import_from_file(tmp_path / "t.txt", IDENT)
    assert db.get_vector(IDENT, "zzz-not-present") is None


def test_lookup_is_case_literal(db, tmp_path):
    (tmp_path / "t.txt").write_text("theory 1 2 3 4\n")
    db.import_from_file(tmp_path / "t.txt", IDENT)
    assert db.get_vector(IDENT, "Theory") is None
    assert db.get_vector(IDENT, "theory") is not None


def test_duplicate_rejected_with_word_and_line(db, tmp_path):
    path = tmp_path / "t.txt"
    path.write_text("the 1 2 3 4\nnet 5 6 7 8\nthe 9 9 9 9\n")
    with pytest.raises(DuplicateWordError) as exc:
        db.import_from_file(path, IDENT)
    assert exc.value.word == "the"
    assert exc.value.line == 3
    # one-step register+import is all-or-nothing
    assert db.catalog.lookup(IDENT) is None
    path.write_text("the 1 2 3 4\nnet 5 6 7 8\n")
    assert db.import_from_file(path, IDENT).imported == 2  # retry works


def test_failed_import_into_registered_wec_leaves_it_empty(db, tmp_path):
    db.register(IDENT)
    path = tmp_path / "t.txt"
    path.write_text("a 1 2 3 4\na 5 6 7 8\n")
    with pytest.raises(DuplicateWordError):
        db.import_into(path, IDENT)
    # separately-made registration stays; the store rolls back to empty
    assert db.catalog.lookup(IDENT).vocab_size == 0
    assert db.vocab_size(IDENT) == 0


def test_file_dims_inconsistent_with_identifier_dims(db, tmp_path):
    # identifier says 300-dim, file carries 50-wide vectors
    ident = "algo:test;dataset:wide;dims:300;fold:0;unit:token"
    path = tmp_path / "t.txt"
    rng = np.random.default_rng(1)
    path.write_text("w0 " + " ".join(f"{v:.4f}" for v in rng.uniform(-1, 1, 50)) + "\n")
    with pytest.raises(MalformedLineError, match="301 fields"):
        db.import_from_file(path, ident)


def test_keep_first_counts_duplicates(db, tmp_path):
    path = tmp_path / "t.txt"
    path.write_text("the 1 2 3 4\nnet 5 6 7 8\nthe 9 9 9 9\nnet 0 0 0 0\nnew 1 1 1 1\n")
    report = db.import_from_file(path, IDENT, on_duplicate="keep_first")
    assert report.imported == 3
    assert report.skipped_duplicates == 2
    # first occurrence wins
    assert db.get_vector(IDENT, "the").tolist() == [1.0, 2.0, 3.0, 4.0]


def test_dimension_mismatch_is_fatal_by_default(db, tmp_path):
    path = tmp_path / "t.txt"
    path.write_text("a 1 2 3 4\nb 5 6 7\n")
    with pytest.raises(MalformedLineError, match="line 2"):
        db.import_from_file(path, IDENT)
    assert db.catalog.lookup(IDENT) is None


def test_lenient_mode_records_malformed_lines(db, tmp_path):
    path = tmp_path / "t.txt"
    path.write_text("a 1 2 3 4\nb 5 6 7\n\nc x y z w\nd 1 1 1 1\n")
    report = db.import_from_file(path, IDENT, on_malformed="skip")
    assert report.imported == 2
    assert [line for line, _ in report.malformed_lines] == [2, 3, 4]
    reasons = [reason for _, reason in report.malformed_lines]
    assert "blank line" in reasons[1]
    assert report.imported + report.skipped_duplicates + len(report.malformed_lines) == 5


def test_header_autodetected_and_validated(db, tmp_path):
    path = tmp_path / "t.txt"
    path.write_text("2 4\na 1 2 3 4\nb 5 6 7 8\n")
    report = db.import_from_file(path, IDENT)
    assert report.imported == 2
    assert db.get_vector(IDENT, "2") is None


def test_header_dims_mismatch_rejected(db, tmp_path):
    path = tmp_path / "t.txt"
    path.write_text("2 300\na 1 2 3 4\n")
    with pytest.raises(HeaderError, match="300"):
        db.import_from_file(path, IDENT)


def test_expect_header_no_takes_first_line_as_data(db, tmp_path):
    # a dims-1 store whose first record looks like a header
    path = tmp_path / "t.txt"
    path.write_text("7 3\nx 1\n")
    ident = "algo:test;dataset:d;dims:1;fold:0;unit:token"
    report = db.import_from_file(path, ident, expect_header="no")
    assert report.imported == 2
    assert db.get_vector(ident, "7").tolist() == [3.0]


def test_expect_header_yes_requires_header(db, tmp_path):
    path = tmp_path / "t.txt"
    path.write_text("a 1 2 3 4\n")
    with pytest.raises(HeaderError):
        db.import_from_file(path, IDENT, expect_header="yes")


def test_words_keep_any_non_whitespace_bytes(db, tmp_path):
    path = tmp_path / "t.txt"
    path.write_text("petri_net 1 2 3 4\nüber-word 5 6 7 8\na,b=c.d 1 1 1 1\n")
    db.import_from_file(path, IDENT)
    assert db.contains(IDENT, "petri_net")
    assert db.contains(IDENT, "über-word")
    assert db.contains(IDENT, "a,b=c.d")


def test_store_smaller_than_text_at_typical_widths(db, tmp_path):
    words = [f"word{i:05d}" for i in range(2000)]
    write_wec_text(tmp_path / "t.txt", words, dims=50, fmt="%.5f")
    ident = "algo:test;dataset:d;dims:50;fold:0;unit:token"
    report = db.import_from_file(tmp_path / "t.txt", ident)
    assert 0 < report.bytes_store < report.bytes_text


def test_batch_lookup_dedups_and_orders(db, tmp_path):
    path = tmp_path / "t.txt"
    path.write_text("a 1 2 3 4\n")
    db.import_from_file(path, IDENT)
    found, missing = db.get_vectors_batch(IDENT, ["a", "qq", "a"])
    assert [w for w, _ in found] == ["a"]
    assert missing == ["qq"]
    found, missing = db.get_vectors_batch(IDENT, [])
    assert found == [] and missing == []


def test_iterate_vocab_streams_exact_word_set(db, tmp_path):
    words = [f"tok{i}" for i in range(500)]
    write_wec_text(tmp_path / "t.txt", words, dims=4)
    db.import_from_file(tmp_path / "t.txt", IDENT)
    assert set(db.iterate_vocab(IDENT)) == set(words)
    assert db.vocab_size(IDENT) == 500


def test_reimport_into_populated_store_rejected(db, tmp_path):
    path = tmp_path / "t.txt"
    path.write_text("a 1 2 3 4\n")
    db.import_from_file(path, IDENT)
    with pytest.raises(WecImportError, match="already contains"):
        db.import_into(path, IDENT)


def test_unknown_wec_is_an_error(db):
    from wecdb import UnknownWecError

    with pytest.raises(UnknownWecError):
        db.get_vector(IDENT, "a")


def test_parse_vector_text_pins_float64_then_float32():
    import struct

    fields = ["0.28217", "-1.5e-3", "3", "6.02e23"]
    blob = parse_vector_text(fields)
    manual = b"".join(struct.pack("<f", float(f)) for f in fields)
    assert blob == manual


def test_persisted_store_reopens(tmp_path):
    path = tmp_path / "solo.wec"
    with WecStore(path, dims=2, create=True) as store:
        store.put_many([("x", np.array([1, 2], dtype="<f4").tobytes())])
    with WecStore(path) as store:
        assert store.dims == 2
        assert store.get("x").tolist() == [1.0, 2.0]
