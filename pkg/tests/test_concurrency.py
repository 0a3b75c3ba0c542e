import threading

import numpy as np

from wecdb import Database, PreprocessCache, build_pipeline, run_pipeline

from conftest import write_wec_text

IDENT = "algo:t;dataset:conc;dims:4;fold:1;unit:token"


def _run_threads(worker, n=8):
    errors = []

    def wrapped(k):
        try:
            worker(k)
        except Exception as exc:  # noqa: BLE001 - surfaced via assertion below
            errors.append(exc)

    threads = [threading.Thread(target=wrapped, args=(k,)) for k in range(n)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert errors == [], errors


def test_concurrent_readers_on_one_store(db, tmp_path):
    words = [f"cw{i}" for i in range(300)]
    expected = write_wec_text(tmp_path / "c.txt", words, dims=4)
    db.import_from_file(tmp_path / "c.txt", IDENT)

    def worker(k):
        for i in range(50):
            word = words[(k * 37 + i) % len(words)]
            vec = db.get_vector(IDENT, word)
            assert vec.tobytes() == expected[word].tobytes()
            found, missing = db.get_vectors_batch(IDENT, words[:50])
            assert len(found) == 50 and not missing

    _run_threads(worker)


def test_concurrent_pipeline_with_shared_cache():
    pipeline = build_pipeline(case_fold=True)
    cache = PreprocessCache()
    lines = [f"Line number {i} of Shared Text" for i in range(20)]
    expected = [run_pipeline(pipeline, line) for line in lines]

    def worker(k):
        for i, line in enumerate(lines):
            assert run_pipeline(pipeline, line, cache) == expected[i]

    _run_threads(worker)
    assert cache.hits + cache.misses == 8 * len(lines)


def test_concurrent_get_vectors_calls(db, tmp_path):
    write_wec_text(tmp_path / "c.txt", ["alpha", "beta", "gamma"], dims=4)
    db.import_from_file(tmp_path / "c.txt", IDENT)
    cache = PreprocessCache()
    reference = db.get_vectors(IDENT, None, inputs=["Alpha beta GAMMA"], raw=True)
    ref_words = reference.per_wec[0][1][0].words()

    def worker(k):
        res = db.get_vectors(IDENT, cache, inputs=["Alpha beta GAMMA"], raw=True)
        assert res.per_wec[0][1][0].words() == ref_words

    _run_threads(worker)


def test_cross_process_registration_locking(tmp_path):
    # two processes racing to register distinct WECs must both land in the
    # manifest (flock-serialized read-modify-write)
    import subprocess
    import sys
    import textwrap

    root = tmp_path / "cat"
    Database(root, create_if_missing=True)
    script = textwrap.dedent(
        """
        import sys
        from wecdb import Database
        db = Database(sys.argv[1])
        for i in range(10):
            db.register(f"algo:p{sys.argv[2]};dataset:d{i};dims:2;fold:0;unit:token")
        """
    )
    procs = [
        subprocess.Popen([sys.executable, "-c", script, str(root), str(k)])
        for k in range(2)
    ]
    for proc in procs:
        assert proc.wait() == 0
    db = Database(root)
    assert len(db.catalog.list_entries()) == 20


def test_parallel_imports_of_different_wecs(tmp_path):
    db = Database(tmp_path / "cat", create_if_missing=True)
    paths = []
    for i in range(4):
        path = tmp_path / f"w{i}.txt"
        write_wec_text(path, [f"t{i}_{j}" for j in range(200)], dims=3)
        paths.append(path)

    def worker(k):
        db.import_from_file(paths[k], f"algo:t;dataset:d{k};dims:3;fold:0;unit:token")

    _run_threads(worker, n=4)
    for k in range(4):
        assert db.vocab_size(f"algo:t;dataset:d{k};dims:3;fold:0;unit:token") == 200
