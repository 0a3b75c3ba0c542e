"""On-disk vector store: one file per WEC, unique word index, lazy lookup.

Each WEC lives in a single SQLite file with a clustered primary-key table,
``word TEXT PRIMARY KEY, vector BLOB``. The blob is the little-endian
IEEE-754 binary32 encoding of the vector, so an n-record, d-dim store costs
about ``n * (4d + len(word))`` plus index overhead -- far below the plain
text it was imported from at typical float print widths. Point lookups go
through the primary-key B-tree and never scan the store; that is the whole
point: retrieval cost depends on the words requested, not the collection
size.

SQLite is an implementation detail behind :class:`WecStore`; any engine
providing a unique key, point lookup, atomic batch writes, and a single
file would do. Concurrent readers are safe; an import takes the writer
lock on its own file only.

Text format accepted by :func:`import_from_file`: UTF-8, one record per
line, fields separated by single spaces, word first, then exactly ``dims``
decimal floats. An optional first line of exactly two integers is treated
as a ``count dims`` header (word2vec text convention). Floats are parsed
to the nearest binary64 and then rounded to the nearest binary32
(round-half-even); re-retrieval is bit-exact against that conversion.
"""

from __future__ import annotations

import re
import sqlite3
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from .errors import (
    DuplicateWordError,
    HeaderError,
    MalformedLineError,
    StoreError,
    WecImportError,
)

_BATCH_ROWS = 4096
_HEADER_RE = re.compile(r"(\d+) (\d+)")


@dataclass
class ImportReport:
    """Outcome of one plain-text import."""

    imported: int = 0
    skipped_duplicates: int = 0
    malformed_lines: list[tuple[int, str]] = field(default_factory=list)
    elapsed: float = 0.0
    bytes_text: int = 0
    bytes_store: int = 0

    @property
    def compression_ratio(self) -> float:
        return self.bytes_store / self.bytes_text if self.bytes_text else 0.0


class WecStore:
    """Single-file store of ``<word, float32 vector>`` records for one WEC.

    One instance may be shared between threads: every thread gets its own
    SQLite connection (thread-local), so concurrent readers never contend
    in Python, and the engine's file locking serializes the one writer an
    import brings along.
    """

    def __init__(self, path: str | Path, dims: int | None = None, create: bool = False):
        self.path = Path(path)
        if not create and not self.path.exists():
            raise StoreError(f"store file {self.path} does not exist")
        self._local = threading.local()
        self._all_conns: list[sqlite3.Connection] = []
        self._conns_lock = threading.Lock()
        try:
            if create:
                conn = self._conn
                conn.execute(
                    "CREATE TABLE IF NOT EXISTS vectors"
                    " (word TEXT PRIMARY KEY NOT NULL, vector BLOB NOT NULL) WITHOUT ROWID"
                )
                conn.execute("CREATE TABLE IF NOT EXISTS meta (key TEXT PRIMARY KEY, value TEXT)")
                if dims is not None:
                    conn.execute("INSERT OR REPLACE INTO meta VALUES ('dims', ?)", (str(dims),))
            row = self._conn.execute("SELECT value FROM meta WHERE key='dims'").fetchone()
        except sqlite3.Error as exc:
            raise StoreError(f"{self.path} is not a readable vector store: {exc}") from exc
        self.dims = int(row[0]) if row else dims

    @property
    def _conn(self) -> sqlite3.Connection:
        conn = getattr(self._local, "conn", None)
        if conn is None:
            # check_same_thread off only to allow close() from the owner;
            # by construction each connection is used by a single thread.
            conn = sqlite3.connect(
                self.path, isolation_level=None, timeout=30.0, check_same_thread=False
            )
            self._local.conn = conn
            with self._conns_lock:
                self._all_conns.append(conn)
        return conn

    def get(self, word: str) -> np.ndarray | None:
        row = self._conn.execute(
            "SELECT vector FROM vectors WHERE word = ?", (word,)
        ).fetchone()
        if row is None:
            return None
        return np.frombuffer(row[0], dtype="<f4")

    def get_many(self, words: Iterable[str]) -> dict[str, np.ndarray]:
        """Found subset of ``words`` as a dict; one indexed query per chunk.

        Much cheaper than per-word :meth:`get` for batches: the whole chunk
        shares one read transaction.
        """
        out: dict[str, np.ndarray] = {}
        chunk: list[str] = []
        seen: set[str] = set()
        for word in words:
            if word in seen:
                continue
            seen.add(word)
            chunk.append(word)
            if len(chunk) >= 400:
                self._fetch_chunk(chunk, out)
                chunk = []
        if chunk:
            self._fetch_chunk(chunk, out)
        return out

    def _fetch_chunk(self, chunk: list[str], out: dict[str, np.ndarray]) -> None:
        marks = ",".join("?" * len(chunk))
        rows = self._conn.execute(
            f"SELECT word, vector FROM vectors WHERE word IN ({marks})", chunk
        ).fetchall()
        for word, blob in rows:
            out[word] = np.frombuffer(blob, dtype="<f4")

    def contains(self, word: str) -> bool:
        row = self._conn.execute(
            "SELECT 1 FROM vectors WHERE word = ? LIMIT 1", (word,)
        ).fetchone()
        return row is not None

    def count(self) -> int:
        return self._conn.execute("SELECT count(*) FROM vectors").fetchone()[0]

    def __len__(self) -> int:
        return self.count()

    def iter_words(self) -> Iterator[str]:
        cursor = self._conn.execute("SELECT word FROM vectors")
        while True:
            rows = cursor.fetchmany(_BATCH_ROWS)
            if not rows:
                return
            for (word,) in rows:
                yield word

    def put_many(self, records: Iterable[tuple[str, bytes]], replace: bool = False) -> int:
        """Bulk insert inside one transaction; used by tests and tooling."""
        verb = "INSERT OR REPLACE" if replace else "INSERT"
        self._conn.execute("BEGIN")
        try:
            n = 0
            cur = self._conn.cursor()
            batch: list[tuple[str, bytes]] = []
            for record in records:
                batch.append(record)
                if len(batch) >= _BATCH_ROWS:
                    cur.executemany(f"{verb} INTO vectors VALUES (?, ?)", batch)
                    n += len(batch)
                    batch.clear()
            if batch:
                cur.executemany(f"{verb} INTO vectors VALUES (?, ?)", batch)
                n += len(batch)
            self._conn.execute("COMMIT")
            return n
        except Exception:
            self._conn.execute("ROLLBACK")
            raise

    def close(self) -> None:
        with self._conns_lock:
            for conn in self._all_conns:
                conn.close()
            self._all_conns.clear()
        self._local = threading.local()

    def __enter__(self) -> "WecStore":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def parse_vector_text(fields: list[str]) -> bytes:
    """Pinned float conversion: decimal text -> binary64 -> binary32, little-endian."""
    return np.array(fields, dtype="<f8").astype("<f4").tobytes()


def _detect_header(first_line: str, mode: str) -> tuple[int, int] | None:
    match = _HEADER_RE.fullmatch(first_line.rstrip("\n"))
    if mode == "yes":
        if match is None:
            raise HeaderError(f"expected a 'count dims' header line, got {first_line!r}")
        return int(match.group(1)), int(match.group(2))
    if mode == "no":
        return None
    return (int(match.group(1)), int(match.group(2))) if match else None


def import_from_file(
    path: str | Path,
    store: WecStore,
    dims: int,
    *,
    on_duplicate: str = "reject",
    expect_header: str = "auto",
    on_malformed: str = "fail",
) -> ImportReport:
    """Import a plain-text WEC file into an empty store, atomically.

    ``on_duplicate``: ``reject`` fails on the first repeated word, naming it
    and its line; ``keep_first`` keeps the first occurrence and counts the
    rest. ``expect_header``: ``auto`` treats a first line of exactly two
    integers as a ``count dims`` header; ``yes`` requires one; ``no`` takes
    every line as data. ``on_malformed``: ``fail`` aborts on the first bad
    line; ``skip`` records (line, reason) in the report and continues.

    Any failure rolls the store back to empty; a partial import is never
    visible.
    """
    if on_duplicate not in ("reject", "keep_first"):
        raise ValueError(f"invalid on_duplicate policy {on_duplicate!r}")
    if expect_header not in ("auto", "yes", "no"):
        raise ValueError(f"invalid expect_header mode {expect_header!r}")
    if on_malformed not in ("fail", "skip"):
        raise ValueError(f"invalid on_malformed mode {on_malformed!r}")
    path = Path(path)
    if store.count() > 0:
        raise WecImportError(f"store {store.path} already contains records")

    report = ImportReport(bytes_text=path.stat().st_size)
    started = time.perf_counter()
    conn = store._conn
    conn.execute("PRAGMA journal_mode=MEMORY")
    conn.execute("PRAGMA synchronous=OFF")
    conn.execute("BEGIN")
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = enumerate(fh, start=1)
            first = next(lines, None)
            pending: list[tuple[int, str, bytes]] = []
            if first is not None:
                header = _detect_header(first[1], expect_header)
                if header is not None:
                    if header[1] != dims:
                        raise HeaderError(
                            f"header declares dims {header[1]}, catalog dims is {dims}"
                        )
                else:
                    pending.append(_parse_line(first[0], first[1], dims, report, on_malformed))
            for lineno, line in lines:
                pending.append(_parse_line(lineno, line, dims, report, on_malformed))
                if len(pending) >= _BATCH_ROWS:
                    _insert_batch(conn, pending, on_duplicate, report)
                    pending.clear()
            _insert_batch(conn, pending, on_duplicate, report)
        conn.execute("COMMIT")
    except Exception:
        conn.execute("ROLLBACK")
        raise
    finally:
        conn.execute("PRAGMA synchronous=NORMAL")
        conn.execute("PRAGMA journal_mode=DELETE")

    report.elapsed = time.perf_counter() - started
    report.bytes_store = store.path.stat().st_size
    return report


def _parse_line(
    lineno: int, line: str, dims: int, report: ImportReport, on_malformed: str
) -> tuple[int, str, bytes] | None:
    fields = line.split()
    if len(fields) != dims + 1:
        reason = (
            "blank line"
            if not fields
            else f"expected {dims + 1} fields (word + {dims} floats), got {len(fields)}"
        )
        return _malformed(lineno, reason, report, on_malformed)
    try:
        blob = parse_vector_text(fields[1:])
    except (ValueError, OverflowError):
        return _malformed(lineno, "unparseable float value", report, on_malformed)
    return (lineno, fields[0], blob)


def _malformed(lineno: int, reason: str, report: ImportReport, on_malformed: str) -> None:
    if on_malformed == "fail":
        raise MalformedLineError(lineno, reason)
    report.malformed_lines.append((lineno, reason))
    return None


def _insert_batch(
    conn: sqlite3.Connection,
    pending: list[tuple[int, str, bytes] | None],
    on_duplicate: str,
    report: ImportReport,
) -> None:
    rows = [(word, blob) for item in pending if item is not None for _, word, blob in [item]]
    if not rows:
        return
    cur = conn.cursor()
    if on_duplicate == "keep_first":
        cur.executemany("INSERT OR IGNORE INTO vectors VALUES (?, ?)", rows)
        report.imported += cur.rowcount
        report.skipped_duplicates += len(rows) - cur.rowcount
        return
    conn.execute("SAVEPOINT batch")
    try:
        cur.executemany("INSERT INTO vectors VALUES (?, ?)", rows)
        conn.execute("RELEASE batch")
        report.imported += len(rows)
    except sqlite3.IntegrityError:
        conn.execute("ROLLBACK TO batch")
        conn.execute("RELEASE batch")
        for item in pending:
            if item is None:
                continue
            lineno, word, blob = item
            try:
                cur.execute("INSERT INTO vectors VALUES (?, ?)", (word, blob))
            except sqlite3.IntegrityError:
                raise DuplicateWordError(word, lineno) from None
        raise WecImportError("duplicate insert failed on batch but not on replay")
