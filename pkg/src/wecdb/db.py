"""Single entry point: a catalog root plus open store handles.

    from wecdb import Database
    db = Database("/data/wecs", create_if_missing=True)
    db.import_from_file("glove.6b.50d.txt",
                        "algo:glove;dataset:6b;dims:50;fold:1;unit:token")
    res = db.get_vectors("algo:glove;dataset:6b;dims:{50,100};fold:1;unit:token",
                         cache, inputs=["Theory of computation."], raw=True)

Store handles are cached per database instance and closed with it.
"""

from __future__ import annotations

from pathlib import Path
import threading

import numpy as np

from . import phrases as phrases_mod
from . import store as store_mod
from .catalog import Catalog, CatalogEntry
from .identifier import WecIdentifier, parse_identifier
from .phrases import PhraseModel
from .pipeline import PipelineDescriptor, PreprocessCache, pipeline_for_identifier
from .retrieve import RetrievalResult, get_vectors as _get_vectors
from .store import ImportReport, WecStore


def _as_identifier(ident: WecIdentifier | str) -> WecIdentifier:
    return ident if isinstance(ident, WecIdentifier) else parse_identifier(ident)


class Database:
    def __init__(self, root: str | Path, create_if_missing: bool = False):
        self.catalog = Catalog(root, create_if_missing=create_if_missing)
        self._stores: dict[str, WecStore] = {}
        self._stores_lock = threading.Lock()
        self._phrase_models: dict[str, PhraseModel] = {}

    @property
    def root(self) -> Path:
        return self.catalog.root

    # -- registration and import ------------------------------------------

    def register(
        self,
        ident: WecIdentifier | str,
        pipeline: PipelineDescriptor | None = None,
        *,
        phrase_model: PhraseModel | None = None,
        vocab_join_max_len: int | None = None,
        source: str | Path = "",
        **pipeline_options,
    ) -> CatalogEntry:
        """Register a WEC; builds the metadata-implied pipeline when none given."""
        ident = _as_identifier(ident)
        if pipeline is None:
            pipeline = pipeline_for_identifier(ident, **pipeline_options)
        return self.catalog.register(
            ident,
            pipeline,
            phrase_model=phrase_model,
            vocab_join_max_len=vocab_join_max_len,
            source=source,
        )

    def import_from_file(
        self,
        path: str | Path,
        ident: WecIdentifier | str,
        *,
        on_duplicate: str = "reject",
        expect_header: str = "auto",
        on_malformed: str = "fail",
        pipeline: PipelineDescriptor | None = None,
        vocab_join_max_len: int | None = None,
        **pipeline_options,
    ) -> ImportReport:
        """Register and import a plain-text WEC file in one step.

        The identifier must be unused: registering twice is a duplicate-
        identifier error (identifiers are one-per-import citations). Use
        :meth:`register` plus :meth:`import_into` to split the two halves.
        """
        ident = _as_identifier(ident)
        self.register(
            ident,
            pipeline,
            vocab_join_max_len=vocab_join_max_len,
            source=str(path),
            **pipeline_options,
        )
        try:
            return self.import_into(path, ident, on_duplicate=on_duplicate,
                                    expect_header=expect_header, on_malformed=on_malformed)
        except Exception:
            # combined register+import is all-or-nothing: a failed import
            # must not leave a registered, empty WEC behind
            try:
                self.delete(ident, force=True)
            except Exception:
                pass
            raise

    def import_into(
        self,
        path: str | Path,
        ident: WecIdentifier | str,
        *,
        on_duplicate: str = "reject",
        expect_header: str = "auto",
        on_malformed: str = "fail",
    ) -> ImportReport:
        """Import into an already-registered WEC (the catalog half done separately)."""
        entry = self.catalog.require(_as_identifier(ident))
        store = self.open_store(entry, create=True)
        report = store_mod.import_from_file(
            path,
            store,
            entry.dims,
            on_duplicate=on_duplicate,
            expect_header=expect_header,
            on_malformed=on_malformed,
        )
        self.catalog.set_vocab_size(entry.identifier, store.count())
        return report

    # -- store access ------------------------------------------------------

    def open_store(self, entry: CatalogEntry, create: bool = False) -> WecStore:
        with self._stores_lock:
            handle = self._stores.get(entry.store_file)
            if handle is None:
                path = self.catalog.store_path(entry)
                handle = WecStore(path, dims=entry.dims, create=create or not path.exists())
                self._stores[entry.store_file] = handle
            return handle

    def get_vector(self, ident: WecIdentifier | str, word: str) -> np.ndarray | None:
        """Exact-match single lookup; absent words return None, never an error."""
        entry = self.catalog.require(_as_identifier(ident))
        return self.open_store(entry).get(word)

    def get_vectors_batch(
        self, ident: WecIdentifier | str, words: list[str]
    ) -> tuple[list[tuple[str, np.ndarray]], list[str]]:
        """(found pairs, missing words): one pair per distinct found word,
        missing in first-occurrence order."""
        entry = self.catalog.require(_as_identifier(ident))
        store = self.open_store(entry)
        hits = store.get_many(words)
        found: list[tuple[str, np.ndarray]] = []
        missing: list[str] = []
        seen: set[str] = set()
        for word in words:
            if word in seen:
                continue
            seen.add(word)
            if word in hits:
                found.append((word, hits[word]))
            else:
                missing.append(word)
        return found, missing

    def contains(self, ident: WecIdentifier | str, word: str) -> bool:
        entry = self.catalog.require(_as_identifier(ident))
        return self.open_store(entry).contains(word)

    def vocab_size(self, ident: WecIdentifier | str) -> int:
        entry = self.catalog.require(_as_identifier(ident))
        return self.open_store(entry).count()

    def iterate_vocab(self, ident: WecIdentifier | str):
        entry = self.catalog.require(_as_identifier(ident))
        return self.open_store(entry).iter_words()

    # -- preprocessing and phrases ------------------------------------------

    def join_phrases(self, entry: CatalogEntry, tokens: list[str]) -> list[str]:
        """Apply the WEC's configured level-2 joining, if any."""
        if entry.phrase_model_ref is not None:
            model = self._phrase_model(entry)
            return model.apply(tokens)
        if entry.vocab_join_max_len is not None:
            store = self.open_store(entry)
            return phrases_mod.apply_phrases_vocab(
                store.contains, tokens, max_len=entry.vocab_join_max_len
            )
        return tokens

    def _phrase_model(self, entry: CatalogEntry) -> PhraseModel:
        model = self._phrase_models.get(entry.phrase_model_ref)
        if model is None:
            model = PhraseModel.load(self.catalog.phrase_model_path(entry))
            self._phrase_models[entry.phrase_model_ref] = model
        return model

    def apply_phrases_vocab(
        self,
        ident: WecIdentifier | str,
        tokens: list[str],
        max_len: int = phrases_mod.DEFAULT_VOCAB_MAX_LEN,
    ) -> list[str]:
        entry = self.catalog.require(_as_identifier(ident))
        store = self.open_store(entry)
        return phrases_mod.apply_phrases_vocab(store.contains, tokens, max_len=max_len)

    def train_phrases(
        self,
        raw_lines,
        ident: WecIdentifier | str,
        *,
        discount: float = phrases_mod.DEFAULT_DISCOUNT,
        threshold: float = phrases_mod.DEFAULT_THRESHOLD,
        passes: int = phrases_mod.DEFAULT_PASSES,
        attach: bool = True,
    ) -> PhraseModel:
        """Tokenize raw lines with the WEC's bound pipeline and train a phrase model."""
        entry = self.catalog.require(_as_identifier(ident))
        corpus = (entry.pipeline.run(line) for line in raw_lines)
        model = phrases_mod.train_phrase_model(
            corpus, discount=discount, threshold=threshold, passes=passes
        )
        if attach:
            self.catalog.set_phrase_model(entry.identifier, model)
        return model

    # -- retrieval -----------------------------------------------------------

    def delete(self, ident: WecIdentifier | str, force: bool = False) -> None:
        """Close any cached handle for the WEC, then drop it from the catalog."""
        ident = _as_identifier(ident)
        entry = self.catalog.lookup(ident)
        if entry is not None:
            with self._stores_lock:
                handle = self._stores.pop(entry.store_file, None)
            if handle is not None:
                handle.close()
            if entry.phrase_model_ref is not None:
                self._phrase_models.pop(entry.phrase_model_ref, None)
        self.catalog.delete(ident, force=force)

    def get_vectors(
        self,
        query,
        cache: PreprocessCache | None = None,
        inputs=(),
        raw: bool = False,
        in_order: bool = False,
        as_tuple: bool = True,
    ) -> RetrievalResult:
        return _get_vectors(
            self, query, cache, inputs=inputs, raw=raw, in_order=in_order, as_tuple=as_tuple
        )

    def close(self) -> None:
        with self._stores_lock:
            for handle in self._stores.values():
                handle.close()
            self._stores.clear()

    def __enter__(self) -> "Database":
        return self

    def __exit__(self, *exc) -> None:
        self.close()
