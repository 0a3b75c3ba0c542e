"""Multi-WEC vector retrieval: expand the query, preprocess, look up, nest.

The result mirrors the identifier-first nesting users iterate over:

    RetrievalResult.per_wec          one (normalized identifier, units) per
                                     expanded query identifier, in expansion
                                     order
    UnitResult (one per input unit)  raw input, tokens used for lookup,
                                     (word, vector) pairs, missing tokens

With ``in_order=False`` (the default) ``pairs`` holds one entry per
distinct found word, in first-seen order; ``in_order=True`` repeats an
entry for every token occurrence, in token order. ``missing`` always lists
distinct not-found tokens in first-seen order. With ``as_tuple=False`` the
``pairs`` lists contain bare vectors in the same order, words omitted.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import PipelineError, WecdbError
from .pipeline import PreprocessCache, run_pipeline


@dataclass
class UnitResult:
    """Lookup outcome for one input unit against one WEC."""

    raw: str
    tokens: list[str]
    pairs: list
    missing: list[str]

    def words(self) -> list[str]:
        return [w for w, _ in self.pairs]

    def vectors(self) -> list[np.ndarray]:
        return [v for _, v in self.pairs]


@dataclass
class RetrievalResult:
    per_wec: list[tuple[str, list[UnitResult]]] = field(default_factory=list)

    def __iter__(self):
        return iter(self.per_wec)

    def __len__(self) -> int:
        return len(self.per_wec)

    def identifiers(self) -> list[str]:
        return [norm for norm, _ in self.per_wec]

    def to_jsonable(self, as_tuple: bool = True) -> dict:
        """Stable machine-readable form (identifier / raw / tokens / pairs / missing)."""
        results = []
        for norm, units in self.per_wec:
            unit_docs = []
            for unit in units:
                if as_tuple:
                    pairs = [[w, [float(x) for x in v]] for w, v in unit.pairs]
                else:
                    pairs = [[float(x) for x in v] for v in unit.pairs]
                unit_docs.append(
                    {
                        "raw": unit.raw,
                        "tokens": list(unit.tokens),
                        "pairs": pairs,
                        "missing": list(unit.missing),
                    }
                )
            results.append({"identifier": norm, "units": unit_docs})
        return {"results": results}


def lookup_unit(store, raw_text: str, tokens: list[str], in_order: bool) -> UnitResult:
    """Assemble one UnitResult from a store and a ready token list."""
    found = store.get_many(tokens)
    pairs = []
    missing = []
    seen: set[str] = set()
    if in_order:
        for token in tokens:
            vec = found.get(token)
            if vec is not None:
                pairs.append((token, vec))
            elif token not in seen:
                seen.add(token)
                missing.append(token)
    else:
        for token in tokens:
            if token in seen:
                continue
            seen.add(token)
            vec = found.get(token)
            if vec is None:
                missing.append(token)
            else:
                pairs.append((token, vec))
    return UnitResult(raw=raw_text, tokens=list(tokens), pairs=pairs, missing=missing)


def get_vectors(
    db,
    query,
    cache: PreprocessCache | None = None,
    inputs=(),
    raw: bool = False,
    in_order: bool = False,
    as_tuple: bool = True,
) -> RetrievalResult:
    """Retrieve vectors for every input unit from every WEC the query names.

    ``query`` is a grid query string (or an already-parsed
    :class:`~wecdb.identifier.WecQuery`). With ``raw=True`` each input unit
    is a string and is run through the owning WEC's bound pipeline (then
    its phrase model or vocabulary join, if configured) via the shared
    ``cache``; with ``raw=False`` each unit is a ready token list and the
    pipeline is bypassed.
    """
    from .identifier import WecQuery, parse_query

    if not isinstance(query, WecQuery):
        query = parse_query(query)
    result = RetrievalResult()
    for ident in query.expanded:
        entry = db.catalog.require(ident)
        store = db.open_store(entry)
        units: list[UnitResult] = []
        for unit in inputs:
            if raw:
                if not isinstance(unit, str):
                    raise WecdbError("raw=True expects each input unit to be a string")
                try:
                    tokens = run_pipeline(entry.pipeline, unit, cache)
                except PipelineError as exc:
                    raise PipelineError(f"[{entry.normalized}] {exc}") from exc
                tokens = db.join_phrases(entry, tokens)
                raw_text = unit
            else:
                if isinstance(unit, str):
                    raise WecdbError("raw=False expects each input unit to be a token list")
                tokens = list(unit)
                raw_text = ""
            units.append(lookup_unit(store, raw_text, tokens, in_order))
        result.per_wec.append((entry.normalized, units))
    if not as_tuple:
        for _, units in result.per_wec:
            for unit in units:
                unit.pairs = [v for _, v in unit.pairs]
    return result
