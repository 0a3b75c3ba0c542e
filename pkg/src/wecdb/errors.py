"""Exception hierarchy.

Everything raised on purpose by this package derives from :class:`WecdbError`,
so callers (and the CLI) can catch one type. Parsing and validation problems
are ``ValueError`` subclasses as well, which keeps them idiomatic for library
users who never import this module.
"""


class WecdbError(Exception):
    """Base class for all errors raised by wecdb."""


class IdentifierError(WecdbError, ValueError):
    """Malformed identifier or query string, or an invalid attribute value."""


class CatalogError(WecdbError):
    """Catalog-level failure (registration, persistence, deletion)."""


class DuplicateEntryError(CatalogError):
    """A WEC with the same normalized identifier is already registered."""


class UnknownWecError(CatalogError):
    """An operation referenced an identifier with no catalog entry."""


class StoreError(WecdbError):
    """Vector store failure outside of import."""


class WecImportError(WecdbError):
    """Import of a plain-text WEC file failed; the store is left unchanged."""


class DuplicateWordError(WecImportError):
    """Same word appears twice in the input under the ``reject`` policy."""

    def __init__(self, word: str, line: int):
        super().__init__(f"duplicate word {word!r} at line {line}")
        self.word = word
        self.line = line


class MalformedLineError(WecImportError):
    """A data line could not be parsed (field count, float syntax, blank)."""

    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class HeaderError(WecImportError):
    """Header line missing, malformed, or inconsistent with the catalog."""


class PipelineError(WecdbError):
    """Invalid pipeline description or a stage failed at run time."""


class ExternalStageError(PipelineError):
    """The external preprocessing command failed or broke protocol."""


class EmptyCorpusError(WecdbError):
    """Phrase training was given a corpus with no tokens."""


class AnalysisError(WecdbError):
    """Invalid input to a similarity/ranking computation."""


class UndefinedDistanceError(AnalysisError):
    """Distance is undefined for the given vectors (e.g. zero norm)."""
