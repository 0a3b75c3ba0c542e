"""Level-1 preprocessing: declarative, hashed, reproducible pipelines.

A :class:`PipelineDescriptor` is an ordered list of stages turning one raw
input line into a token list. The descriptor is bound to a WEC at
registration time and travels with it: its content hash covers the stage
list, every referenced stopword list's content, and the external command's
content hash, so identical hash means identical preprocessing behaviour.

Stages
------
``tokenize(rule_set)``
    Raw line to tokens. Built-in rule sets: ``default`` (split on Unicode
    whitespace, then split leading/trailing punctuation or symbol characters
    into separate tokens, keeping internal hyphens/underscores) and
    ``whitespace`` (plain split).
``case_fold(on|off)``
    Lowercase the line or every token. May appear before or after tokenize.
``stem(on|off)``
    Porter-stem alphabetic tokens.
``stopword_filter(ref|off)``
    Drop tokens found in the referenced list (``builtin:en`` or
    ``list:<sha16>`` for user-supplied files).
``strip_special(rule_set|off)``
    ``default`` drops tokens with no alphanumeric character.
``external(command, content_hash)``
    Pipe the current line (tokens are re-joined with single spaces) to a
    user command: one line on stdin, one line of whitespace-separated tokens
    on stdout per request. The process is started lazily, kept alive, and
    serialized with a lock, so concurrent callers never interleave lines.
    The command must flush stdout after every line (e.g. ``python3 -u``).

Serialization is a single line, stages joined by `` | ``, parameters
percent-encoded; it is stable and included verbatim in catalog manifests.
"""

from __future__ import annotations

import atexit
import functools
import hashlib
import subprocess
import threading
import unicodedata
import urllib.parse
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Callable, Iterable

from . import porter
from .errors import ExternalStageError, PipelineError

STAGE_NAMES = ("tokenize", "case_fold", "stem", "stopword_filter", "strip_special", "external")
TOKENIZE_RULE_SETS = ("default", "whitespace")
STRIP_RULE_SETS = ("default",)
BUILTIN_STOPWORDS = "builtin:en"

_HASH_PREFIX = "pipeline-hash-v1"


def _is_peelable(ch: str) -> bool:
    return unicodedata.category(ch)[0] in ("P", "S")


def _tokenize_default(line: str) -> list[str]:
    tokens: list[str] = []
    for chunk in line.split():
        lead: list[str] = []
        trail: list[str] = []
        while chunk and _is_peelable(chunk[0]):
            lead.append(chunk[0])
            chunk = chunk[1:]
        while chunk and _is_peelable(chunk[-1]):
            trail.append(chunk[-1])
            chunk = chunk[:-1]
        tokens.extend(lead)
        if chunk:
            tokens.append(chunk)
        tokens.extend(reversed(trail))
    return tokens


def _tokenize_whitespace(line: str) -> list[str]:
    return line.split()


_TOKENIZERS: dict[str, Callable[[str], list[str]]] = {
    "default": _tokenize_default,
    "whitespace": _tokenize_whitespace,
}


@functools.lru_cache(maxsize=None)
def builtin_stopwords_text() -> str:
    return resources.files("wecdb").joinpath("data/stopwords_en.txt").read_text("utf-8")


def load_stopword_file(path: str | Path) -> str:
    return Path(path).read_text("utf-8")


def content_ref(content: str) -> str:
    """Stable reference for a user stopword list, derived from its content."""
    return "list:" + hashlib.sha256(content.encode("utf-8")).hexdigest()[:16]


@dataclass(frozen=True)
class Stage:
    name: str
    params: tuple[str, ...]

    def serialize(self) -> str:
        quoted = ",".join(urllib.parse.quote(p, safe="") for p in self.params)
        return f"{self.name}({quoted})"


@dataclass(frozen=True)
class PipelineDescriptor:
    """Ordered stage list plus the resource contents its hash must cover.

    ``resources`` maps stopword-list refs to their full text. Instances are
    immutable; ``hash`` is computed once at construction.
    """

    stages: tuple[Stage, ...]
    resources: tuple[tuple[str, str], ...] = ()
    hash: str = field(init=False, default="")

    def __post_init__(self):
        self._validate()
        object.__setattr__(self, "hash", self._compute_hash())
        sets = {ref: frozenset(text.split()) for ref, text in self.resources}
        object.__setattr__(self, "_stopword_sets", sets)

    def _validate(self) -> None:
        resource_refs = {ref for ref, _ in self.resources}
        have_tokens = False
        for stage in self.stages:
            if stage.name not in STAGE_NAMES:
                raise PipelineError(f"unknown stage {stage.name!r}")
            if stage.name == "tokenize":
                if have_tokens:
                    raise PipelineError("tokenize stage after input is already tokenized")
                if len(stage.params) != 1 or stage.params[0] not in TOKENIZE_RULE_SETS:
                    raise PipelineError(f"unknown tokenize rule set {stage.params!r}")
                have_tokens = True
            elif stage.name == "external":
                if len(stage.params) != 2:
                    raise PipelineError("external stage needs (command, content_hash)")
                have_tokens = True
            elif stage.name == "case_fold":
                if stage.params not in (("on",), ("off",)):
                    raise PipelineError(f"case_fold parameter must be on/off, got {stage.params!r}")
            elif stage.name == "stem":
                if stage.params not in (("on",), ("off",)):
                    raise PipelineError(f"stem parameter must be on/off, got {stage.params!r}")
                if stage.params == ("on",) and not have_tokens:
                    raise PipelineError("stem stage requires tokenized input")
            elif stage.name == "stopword_filter":
                if len(stage.params) != 1:
                    raise PipelineError("stopword_filter takes one parameter")
                ref = stage.params[0]
                if ref != "off":
                    if not have_tokens:
                        raise PipelineError("stopword_filter stage requires tokenized input")
                    if ref not in resource_refs:
                        raise PipelineError(f"stopword list {ref!r} has no resolved content")
            elif stage.name == "strip_special":
                if len(stage.params) != 1 or (
                    stage.params[0] != "off" and stage.params[0] not in STRIP_RULE_SETS
                ):
                    raise PipelineError(f"unknown strip_special rule set {stage.params!r}")
                if stage.params[0] != "off" and not have_tokens:
                    raise PipelineError("strip_special stage requires tokenized input")
        if not have_tokens:
            raise PipelineError("pipeline must contain a tokenize or external stage")

    def _compute_hash(self) -> str:
        h = hashlib.sha256()
        h.update(_HASH_PREFIX.encode())
        h.update(b"\n")
        h.update(self.serialize().encode("utf-8"))
        for ref, content in sorted(self.resources):
            h.update(b"\x00resource\x00")
            h.update(ref.encode("utf-8"))
            h.update(b"\x00")
            h.update(content.encode("utf-8"))
        return h.hexdigest()

    def serialize(self) -> str:
        return " | ".join(stage.serialize() for stage in self.stages)

    @property
    def case_fold_enabled(self) -> bool:
        return any(s.name == "case_fold" and s.params == ("on",) for s in self.stages)

    @property
    def stem_enabled(self) -> bool:
        return any(s.name == "stem" and s.params == ("on",) for s in self.stages)

    def stopword_refs(self) -> list[str]:
        return [
            s.params[0]
            for s in self.stages
            if s.name == "stopword_filter" and s.params[0] != "off"
        ]

    def run(self, raw: str, cache: "PreprocessCache | None" = None) -> list[str]:
        return run_pipeline(self, raw, cache)


def build_pipeline(
    *,
    tokenizer: str = "default",
    case_fold: bool = False,
    stem: bool = False,
    stopwords: str | Path | None = None,
    strip_special: bool = False,
    external: tuple[str, str | Path | None] | None = None,
) -> PipelineDescriptor:
    """Assemble a descriptor from simple options.

    ``stopwords`` is ``None`` (off), ``"en"`` (bundled list), or a path to a
    UTF-8 file with one token per line; the file's content is captured into
    the descriptor immediately. ``external`` is ``(command, script_path)``;
    when ``script_path`` is given its bytes are hashed, otherwise the command
    string itself is. An external command replaces the tokenize stage.
    """
    stages: list[Stage] = []
    resources_map: dict[str, str] = {}
    if external is not None:
        command, script = external
        if script is not None:
            digest = hashlib.sha256(Path(script).read_bytes()).hexdigest()[:16]
        else:
            digest = hashlib.sha256(command.encode("utf-8")).hexdigest()[:16]
        stages.append(Stage("external", (command, digest)))
    else:
        stages.append(Stage("tokenize", (tokenizer,)))
    stages.append(Stage("case_fold", ("on" if case_fold else "off",)))
    stages.append(Stage("stem", ("on" if stem else "off",)))
    if stopwords is None:
        stages.append(Stage("stopword_filter", ("off",)))
    elif stopwords == "en" or stopwords == BUILTIN_STOPWORDS:
        content = builtin_stopwords_text()
        resources_map[BUILTIN_STOPWORDS] = content
        stages.append(Stage("stopword_filter", (BUILTIN_STOPWORDS,)))
    else:
        content = load_stopword_file(stopwords)
        ref = content_ref(content)
        resources_map[ref] = content
        stages.append(Stage("stopword_filter", (ref,)))
    stages.append(Stage("strip_special", ("default" if strip_special else "off",)))
    return PipelineDescriptor(tuple(stages), tuple(sorted(resources_map.items())))


def pipeline_for_identifier(ident, **options) -> PipelineDescriptor:
    """Default pipeline implied by a WEC's metadata.

    ``fold:1`` turns case folding on; ``unit:stem`` turns stemming on. Other
    options pass through to :func:`build_pipeline`.
    """
    return build_pipeline(
        case_fold=ident.fold == 1,
        stem=ident.unit == "stem",
        **options,
    )


def parse_pipeline(text: str, resolver: Callable[[str], str]) -> PipelineDescriptor:
    """Inverse of :meth:`PipelineDescriptor.serialize`.

    ``resolver`` maps a stopword-list ref to its content text (the catalog
    resolves ``list:*`` refs against its own directory).
    """
    stages: list[Stage] = []
    resources_map: dict[str, str] = {}
    for part in text.split(" | "):
        part = part.strip()
        if not part.endswith(")") or "(" not in part:
            raise PipelineError(f"malformed stage {part!r}")
        name, _, rest = part.partition("(")
        params = tuple(
            urllib.parse.unquote(p) for p in rest[:-1].split(",")
        ) if rest[:-1] else ()
        if name == "stopword_filter" and params and params[0] != "off":
            resources_map[params[0]] = resolver(params[0])
        stages.append(Stage(name, params))
    return PipelineDescriptor(tuple(stages), tuple(sorted(resources_map.items())))


class PreprocessCache:
    """Memo from (pipeline hash, raw line) to its token list.

    Shared across retrievals so WECs with identical pipelines preprocess
    each distinct input line once. Thread-safe; unbounded (desk-scale
    inputs; callers own the lifetime).
    """

    def __init__(self):
        self._entries: dict[tuple[str, str], tuple[str, ...]] = {}
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    def get(self, pipeline_hash: str, raw: str) -> tuple[str, ...] | None:
        with self._lock:
            entry = self._entries.get((pipeline_hash, raw))
            if entry is None:
                self.misses += 1
            else:
                self.hits += 1
            return entry

    def put(self, pipeline_hash: str, raw: str, tokens: Iterable[str]) -> None:
        with self._lock:
            self._entries[(pipeline_hash, raw)] = tuple(tokens)

    def __len__(self) -> int:
        return len(self._entries)


class _ExternalProcess:
    """One persistent external-stage process, one request/response at a time."""

    def __init__(self, command: str):
        self.command = command
        self.lock = threading.Lock()
        self.proc: subprocess.Popen | None = None

    def _ensure_started(self) -> subprocess.Popen:
        if self.proc is None or self.proc.poll() is not None:
            self.proc = subprocess.Popen(
                self.command,
                shell=True,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
            )
        return self.proc

    def process_line(self, line: str) -> list[str]:
        with self.lock:
            proc = self._ensure_started()
            try:
                proc.stdin.write(line.replace("\n", " ") + "\n")
                proc.stdin.flush()
                out = proc.stdout.readline()
            except (BrokenPipeError, OSError) as exc:
                raise ExternalStageError(
                    f"external stage {self.command!r} failed: {exc}"
                ) from exc
            if out == "":
                code = proc.poll()
                raise ExternalStageError(
                    f"external stage {self.command!r} closed its output"
                    + (f" (exit code {code})" if code is not None else "")
                )
            return out.split()

    def close(self) -> None:
        if self.proc is not None and self.proc.poll() is None:
            self.proc.stdin.close()
            self.proc.wait(timeout=5)
        self.proc = None


_external_registry: dict[str, _ExternalProcess] = {}
_external_registry_lock = threading.Lock()


def _external_for(command: str) -> _ExternalProcess:
    with _external_registry_lock:
        runner = _external_registry.get(command)
        if runner is None:
            runner = _ExternalProcess(command)
            _external_registry[command] = runner
        return runner


@atexit.register
def _shutdown_external_processes() -> None:
    for runner in _external_registry.values():
        try:
            runner.close()
        except Exception:
            pass


def run_pipeline(
    p: PipelineDescriptor, raw: str, cache: PreprocessCache | None = None
) -> list[str]:
    """Run one raw line through the pipeline; deterministic for a given hash.

    Results with and without a cache are identical; the cache is consulted
    before any stage runs and updated afterwards.
    """
    if cache is not None:
        cached = cache.get(p.hash, raw)
        if cached is not None:
            return list(cached)
    value: str | list[str] = raw
    for stage in p.stages:
        value = _apply_stage(p, stage, value)
    assert isinstance(value, list)
    if cache is not None:
        cache.put(p.hash, raw, value)
    return value


def _apply_stage(p: PipelineDescriptor, stage: Stage, value: str | list[str]):
    if stage.name == "tokenize":
        return _TOKENIZERS[stage.params[0]](value)
    if stage.name == "external":
        line = value if isinstance(value, str) else " ".join(value)
        return _external_for(stage.params[0]).process_line(line)
    if stage.name == "case_fold":
        if stage.params == ("off",):
            return value
        if isinstance(value, str):
            return value.lower()
        return [t.lower() for t in value]
    if stage.name == "stem":
        if stage.params == ("off",):
            return value
        return [porter.stem(t) if t.isascii() and t.isalpha() else t for t in value]
    if stage.name == "stopword_filter":
        if stage.params == ("off",):
            return value
        stopset = p._stopword_sets[stage.params[0]]
        return [t for t in value if t not in stopset]
    if stage.name == "strip_special":
        if stage.params == ("off",):
            return value
        return [t for t in value if any(ch.isalnum() for ch in t)]
    raise PipelineError(f"unknown stage {stage.name!r}")
