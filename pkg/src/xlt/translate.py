"""Translator abstraction: decoding configs, backends, mocks, batch and
roundtrip translation of datasets.

Backends only map text to text; all dataset bookkeeping (provenance,
language relabeling, batching, ordering) lives here.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from enum import Enum
from typing import Iterable, Mapping, Optional, Sequence

from .corpus import (
    Dataset,
    LanguageTag,
    Provenance,
    SequenceInstance,
    TaskKind,
)
from .errors import BackendFailure, UndeclaredPair, UnsupportedLanguage

DEFAULT_BEAM_SIZE = 5
DEFAULT_TOP_P = 0.8
DEFAULT_MAX_BATCH = 32


class DecodingMode(Enum):
    GREEDY = "greedy"
    BEAM = "beam"
    NUCLEUS = "nucleus"


@dataclass(frozen=True)
class DecodingConfig:
    """How a backend should decode; exactly one mode's knobs may be set."""

    mode: DecodingMode = DecodingMode.BEAM
    beam_size: Optional[int] = DEFAULT_BEAM_SIZE
    top_p: Optional[float] = None
    seed: Optional[int] = None

    def __post_init__(self):
        if self.mode is DecodingMode.BEAM:
            if self.beam_size is None or self.beam_size < 1:
                raise ValueError("beam decoding needs beam_size >= 1")
            if self.top_p is not None or self.seed is not None:
                raise ValueError("beam decoding must not set top_p/seed")
        elif self.mode is DecodingMode.NUCLEUS:
            if self.top_p is None or not (0.0 < self.top_p <= 1.0):
                raise ValueError("nucleus decoding needs top_p in (0, 1]")
            if self.beam_size is not None:
                raise ValueError("nucleus decoding must not set beam_size")
        else:
            if self.beam_size is not None or self.top_p is not None or self.seed is not None:
                raise ValueError("greedy decoding takes no parameters")

    @classmethod
    def greedy(cls) -> "DecodingConfig":
        return cls(DecodingMode.GREEDY, beam_size=None)

    @classmethod
    def beam(cls, beam_size: int = DEFAULT_BEAM_SIZE) -> "DecodingConfig":
        return cls(DecodingMode.BEAM, beam_size=beam_size)

    @classmethod
    def nucleus(cls, top_p: float = DEFAULT_TOP_P, seed: int = 0) -> "DecodingConfig":
        return cls(DecodingMode.NUCLEUS, beam_size=None, top_p=top_p, seed=seed)

    def to_wire(self) -> dict:
        return {"mode": self.mode.value, "beam_size": self.beam_size,
                "top_p": self.top_p, "seed": self.seed}

    @classmethod
    def from_wire(cls, obj: Mapping) -> "DecodingConfig":
        mode = DecodingMode(obj["mode"])
        beam_size = obj.get("beam_size")
        if mode is DecodingMode.BEAM and beam_size is None:
            beam_size = DEFAULT_BEAM_SIZE
        top_p = obj.get("top_p")
        if mode is DecodingMode.NUCLEUS and top_p is None:
            top_p = DEFAULT_TOP_P
        return cls(mode, beam_size=beam_size, top_p=top_p, seed=obj.get("seed"))


@dataclass(frozen=True)
class TranslationRequest:
    text: str
    src: LanguageTag
    tgt: LanguageTag

    def __post_init__(self):
        if self.src == self.tgt:
            raise ValueError(f"src and tgt must differ, both {self.src}")


class TranslatorBackend(ABC):
    """Maps batches of texts between languages.

    ``supported_languages()`` returns None when the backend accepts any
    language (mock default). Output order matches request order; greedy and
    beam decoding are deterministic, nucleus is deterministic per seed.
    """

    name: str = "translator"
    concurrent: bool = True

    @abstractmethod
    def supported_languages(self) -> Optional[frozenset[LanguageTag]]:
        ...

    @abstractmethod
    def translate_batch(self, requests: Sequence[TranslationRequest],
                        decoding: DecodingConfig) -> list[str]:
        ...

    def supports(self, language: LanguageTag) -> bool:
        supported = self.supported_languages()
        return supported is None or language in supported


class _MockTranslator(TranslatorBackend):
    concurrent = True

    def __init__(self, languages: Optional[Iterable[LanguageTag]] = None):
        self._languages = frozenset(languages) if languages is not None else None

    def supported_languages(self) -> Optional[frozenset[LanguageTag]]:
        return self._languages

    def _check_pair(self, request: TranslationRequest, index: int) -> None:
        for lang in (request.src, request.tgt):
            if not self.supports(lang):
                raise UnsupportedLanguage(f"request {index}: {lang} not supported by {self.name}")

    def translate_batch(self, requests: Sequence[TranslationRequest],
                        decoding: DecodingConfig) -> list[str]:
        out = []
        for i, request in enumerate(requests):
            self._check_pair(request, i)
            out.append(self._translate_one(request, decoding, i))
        return out

    def _translate_one(self, request: TranslationRequest,
                       decoding: DecodingConfig, index: int) -> str:
        raise NotImplementedError


class IdentityTranslator(_MockTranslator):
    """Returns the input text unchanged."""

    name = "mock:identity"

    def _translate_one(self, request, decoding, index):
        return request.text


class DictionaryTranslator(_MockTranslator):
    """Token-wise lexicon substitution; unknown tokens pass through.

    ``lexicons`` maps a (src, tgt) pair to a word->word dict. Requests for
    pairs without a lexicon raise UndeclaredPair.
    """

    name = "mock:dict"

    def __init__(self, lexicons: Mapping[tuple[LanguageTag, LanguageTag], Mapping[str, str]],
                 languages: Optional[Iterable[LanguageTag]] = None):
        if languages is None:
            langs = set()
            for src, tgt in lexicons:
                langs.add(src)
                langs.add(tgt)
            languages = langs
        super().__init__(languages)
        self._lexicons = {pair: dict(lex) for pair, lex in lexicons.items()}

    def lexicon(self, src: LanguageTag, tgt: LanguageTag) -> Mapping[str, str]:
        try:
            return self._lexicons[(src, tgt)]
        except KeyError:
            raise UndeclaredPair(f"no lexicon for {src}->{tgt}") from None

    def _translate_one(self, request, decoding, index):
        lex = self.lexicon(request.src, request.tgt)
        return " ".join(lex.get(tok, tok) for tok in request.text.split(" ")) \
            if request.text else request.text


class PermutationTranslator(_MockTranslator):
    """Reverses whitespace token order; the permutation is exported so an
    oracle aligner can mirror it."""

    name = "mock:reverse"

    def _translate_one(self, request, decoding, index):
        return " ".join(reversed(request.text.split(" "))) if request.text else request.text

    @staticmethod
    def permutation(i: int, n: int) -> int:
        """Target index of source token ``i`` in an ``n``-token sentence."""
        return n - 1 - i


class BoomTranslator(_MockTranslator):
    """Identity translator that fails with a model error on any text
    containing the token ``BOOM``, reporting the failing batch index.

    Exists for conformance testing of positional error reporting.
    """

    name = "mock:boom"

    def _translate_one(self, request, decoding, index):
        if "BOOM" in request.text.split(" "):
            raise BackendFailure(f"refusing to translate text {index}",
                                 code="boom", index=index, transient=False)
        return request.text


def identity_translator(languages: Optional[Iterable[LanguageTag]] = None) -> IdentityTranslator:
    return IdentityTranslator(languages)


def dictionary_translator(lexicons, languages=None) -> DictionaryTranslator:
    return DictionaryTranslator(lexicons, languages)


def permutation_translator(languages: Optional[Iterable[LanguageTag]] = None) -> PermutationTranslator:
    return PermutationTranslator(languages)


def translate_texts(backend: TranslatorBackend, texts: Sequence[str],
                    src: LanguageTag, tgt: LanguageTag, decoding: DecodingConfig,
                    *, max_batch: int = DEFAULT_MAX_BATCH, jobs: int = 1) -> list[str]:
    """Translate texts preserving order, chunked at ``max_batch``.

    Chunks go out concurrently (up to ``jobs``) only when the backend
    declares it accepts concurrent requests; results are reassembled in
    request order regardless of completion order.
    """
    for lang in (src, tgt):
        if not backend.supports(lang):
            raise UnsupportedLanguage(f"{lang} not supported by {backend.name}")
    if max_batch < 1:
        raise ValueError("max_batch must be >= 1")
    requests = [TranslationRequest(text, src, tgt) for text in texts]
    chunks = [(start, requests[start:start + max_batch])
              for start in range(0, len(requests), max_batch)]

    def run_chunk(start_and_chunk):
        start, chunk = start_and_chunk
        try:
            result = backend.translate_batch(chunk, decoding)
        except BackendFailure as exc:
            if exc.index is not None:
                exc.index += start
            raise
        if len(result) != len(chunk):
            raise BackendFailure(
                f"backend returned {len(result)} translations for {len(chunk)} requests",
                code="protocol", index=start)
        return result

    if jobs > 1 and backend.concurrent and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(run_chunk, chunks))
    else:
        parts = [run_chunk(c) for c in chunks]
    out: list[str] = []
    for part in parts:
        out.extend(part)
    return out


def translate_dataset(backend: TranslatorBackend, dataset: Dataset,
                      src: LanguageTag, tgt: LanguageTag, decoding: DecodingConfig,
                      *, max_batch: int = DEFAULT_MAX_BATCH, jobs: int = 1,
                      provenance: Provenance = Provenance.TRANSLATED,
                      pivot: Optional[LanguageTag] = None) -> Dataset:
    """Translate a sequence-task dataset; labels copy over unchanged.

    NLI translates text_a and text_b independently. Token-level datasets
    have no tags after translation, so they go through the align module's
    projection helpers instead.
    """
    if dataset.task is TaskKind.NER:
        raise ValueError("token-level datasets need label projection; "
                         "use align.translate_and_project")
    for inst in dataset.instances:
        if inst.language != src:
            raise ValueError(f"instance {inst.id} is {inst.language}, expected {src}")

    texts: list[str] = []
    for inst in dataset.instances:
        assert isinstance(inst, SequenceInstance)
        texts.append(inst.text_a)
        if dataset.task is TaskKind.NLI:
            assert inst.text_b is not None
            texts.append(inst.text_b)
    translated = translate_texts(backend, texts, src, tgt, decoding,
                                 max_batch=max_batch, jobs=jobs)

    out: list[SequenceInstance] = []
    cursor = 0
    for inst in dataset.instances:
        assert isinstance(inst, SequenceInstance)
        text_a = translated[cursor]
        cursor += 1
        text_b = None
        if dataset.task is TaskKind.NLI:
            text_b = translated[cursor]
            cursor += 1
        out.append(replace(inst, text_a=text_a, text_b=text_b, language=tgt,
                           provenance=provenance, pivot=pivot))
    return dataset.with_instances(out)


def translate_token_texts(backend: TranslatorBackend, dataset: Dataset,
                          src: LanguageTag, tgt: LanguageTag, decoding: DecodingConfig,
                          *, max_batch: int = DEFAULT_MAX_BATCH, jobs: int = 1) -> list[list[str]]:
    """Translate token-level instances as whitespace-joined strings and
    re-tokenize the output on whitespace."""
    if dataset.task is not TaskKind.NER:
        raise ValueError("translate_token_texts needs a token-level dataset")
    for inst in dataset.instances:
        if inst.language != src:
            raise ValueError(f"instance {inst.id} is {inst.language}, expected {src}")
    texts = [" ".join(inst.tokens) for inst in dataset.instances]  # type: ignore[union-attr]
    translated = translate_texts(backend, texts, src, tgt, decoding,
                                 max_batch=max_batch, jobs=jobs)
    return [t.split(" ") if t else [] for t in translated]


def roundtrip_dataset(backend: TranslatorBackend, dataset: Dataset,
                      src: LanguageTag, pivot: LanguageTag, final: LanguageTag,
                      decoding: DecodingConfig, *, max_batch: int = DEFAULT_MAX_BATCH,
                      jobs: int = 1) -> Dataset:
    """Two chained translations src->pivot->final with roundtrip provenance.

    ``final`` is usually ``src``; a different high-resource ``final``
    realizes the source->target->high-resource chains.
    """
    if pivot == src:
        raise ValueError("pivot must differ from src")
    if final == pivot:
        raise ValueError("final must differ from pivot")
    try:
        hop1 = translate_dataset(backend, dataset, src, pivot, decoding,
                                 max_batch=max_batch, jobs=jobs)
    except BackendFailure as exc:
        exc.hop = 1
        raise
    try:
        hop2 = translate_dataset(backend, hop1, pivot, final, decoding,
                                 max_batch=max_batch, jobs=jobs,
                                 provenance=Provenance.ROUNDTRIP, pivot=pivot)
    except BackendFailure as exc:
        exc.hop = 2
        raise
    return hop2
