"""Word-alignment representation, Pharaoh parsing, span-wise BIO label
projection with the instance discard filter, and projection-rate reports.

Projection drops an instance when any labeled source token has no link
(no_link) or when two projected spans would overlap (span_conflict);
discards are normal absent results, not errors.
"""

from __future__ import annotations

import hashlib
import random
from abc import ABC, abstractmethod
from dataclasses import dataclass, replace
from typing import Callable, Optional, Sequence

from .corpus import (
    Dataset,
    LanguageTag,
    Provenance,
    TaskKind,
    TokenInstance,
    check_bio,
)
from .errors import IndexOutOfRange, LengthMismatch, MalformedPair
from .translate import (
    DecodingConfig,
    TranslatorBackend,
    translate_token_texts,
)


@dataclass(frozen=True)
class AlignmentLinks:
    """A set of (src_index, tgt_index) links between two token sequences."""

    links: frozenset[tuple[int, int]]
    src_len: int
    tgt_len: int

    def __post_init__(self):
        object.__setattr__(self, "links", frozenset(self.links))
        if self.src_len < 1 or self.tgt_len < 1:
            raise ValueError("src_len and tgt_len must be positive")
        for i, j in self.links:
            if not (0 <= i < self.src_len) or not (0 <= j < self.tgt_len):
                raise IndexOutOfRange(
                    f"link {i}-{j} outside {self.src_len}x{self.tgt_len}")

    def targets_of(self, src_index: int) -> list[int]:
        return sorted(j for i, j in self.links if i == src_index)

    def to_pharaoh(self) -> str:
        return " ".join(f"{i}-{j}" for i, j in sorted(self.links))


def parse_pharaoh(text: str, src_len: int, tgt_len: int) -> AlignmentLinks:
    """Parse whitespace-separated 0-based ``i-j`` pairs."""
    links = set()
    for token in text.split():
        left, sep, right = token.partition("-")
        if not sep or not left.isdigit() or not right.isdigit():
            raise MalformedPair(f"not an i-j pair: {token!r}")
        links.add((int(left), int(right)))
    return AlignmentLinks(frozenset(links), src_len, tgt_len)


class AlignerBackend(ABC):
    """Produces word alignments for a (source tokens, target tokens) pair."""

    name: str = "aligner"
    concurrent: bool = True

    @abstractmethod
    def align(self, src_tokens: Sequence[str], tgt_tokens: Sequence[str]) -> AlignmentLinks:
        ...


class PharaohFileAligner(AlignerBackend):
    """Offline aligner fed by precomputed Pharaoh text, one line per
    sentence pair, consumed in dataset order.

    One instance covers one pass over one parallel corpus; constructing it
    is cheap, so build a fresh one per projected dataset.
    """

    name = "pharaoh"
    concurrent = False  # consumption order is the correspondence

    def __init__(self, text: str):
        self._lines = text.splitlines()
        self._cursor = 0

    @classmethod
    def from_file(cls, path) -> "PharaohFileAligner":
        from pathlib import Path

        return cls(Path(path).read_text(encoding="utf-8"))

    @property
    def remaining(self) -> int:
        return len(self._lines) - self._cursor

    def align(self, src_tokens, tgt_tokens):
        if self._cursor >= len(self._lines):
            raise LengthMismatch(
                f"alignment file exhausted after {self._cursor} sentence pairs")
        line = self._lines[self._cursor]
        self._cursor += 1
        return parse_pharaoh(line, len(src_tokens), len(tgt_tokens))


class OracleAligner(AlignerBackend):
    """Mock aligner that knows the mock translators' permutations.

    ``permutation(i, tgt_len)`` gives the target index of source token i
    (identity by default, matching the identity/dictionary mocks; pass
    ``PermutationTranslator.permutation`` for the reversal mock). With
    ``drop_prob`` > 0 each link is independently dropped; the RNG is keyed
    on (seed, source tokens) so results do not depend on call order.
    """

    name = "mock:oracle"

    def __init__(self, permutation: Optional[Callable[[int, int], int]] = None,
                 drop_prob: float = 0.0, seed: int = 0):
        if not (0.0 <= drop_prob <= 1.0):
            raise ValueError("drop_prob must be in [0, 1]")
        self._permutation = permutation or (lambda i, n: i)
        self.drop_prob = drop_prob
        self.seed = seed

    def align(self, src_tokens, tgt_tokens):
        n_src, n_tgt = len(src_tokens), len(tgt_tokens)
        links = set()
        rng = None
        if self.drop_prob > 0.0:
            digest = hashlib.blake2b(
                "\x1f".join(src_tokens).encode("utf-8"), digest_size=8).hexdigest()
            rng = random.Random(f"{self.seed}:{digest}")
        for i in range(min(n_src, n_tgt)):
            j = self._permutation(i, n_tgt)
            if 0 <= j < n_tgt:
                if rng is not None and rng.random() < self.drop_prob:
                    continue
                links.add((i, j))
        return AlignmentLinks(frozenset(links), n_src, n_tgt)


# --- label projection -------------------------------------------------------

@dataclass(frozen=True)
class ProjectionOutcome:
    """Result of projecting one instance: tags, or a discard reason."""

    tags: Optional[tuple[str, ...]]
    reason: Optional[str] = None  # "no_link" | "span_conflict"
    absorbed: int = 0  # range-closure positions not linked from the span

    @property
    def retained(self) -> bool:
        return self.tags is not None


def entity_spans(tags: Sequence[str]) -> list[tuple[str, int, int]]:
    """Decode BIO tags into (type, start, end) spans, end exclusive."""
    spans = []
    start = None
    etype = None
    for i, tag in enumerate(tags):
        if tag.startswith("B-"):
            if start is not None:
                spans.append((etype, start, i))
            start, etype = i, tag[2:]
        elif tag == "O":
            if start is not None:
                spans.append((etype, start, i))
                start, etype = None, None
    if start is not None:
        spans.append((etype, start, len(tags)))
    return spans


def project_labels(src_tokens: Sequence[str], src_tags: Sequence[str],
                   tgt_tokens: Sequence[str], links: AlignmentLinks) -> ProjectionOutcome:
    """Project BIO tags onto target tokens through word alignments.

    Each source entity span maps to the contiguous [min, max] range of the
    target indices linked from the span. The instance is discarded when a
    labeled source token has no link, or when two projected ranges overlap.
    Unlabeled source tokens never trigger a discard.
    """
    if len(src_tokens) != len(src_tags):
        raise LengthMismatch(f"{len(src_tokens)} tokens vs {len(src_tags)} tags")
    check_bio(src_tags)
    if links.src_len != len(src_tokens) or links.tgt_len != len(tgt_tokens):
        raise LengthMismatch(
            f"links are {links.src_len}x{links.tgt_len}, "
            f"tokens are {len(src_tokens)}x{len(tgt_tokens)}")

    by_src: dict[int, set[int]] = {}
    for i, j in links.links:
        by_src.setdefault(i, set()).add(j)

    for i, tag in enumerate(src_tags):
        if tag != "O" and not by_src.get(i):
            return ProjectionOutcome(None, "no_link")

    ranges: list[tuple[str, int, int, set[int]]] = []
    for etype, start, end in entity_spans(src_tags):
        targets: set[int] = set()
        for i in range(start, end):
            targets |= by_src.get(i, set())
        ranges.append((etype, min(targets), max(targets), targets))

    ordered = sorted(ranges, key=lambda r: (r[1], r[2]))
    for (_, _, hi, _), (_, lo2, _, _) in zip(ordered, ordered[1:]):
        if lo2 <= hi:
            return ProjectionOutcome(None, "span_conflict")

    tags = ["O"] * len(tgt_tokens)
    absorbed = 0
    for etype, lo, hi, targets in ranges:
        tags[lo] = f"B-{etype}"
        for p in range(lo + 1, hi + 1):
            tags[p] = f"I-{etype}"
        absorbed += sum(1 for p in range(lo, hi + 1) if p not in targets)
    return ProjectionOutcome(tuple(tags), None, absorbed)


@dataclass
class ProjectionReport:
    """Instance-retention tally for one projected dataset."""

    total: int = 0
    retained: int = 0
    discarded_no_link: int = 0
    discarded_span_conflict: int = 0
    absorbed_tokens: int = 0

    @property
    def projection_rate(self) -> float:
        """Percentage of retained instances; 100.0 for an empty input."""
        if self.total == 0:
            return 100.0
        return 100.0 * self.retained / self.total

    def record(self, outcome: ProjectionOutcome) -> None:
        self.total += 1
        if outcome.retained:
            self.retained += 1
            self.absorbed_tokens += outcome.absorbed
        elif outcome.reason == "no_link":
            self.discarded_no_link += 1
        else:
            self.discarded_span_conflict += 1

    def check(self) -> None:
        assert self.retained + self.discarded_no_link + self.discarded_span_conflict == self.total

    def merged(self, other: "ProjectionReport") -> "ProjectionReport":
        return ProjectionReport(
            total=self.total + other.total,
            retained=self.retained + other.retained,
            discarded_no_link=self.discarded_no_link + other.discarded_no_link,
            discarded_span_conflict=self.discarded_span_conflict + other.discarded_span_conflict,
            absorbed_tokens=self.absorbed_tokens + other.absorbed_tokens,
        )

    def chained(self, second_hop: "ProjectionReport") -> "ProjectionReport":
        """Tally for a two-hop projection: totals count original instances,
        discards accumulate across hops."""
        assert second_hop.total == self.retained
        return ProjectionReport(
            total=self.total,
            retained=second_hop.retained,
            discarded_no_link=self.discarded_no_link + second_hop.discarded_no_link,
            discarded_span_conflict=(self.discarded_span_conflict
                                     + second_hop.discarded_span_conflict),
            absorbed_tokens=self.absorbed_tokens + second_hop.absorbed_tokens,
        )

    def to_json(self) -> dict:
        return {
            "total": self.total,
            "retained": self.retained,
            "discarded_no_link": self.discarded_no_link,
            "discarded_span_conflict": self.discarded_span_conflict,
            "absorbed_tokens": self.absorbed_tokens,
            "projection_rate": self.projection_rate,
        }


def project_dataset(dataset: Dataset, translated_tokens: Sequence[Sequence[str]],
                    aligner: AlignerBackend, *, language: LanguageTag,
                    provenance: Provenance = Provenance.TRANSLATED,
                    pivot: Optional[LanguageTag] = None) -> tuple[Dataset, ProjectionReport]:
    """Project a token-level dataset's tags onto its translations.

    ``translated_tokens`` is parallel to ``dataset.instances``. Retained
    instances carry the projected tags and the new language/provenance;
    the report tallies every input instance.
    """
    if dataset.task is not TaskKind.NER:
        raise ValueError("project_dataset needs a token-level dataset")
    if len(translated_tokens) != len(dataset.instances):
        raise LengthMismatch(
            f"{len(dataset.instances)} instances vs {len(translated_tokens)} translations")

    report = ProjectionReport()
    out: list[TokenInstance] = []
    for inst, tgt_tokens in zip(dataset.instances, translated_tokens):
        assert isinstance(inst, TokenInstance)
        tgt_tokens = list(tgt_tokens)
        if not tgt_tokens:
            report.record(ProjectionOutcome(None, "no_link"))
            continue
        links = aligner.align(inst.tokens, tgt_tokens)
        outcome = project_labels(inst.tokens, inst.tags, tgt_tokens, links)
        report.record(outcome)
        if outcome.retained:
            out.append(replace(inst, tokens=tuple(tgt_tokens), tags=outcome.tags,
                               language=language, provenance=provenance, pivot=pivot))
    report.check()
    return dataset.with_instances(out), report


def translate_and_project(translator: TranslatorBackend, aligner: AlignerBackend,
                          dataset: Dataset, src: LanguageTag, tgt: LanguageTag,
                          decoding: DecodingConfig, *, max_batch: int = 32,
                          jobs: int = 1, provenance: Provenance = Provenance.TRANSLATED,
                          pivot: Optional[LanguageTag] = None) -> tuple[Dataset, ProjectionReport]:
    """Translate a token-level dataset and project its tags in one step."""
    translated = translate_token_texts(translator, dataset, src, tgt, decoding,
                                       max_batch=max_batch, jobs=jobs)
    return project_dataset(dataset, translated, aligner, language=tgt,
                           provenance=provenance, pivot=pivot)


def roundtrip_and_project(translator: TranslatorBackend, aligner: AlignerBackend,
                          dataset: Dataset, src: LanguageTag, pivot: LanguageTag,
                          final: LanguageTag, decoding: DecodingConfig, *,
                          max_batch: int = 32, jobs: int = 1) -> tuple[Dataset, ProjectionReport]:
    """Two-hop translate+project for token-level roundtrips.

    Discards accumulate across hops; the report's total counts original
    instances.
    """
    if pivot == src:
        raise ValueError("pivot must differ from src")
    if final == pivot:
        raise ValueError("final must differ from pivot")
    hop1, report1 = translate_and_project(
        translator, aligner, dataset, src, pivot, decoding,
        max_batch=max_batch, jobs=jobs)
    hop2, report2 = translate_and_project(
        translator, aligner, hop1, pivot, final, decoding,
        max_batch=max_batch, jobs=jobs, provenance=Provenance.ROUNDTRIP, pivot=pivot)
    return hop2, report1.chained(report2)


def projection_rate_rows(reports: dict[str, ProjectionReport]) -> list[tuple[str, float]]:
    """Per-language projection rates plus an ``Avg`` row."""
    rows = [(name, report.projection_rate) for name, report in sorted(reports.items())]
    if rows:
        rows.append(("Avg", sum(rate for _, rate in rows) / len(rows)))
    return rows
