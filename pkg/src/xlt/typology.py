"""Typological vectors, cosine similarity, and closest-supported-language
selection for MT-unsupported targets.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .corpus import LanguageTag
from .errors import DimensionMismatch, NoCandidate, TargetMissingVector, ZeroVector

log = logging.getLogger(__name__)

_MISSING_CELLS = {"", "--", "nan", "NaN", "None"}


@dataclass(frozen=True)
class TypologyVector:
    language: LanguageTag
    values: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if any(math.isnan(v) for v in self.values):
            raise ValueError(f"{self.language}: vector contains NaN")


class TypologyStore:
    """Immutable language -> feature-vector map; all queries are pure."""

    def __init__(self, vectors: Iterable[TypologyVector],
                 feature_names: Optional[Sequence[str]] = None):
        self._vectors: dict[LanguageTag, TypologyVector] = {}
        dim = None
        for vec in vectors:
            if dim is None:
                dim = len(vec.values)
            elif len(vec.values) != dim:
                raise DimensionMismatch(
                    f"{vec.language}: dimension {len(vec.values)} != {dim}")
            self._vectors[vec.language] = vec
        self.dim = dim or 0
        self.feature_names = tuple(feature_names) if feature_names else None

    def __contains__(self, language: LanguageTag) -> bool:
        return language in self._vectors

    def __len__(self) -> int:
        return len(self._vectors)

    def languages(self) -> frozenset[LanguageTag]:
        return frozenset(self._vectors)

    def get(self, language: LanguageTag) -> Optional[TypologyVector]:
        return self._vectors.get(language)

    def __getitem__(self, language: LanguageTag) -> TypologyVector:
        return self._vectors[language]


def load_typology_csv(path: Union[str, Path]) -> TypologyStore:
    """Load a vector store from a CSV file (see :func:`parse_typology_csv`)."""
    return parse_typology_csv(Path(path).read_text(encoding="utf-8"))


def parse_typology_csv(text: str) -> TypologyStore:
    """Parse CSV with header ``language,f1,...,fN`` into a store.

    Missing cells (empty, ``--``, NaN) are imputed as 0.0; the imputation
    count is logged per language.
    """
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if not header or header[0] != "language":
        raise ValueError('typology CSV needs a header starting with "language"')
    feature_names = header[1:]
    vectors = []
    for row in reader:
        if not row:
            continue
        language = LanguageTag.parse(row[0])
        values = []
        imputed = 0
        for cell in row[1:]:
            cell = cell.strip()
            if cell in _MISSING_CELLS:
                values.append(0.0)
                imputed += 1
                continue
            value = float(cell)
            if math.isnan(value):
                value = 0.0
                imputed += 1
            values.append(value)
        if imputed:
            log.info("typology: %s: imputed %d/%d missing features as 0.0",
                     language, imputed, len(values))
        vectors.append(TypologyVector(language, tuple(values)))
    return TypologyStore(vectors, feature_names)


def write_typology_csv(store: TypologyStore) -> str:
    names = store.feature_names or tuple(f"f{i+1}" for i in range(store.dim))
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["language", *names])
    for language in sorted(store.languages(), key=lambda t: t.render()):
        writer.writerow([language.render(), *store[language].values])
    return out.getvalue()


def cosine_similarity(a: TypologyVector, b: TypologyVector) -> float:
    """dot(a, b) / (|a| * |b|); undefined for zero vectors."""
    if len(a.values) != len(b.values):
        raise DimensionMismatch(f"{len(a.values)} vs {len(b.values)}")
    va = np.asarray(a.values, dtype=np.float64)
    vb = np.asarray(b.values, dtype=np.float64)
    na = float(np.linalg.norm(va))
    nb = float(np.linalg.norm(vb))
    if na == 0.0 or nb == 0.0:
        raise ZeroVector(f"all-zero vector for {a.language if na == 0.0 else b.language}")
    return float(np.dot(va, vb) / (na * nb))


def closest_supported(target: LanguageTag, supported: Iterable[LanguageTag],
                      store: TypologyStore) -> tuple[LanguageTag, float]:
    """The supported language typologically closest to ``target``.

    Ties break lexicographically on the rendered language tag. Candidates
    without a vector (or with an all-zero one) are skipped.
    """
    supported = frozenset(supported)
    if target in supported:
        raise ValueError(f"{target} is already supported")
    target_vec = store.get(target)
    if target_vec is None:
        raise TargetMissingVector(f"no typology vector for {target}")

    best: Optional[tuple[float, str, LanguageTag]] = None
    for candidate in sorted(supported, key=lambda t: t.render()):
        if candidate == target:
            continue
        vec = store.get(candidate)
        if vec is None:
            continue
        try:
            score = cosine_similarity(target_vec, vec)
        except ZeroVector:
            log.warning("typology: skipping zero-vector candidate %s", candidate)
            continue
        if best is None or score > best[0]:
            best = (score, candidate.render(), candidate)
    if best is None:
        raise NoCandidate(f"no supported language with a typology vector for {target}")
    return best[2], best[0]


def rank_candidates(target: LanguageTag, supported: Iterable[LanguageTag],
                    store: TypologyStore) -> list[tuple[LanguageTag, float]]:
    """All scorable candidates ordered best-first (debugging/report aid)."""
    target_vec = store[target]
    scored = []
    for candidate in supported:
        vec = store.get(candidate)
        if vec is None or candidate == target:
            continue
        try:
            scored.append((candidate, cosine_similarity(target_vec, vec)))
        except ZeroVector:
            continue
    scored.sort(key=lambda pair: (-pair[1], pair[0].render()))
    return scored
