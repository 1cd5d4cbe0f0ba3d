"""Independent reference implementations used as test oracles.

These deliberately use different algorithms from the library code (regex
span decoding, candidate enumeration, linear scans) and must stay
import-free of the modules they check beyond shared value types.
"""

from __future__ import annotations

import re
from typing import Optional, Sequence


def brute_spans(tags: Sequence[str]) -> set[tuple[str, int, int]]:
    """Candidate enumeration: a (type, start, end) span is an entity iff
    tags[start] == B-type, the interior is I-type, and it is maximal."""
    n = len(tags)
    spans = set()
    for start in range(n):
        for end in range(start + 1, n + 1):
            tag = tags[start]
            if not tag.startswith("B-"):
                continue
            etype = tag[2:]
            if not all(tags[k] == f"I-{etype}" for k in range(start + 1, end)):
                continue
            if end < n and tags[end] == f"I-{etype}":
                continue
            spans.add((etype, start, end))
    return spans


def brute_span_prf(pred: Sequence[str], gold: Sequence[str]) -> float:
    p_spans, g_spans = brute_spans(pred), brute_spans(gold)
    tp = len(p_spans & g_spans)
    fp = len(p_spans) - tp
    fn = len(g_spans) - tp
    denom = 2 * tp + fp + fn
    return 2 * tp / denom if denom else 0.0


def brute_project(src_tags: Sequence[str], links: set[tuple[int, int]],
                  tgt_len: int) -> Optional[list[str]]:
    """Reference label projector: regex span decoding, link-set scans,
    range materialization via explicit index sets."""
    # discard if any labeled source token has no link
    for i, tag in enumerate(src_tags):
        if tag != "O" and not any(a == i for a, _ in links):
            return None
    # regex over a '|'-joined tag string to find maximal B-X (I-X)* runs
    joined = " ".join(src_tags)
    token_starts = []
    pos = 0
    for tag in src_tags:
        token_starts.append(pos)
        pos += len(tag) + 1
    spans = []
    for match in re.finditer(r"(?:^|(?<= ))B-(\S+)((?: I-\1(?= |$))*)", joined):
        start_index = token_starts.index(match.start())
        length = 1 + (match.group(2).count(" I-"))
        spans.append((match.group(1), start_index, start_index + length))
    ranges = []
    for etype, start, end in spans:
        targets = sorted({b for a, b in links if start <= a < end})
        covered = set(range(min(targets), max(targets) + 1))
        ranges.append((etype, covered))
    for i in range(len(ranges)):
        for j in range(i + 1, len(ranges)):
            if ranges[i][1] & ranges[j][1]:
                return None
    out = ["O"] * tgt_len
    for etype, covered in ranges:
        first = min(covered)
        for k in sorted(covered):
            out[k] = f"B-{etype}" if k == first else f"I-{etype}"
    return out


def brute_closest(target_vec: Sequence[float],
                  candidates: dict[str, Sequence[float]]) -> tuple[str, float]:
    """Exhaustive argmax of cosine similarity with lexicographic tie-break."""
    import math

    def cos(a, b):
        dot = sum(x * y for x, y in zip(a, b))
        na = math.sqrt(sum(x * x for x in a))
        nb = math.sqrt(sum(y * y for y in b))
        return dot / (na * nb)

    scored = sorted(((name, cos(target_vec, vec)) for name, vec in candidates.items()),
                    key=lambda pair: (-pair[1], pair[0]))
    return scored[0]


def brute_max_scan(series: Sequence[tuple[float, float]]) -> float:
    """Linear scan for the earliest maximal score."""
    best = max(score for _, score in series)
    for fraction, score in series:
        if score == best:
            return fraction
    raise AssertionError("unreachable")


def valid_bio_sequences(length: int, types: Sequence[str],
                        max_entities: Optional[int] = None) -> list[tuple[str, ...]]:
    """Every valid BIO tagging of the given length (optionally capped on
    entity count)."""
    results: list[tuple[str, ...]] = []

    def extend(prefix: list[str], prev_type: Optional[str], entities: int) -> None:
        if len(prefix) == length:
            results.append(tuple(prefix))
            return
        extend(prefix + ["O"], None, entities)
        for etype in types:
            if max_entities is None or entities < max_entities:
                extend(prefix + [f"B-{etype}"], etype, entities + 1)
            if prev_type == etype:
                extend(prefix + [f"I-{etype}"], etype, entities)

    extend([], None, 0)
    return results
