"""Task metrics (accuracy, macro-F1, entity span-F1), seed aggregation, and
the resource-availability statistic, plus table rendering for reports.
"""

from __future__ import annotations

import csv
import io
import statistics
from dataclasses import dataclass
from typing import Mapping, Sequence

from .corpus import TaskKind, check_bio
from .errors import EmptyValues, InvalidBIO, LengthMismatch, ZeroTotal


def accuracy(preds: Sequence[str], gold: Sequence[str]) -> float:
    if len(preds) != len(gold):
        raise LengthMismatch(f"{len(preds)} predictions vs {len(gold)} gold labels")
    if not gold:
        raise EmptyValues("no instances to score")
    return sum(p == g for p, g in zip(preds, gold)) / len(gold)


def _f1(tp: int, fp: int, fn: int) -> float:
    denom = 2 * tp + fp + fn
    return 2 * tp / denom if denom else 0.0


def macro_f1(preds: Sequence[str], gold: Sequence[str],
             label_set: Sequence[str]) -> float:
    """Unweighted mean of per-class F1; classes absent from both sides are
    excluded from the average."""
    if len(preds) != len(gold):
        raise LengthMismatch(f"{len(preds)} predictions vs {len(gold)} gold labels")
    if not gold:
        raise EmptyValues("no instances to score")
    scores = []
    for label in label_set:
        tp = sum(1 for p, g in zip(preds, gold) if p == label and g == label)
        fp = sum(1 for p, g in zip(preds, gold) if p == label and g != label)
        fn = sum(1 for p, g in zip(preds, gold) if p != label and g == label)
        if tp + fp + fn == 0:
            continue
        scores.append(_f1(tp, fp, fn))
    if not scores:
        raise EmptyValues("no label from the label set occurs in preds or gold")
    return sum(scores) / len(scores)


def _decode_spans(tags: Sequence[str]) -> set[tuple[str, int, int]]:
    try:
        check_bio(tags)
    except Exception as exc:
        raise InvalidBIO(str(exc)) from exc
    spans = set()
    start = None
    etype = None
    for i, tag in enumerate(tags):
        if tag.startswith("B-"):
            if start is not None:
                spans.add((etype, start, i))
            start, etype = i, tag[2:]
        elif tag == "O":
            if start is not None:
                spans.add((etype, start, i))
            start, etype = None, None
    if start is not None:
        spans.add((etype, start, len(tags)))
    return spans


def span_counts(pred_tags: Sequence[str], gold_tags: Sequence[str]) -> tuple[int, int, int]:
    """(tp, fp, fn) over exact-match (type, start, end) entity spans."""
    if len(pred_tags) != len(gold_tags):
        raise LengthMismatch(f"{len(pred_tags)} pred tags vs {len(gold_tags)} gold tags")
    pred = _decode_spans(pred_tags)
    gold = _decode_spans(gold_tags)
    tp = len(pred & gold)
    return tp, len(pred) - tp, len(gold) - tp


def span_f1(pred_tags: Sequence[str], gold_tags: Sequence[str]) -> float:
    """Micro F1 over exact entity spans of a single tag sequence pair."""
    return _f1(*span_counts(pred_tags, gold_tags))


def corpus_span_f1(pred_sequences: Sequence[Sequence[str]],
                   gold_sequences: Sequence[Sequence[str]]) -> float:
    """Micro F1 over exact entity spans, pooled across instances."""
    if len(pred_sequences) != len(gold_sequences):
        raise LengthMismatch(f"{len(pred_sequences)} vs {len(gold_sequences)} instances")
    if not gold_sequences:
        raise EmptyValues("no instances to score")
    tp = fp = fn = 0
    for pred, gold in zip(pred_sequences, gold_sequences):
        a, b, c = span_counts(pred, gold)
        tp, fp, fn = tp + a, fp + b, fn + c
    return _f1(tp, fp, fn)


def task_metric(task: TaskKind) -> str:
    """The reporting metric per task: accuracy for NLI, macro-F1 for text
    classification, span-F1 for NER."""
    return {TaskKind.NLI: "accuracy", TaskKind.TC: "macro_f1",
            TaskKind.NER: "span_f1"}[task]


def aggregate_seeds(values: Sequence[float]) -> tuple[float, float]:
    """Mean and sample (n-1) standard deviation; std is 0 for one value."""
    if not values:
        raise EmptyValues("no values to aggregate")
    mean = sum(values) / len(values)
    std = statistics.stdev(values) if len(values) > 1 else 0.0
    return mean, std


def render_mean_std(values: Sequence[float], decimals: int = 1) -> str:
    """Render seed scores the way result tables do, e.g. ``62.6±0.2``."""
    mean, std = aggregate_seeds(values)
    return f"{mean:.{decimals}f}±{std:.{decimals}f}"


def resource_availability(per_language_counts: Mapping[str, float] | Sequence[float],
                          corpus_total: float) -> float:
    """Average percentage of available parallel data across languages:
    mean over languages of 100 * count / total."""
    if corpus_total <= 0:
        raise ZeroTotal(f"corpus total must be positive, got {corpus_total}")
    counts = (list(per_language_counts.values())
              if isinstance(per_language_counts, Mapping) else list(per_language_counts))
    if not counts:
        raise EmptyValues("no languages")
    if any(c < 0 for c in counts):
        raise ValueError("counts must be nonnegative")
    return sum(100.0 * c / corpus_total for c in counts) / len(counts)


# --- report rendering ---------------------------------------------------------

@dataclass
class ScoreReport:
    """Per-language seed scores with the result-table Avg column.

    ``scores`` maps language -> one score per seed (all languages share
    ``n_seeds`` values). The Avg column averages the per-seed
    cross-language means.
    """

    scores: dict[str, tuple[float, ...]]
    metric: str = "score"

    def __post_init__(self):
        lengths = {len(v) for v in self.scores.values()}
        if len(lengths) > 1:
            raise LengthMismatch(f"unequal seed counts per language: {lengths}")

    @property
    def n_seeds(self) -> int:
        return next(iter({len(v) for v in self.scores.values()}), 0)

    def per_language(self) -> dict[str, tuple[float, float]]:
        return {lang: aggregate_seeds(vals) for lang, vals in self.scores.items()}

    def average_row(self) -> tuple[float, float]:
        per_seed = [statistics.fmean(vals[i] for vals in self.scores.values())
                    for i in range(self.n_seeds)]
        return aggregate_seeds(per_seed)

    def columns(self) -> list[str]:
        return [*sorted(self.scores), "Avg"]

    def to_json(self) -> dict:
        stats = {lang: {"mean": m, "std": s, "scores": list(self.scores[lang])}
                 for lang, (m, s) in self.per_language().items()}
        avg_mean, avg_std = self.average_row()
        return {"metric": self.metric, "n_seeds": self.n_seeds,
                "per_language": stats, "avg": {"mean": avg_mean, "std": avg_std}}

    def to_csv(self, decimals: int = 1) -> str:
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["language", "mean", "std", "rendered"])
        for lang in sorted(self.scores):
            mean, std = aggregate_seeds(self.scores[lang])
            writer.writerow([lang, f"{mean:.{decimals}f}", f"{std:.{decimals}f}",
                             render_mean_std(self.scores[lang], decimals)])
        avg_mean, avg_std = self.average_row()
        writer.writerow(["Avg", f"{avg_mean:.{decimals}f}", f"{avg_std:.{decimals}f}",
                         f"{avg_mean:.{decimals}f}±{avg_std:.{decimals}f}"])
        return out.getvalue()


def rate_table_csv(rows: Sequence[tuple[str, float]], header: tuple[str, str],
                   decimals: int = 1) -> str:
    """Render (name, value) rows (e.g. projection rates) as CSV."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(list(header))
    for name, value in rows:
        writer.writerow([name, f"{value:.{decimals}f}"])
    return out.getvalue()
