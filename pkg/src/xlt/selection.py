"""Validation-set construction (the three variants, with the adaptations
for test-translation families) and checkpoint selection.
"""

from __future__ import annotations

import math
from enum import Enum
from typing import Optional, Sequence

from .align import ProjectionReport, roundtrip_and_project, translate_and_project
from .corpus import Dataset, LanguageTag, TaskKind, pretend_language
from .errors import EmptySeries, MissingOracleValidation
from .strategy import Family, Resources
from .translate import DecodingConfig, roundtrip_dataset, translate_dataset


class ValidationVariant(Enum):
    VAL_SRC = "Val-Src"
    VAL_MT_TRG = "Val-MT-Trg"
    VAL_TRG = "Val-Trg"


def build_validation(variant: ValidationVariant, family: Family,
                     resources: Resources, target: LanguageTag, *,
                     mt_target: Optional[LanguageTag] = None,
                     decoding: DecodingConfig = DecodingConfig.beam(),
                     max_batch: int = 32, jobs: int = 1,
                     reports: Optional[dict[str, ProjectionReport]] = None) -> Dataset:
    """Build the validation set a checkpoint is selected on.

    Val-Src is always the clean source validation data. For train-side
    strategies Val-MT-Trg translates it into the target language and
    Val-Trg is the oracle target validation data. For test-translation
    strategies (T-Test/RTT families) the model consumes source-language
    inputs, so Val-MT-Trg roundtrips the source validation data through the
    target language and Val-Trg translates the oracle target validation
    data into the source language. Token-level datasets pass through label
    projection wherever translation occurs; ``reports`` (when given)
    collects the projection reports.

    With a proxy substitution active, ``target`` is the true evaluation
    language (oracle lookup) while ``mt_target`` is the supported language
    all MT runs through; oracle data is submitted under the proxy's tag.
    """
    if resources.validation is None:
        raise MissingOracleValidation("resources carry no source validation data")
    source_val = resources.validation
    src = _dataset_language(source_val)
    mt_target = mt_target or target

    def note(name: str, pair):
        dataset, report = pair
        if reports is not None:
            reports[name] = report
        return dataset

    if variant is ValidationVariant.VAL_SRC:
        return source_val

    test_side = family in (Family.T_TEST, Family.RTT)
    if variant is ValidationVariant.VAL_MT_TRG:
        if test_side:
            if source_val.task is TaskKind.NER:
                return note(f"val-rt:{mt_target}>{src}", roundtrip_and_project(
                    resources.translator, resources.aligner, source_val,
                    src, mt_target, src, decoding, max_batch=max_batch, jobs=jobs))
            return roundtrip_dataset(resources.translator, source_val,
                                     src, mt_target, src, decoding,
                                     max_batch=max_batch, jobs=jobs)
        if source_val.task is TaskKind.NER:
            return note(f"val-t:{mt_target}", translate_and_project(
                resources.translator, resources.aligner, source_val,
                src, mt_target, decoding, max_batch=max_batch, jobs=jobs))
        return translate_dataset(resources.translator, source_val, src, mt_target,
                                 decoding, max_batch=max_batch, jobs=jobs)

    # Val-Trg
    oracle = resources.oracle_validation.get(target)
    if oracle is None:
        raise MissingOracleValidation(f"no oracle validation data for {target}")
    if not test_side:
        return oracle
    if mt_target != target:
        oracle = pretend_language(oracle, mt_target)
    if oracle.task is TaskKind.NER:
        return note(f"val-oracle-t:{src}", translate_and_project(
            resources.translator, resources.aligner, oracle,
            mt_target, src, decoding, max_batch=max_batch, jobs=jobs))
    return translate_dataset(resources.translator, oracle, mt_target, src,
                             decoding, max_batch=max_batch, jobs=jobs)


def _dataset_language(dataset: Dataset) -> LanguageTag:
    languages = {inst.language for inst in dataset.instances}
    if len(languages) != 1:
        raise ValueError(f"expected a monolingual dataset, found {languages}")
    return next(iter(languages))


def select_checkpoint(metric_series: Sequence[tuple[float, float]]) -> float:
    """Epoch fraction with the best score; ties go to the earliest one."""
    if not metric_series:
        raise EmptySeries("no checkpoints to select from")
    for fraction, score in metric_series:
        if not math.isfinite(score):
            raise ValueError(f"non-finite score {score} at fraction {fraction}")
    best_fraction, best_score = metric_series[0]
    for fraction, score in metric_series[1:]:
        if score > best_score:
            best_fraction, best_score = fraction, score
    return best_fraction
