"""End-to-end experiment orchestration over compiled plans: training the
desk models, scoring checkpoint series on a validation variant, selecting
a checkpoint, and evaluating the inference pipeline on test data.

The CLI stages, the experiment scripts, and the acceptance suite all run
through these helpers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

from .align import AlignerBackend
from .corpus import (
    Dataset,
    LanguageTag,
    SequenceInstance,
    TaskKind,
    TokenInstance,
    pretend_language,
)
from .metrics import accuracy, corpus_span_f1, macro_f1, task_metric
from .model import (
    CheckpointSeries,
    DeskModel,
    EnsembleMember,
    FeatureConfig,
    Hyperparameters,
    TaskModel,
    ensemble_predict,
    ensemble_predict_tags,
    predict_transformed_tags,
)
from .selection import ValidationVariant, build_validation, select_checkpoint
from .strategy import (
    Combine,
    InferencePipeline,
    ModelPlan,
    Resources,
    StrategySpec,
    TrainingPlan,
)
from .translate import DecodingConfig, TranslatorBackend


@dataclass
class TrainedModels:
    """One checkpoint series per plan model, trained under one run seed."""

    models: list[TaskModel]
    series: list[CheckpointSeries]

    def fractions(self) -> tuple[float, ...]:
        return tuple(c.epoch_fraction for c in self.series[0].checkpoints)

    def members_at(self, fraction: float,
                   pipeline: InferencePipeline) -> list[EnsembleMember]:
        return [EnsembleMember(model, series.at(fraction), transform)
                for model, series, transform in zip(self.models, self.series,
                                                    pipeline.transforms)]


def train_plan(plan: TrainingPlan, hyper: Hyperparameters, seed: int,
               checkpoint_fraction: float = 0.1,
               features: FeatureConfig = FeatureConfig(),
               model_factory: Optional[Callable[[ModelPlan], TaskModel]] = None
               ) -> TrainedModels:
    """Train every model of a plan; ensemble members honor their own seeds.

    ``model_factory`` swaps the built-in desk classifier for another task
    model (e.g. a remote one) per plan model.
    """
    if model_factory is None:
        model_factory = lambda mp: DeskModel.for_plan(mp, features)  # noqa: E731
    models: list[TaskModel] = []
    series: list[CheckpointSeries] = []
    for model_plan in plan.model_plans():
        model = model_factory(model_plan)
        models.append(model)
        series.append(model.train(model_plan, hyper, seed, checkpoint_fraction))
    return TrainedModels(models, series)


def evaluate_members(members: Sequence[EnsembleMember], combine: Combine,
                     dataset: Dataset, translator: Optional[TranslatorBackend],
                     aligner: Optional[AlignerBackend], *,
                     decoding: DecodingConfig = DecodingConfig.beam()) -> float:
    """Score an inference pipeline configuration on a labeled dataset.

    Validation and test scoring share this path so that checkpoint
    selection optimizes exactly the reporting metric.
    """
    if dataset.task is TaskKind.NER:
        preds, golds = [], []
        for inst in dataset.instances:
            assert isinstance(inst, TokenInstance)
            if combine is Combine.AVERAGE:
                tags = ensemble_predict_tags(members, inst, translator, aligner,
                                             decoding=decoding)
            else:
                member = members[0]
                tags = predict_transformed_tags(member.model, member.checkpoint,
                                                inst, member.transform,
                                                translator, aligner,
                                                decoding=decoding)
            preds.append(tags)
            golds.append(inst.tags)
        return corpus_span_f1(preds, golds)

    preds, golds = [], []
    for inst in dataset.instances:
        assert isinstance(inst, SequenceInstance)
        dist = ensemble_predict(members if combine is Combine.AVERAGE
                                else members[:1], inst, translator,
                                decoding=decoding)
        preds.append(dist.argmax_label())
        golds.append(inst.label)
    if dataset.task is TaskKind.NLI:
        return accuracy(preds, golds)
    return macro_f1(preds, golds, dataset.label_set)


def validation_series(trained: TrainedModels, pipeline: InferencePipeline,
                      validation: Dataset, translator: Optional[TranslatorBackend],
                      aligner: Optional[AlignerBackend], *,
                      decoding: DecodingConfig = DecodingConfig.beam()
                      ) -> list[tuple[float, float]]:
    """Validation score of the full pipeline at every checkpoint fraction."""
    series = []
    for fraction in trained.fractions():
        members = trained.members_at(fraction, pipeline)
        score = evaluate_members(members, pipeline.combine, validation,
                                 translator, aligner, decoding=decoding)
        series.append((fraction, score))
    return series


@dataclass
class SelectionRecord:
    variant: str
    chosen_fraction: float
    score: float

    def to_json(self) -> dict:
        return {"variant": self.variant, "chosen_fraction": self.chosen_fraction,
                "score": self.score}


@dataclass
class ExperimentResult:
    """Everything one (strategy, seed) run produces."""

    spec: StrategySpec
    plan: TrainingPlan
    pipeline: InferencePipeline
    trained: TrainedModels
    validation_scores: dict[str, list[tuple[float, float]]] = field(default_factory=dict)
    selection: dict[str, SelectionRecord] = field(default_factory=dict)
    test_scores: dict[str, float] = field(default_factory=dict)
    metric: str = "score"


def run_experiment(spec: StrategySpec, resources: Resources,
                   test_sets: dict[LanguageTag, Dataset], *,
                   hyper: Hyperparameters, seed: int,
                   checkpoint_fraction: float = 0.1,
                   validation_variant: ValidationVariant = ValidationVariant.VAL_SRC,
                   features: FeatureConfig = FeatureConfig(),
                   max_batch: int = 32, jobs: int = 1,
                   plan_and_pipeline: Optional[tuple[TrainingPlan, InferencePipeline]] = None,
                   model_factory: Optional[Callable[[ModelPlan], TaskModel]] = None,
                   ) -> ExperimentResult:
    """Compile, train, select per evaluation language, and score test data.

    ``test_sets`` maps evaluation languages to their labeled test data;
    with proxy substitutions the evaluation language is the true target
    while translation used the proxy.
    """
    from .strategy import compile_strategy

    if plan_and_pipeline is None:
        plan_and_pipeline = compile_strategy(spec, resources,
                                             max_batch=max_batch, jobs=jobs)
    plan, pipeline = plan_and_pipeline
    trained = train_plan(plan, hyper, seed, checkpoint_fraction, features,
                         model_factory=model_factory)
    result = ExperimentResult(spec=spec, plan=plan, pipeline=pipeline, trained=trained,
                              metric=task_metric(resources.train.task))

    for eval_target in spec.eval_targets:
        # MT runs through the proxy; oracle data stays the true target's.
        mt_target = spec.mt_target_for(eval_target)
        validation = build_validation(validation_variant, spec.family, resources,
                                      eval_target, mt_target=mt_target,
                                      decoding=spec.decoding,
                                      max_batch=max_batch, jobs=jobs)
        series = validation_series(trained, pipeline, validation,
                                   resources.translator, resources.aligner,
                                   decoding=spec.decoding)
        chosen = select_checkpoint(series)
        score = dict(series)[chosen]
        key = eval_target.render()
        result.validation_scores[key] = series
        result.selection[key] = SelectionRecord(validation_variant.value, chosen, score)

        test = test_sets.get(eval_target)
        if test is not None:
            if mt_target != eval_target:
                test = pretend_language(test, mt_target)
            members = trained.members_at(chosen, pipeline)
            result.test_scores[key] = evaluate_members(
                members, pipeline.combine, test, resources.translator,
                resources.aligner, decoding=spec.decoding)
    return result
