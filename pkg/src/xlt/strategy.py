"""The strategy compiler: declarative strategy specs become training plans
(ordered phases of datasets) and inference pipelines (test-time transforms,
model count, ensembling rule).

Family/variant cheat sheet (clean source data C, target t, high-resource
set H, roundtrip X>Y = translate to X then to Y):

    T            [[t]]                         test as-is
    T_SRC        [[C, t]] or [[C], [t]]        test as-is
    M_T          [[t1..tk]]                    test as-is
    M_T_SRC      [[C, t1..tk]]                 test as-is
    SRC_HR       [[C, h1..hm]]                 test as-is
    T_SRC_HR     [[C, t, h1..hm]]              test as-is
    M_T_SRC_HR   [[C, t1..tk, h1..hm]]         test as-is
    TTEST        [[C]]                         test -> source
    RT           [[t>src]]                     test -> source
    RT_SRC       [[C, t>src]]                  test -> source
    M_RT_SRC     [[C, t1>src..tk>src]]         test -> source
    RT_ENS_SRC   m+1 x [[t>src]], seeds        test -> source, averaged
    RT_ENS_HR    [[C, t>src]] + [[C, t>h]]...  test -> src/h, averaged
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Mapping, Optional

from .align import AlignerBackend, ProjectionReport, roundtrip_and_project, translate_and_project
from .corpus import Dataset, LanguageTag, TaskKind
from .errors import ProjectionCollapse, UnsupportedLanguage, UnsupportedVariant
from .translate import (
    DecodingConfig,
    TranslatorBackend,
    roundtrip_dataset,
    translate_dataset,
)
from .typology import TypologyStore, closest_supported


class Family(Enum):
    ZERO_SHOT = "ZeroShot"
    T_TRAIN = "TTrain"
    T_TEST = "TTest"
    RTT = "RTT"


class Variant(Enum):
    T = "T"
    T_SRC = "T_SRC"
    M_T = "M_T"
    M_T_SRC = "M_T_SRC"
    SRC_HR = "SRC_HR"
    T_SRC_HR = "T_SRC_HR"
    M_T_SRC_HR = "M_T_SRC_HR"
    TTEST = "TTEST"
    RT = "RT"
    RT_SRC = "RT_SRC"
    M_RT_SRC = "M_RT_SRC"
    RT_ENS_SRC = "RT_ENS_SRC"
    RT_ENS_HR = "RT_ENS_HR"


FAMILY_VARIANTS: dict[Family, frozenset[Variant]] = {
    Family.ZERO_SHOT: frozenset(),
    Family.T_TRAIN: frozenset({Variant.T, Variant.T_SRC, Variant.M_T, Variant.M_T_SRC,
                               Variant.SRC_HR, Variant.T_SRC_HR, Variant.M_T_SRC_HR}),
    Family.T_TEST: frozenset({Variant.TTEST}),
    Family.RTT: frozenset({Variant.RT, Variant.RT_SRC, Variant.M_RT_SRC,
                           Variant.RT_ENS_SRC, Variant.RT_ENS_HR}),
}

_MULTI_TARGET = frozenset({Variant.M_T, Variant.M_T_SRC, Variant.M_T_SRC_HR, Variant.M_RT_SRC})
_SEQUENTIAL_OK = frozenset({Variant.T_SRC, Variant.M_T_SRC})
_USES_HR = frozenset({Variant.SRC_HR, Variant.T_SRC_HR, Variant.M_T_SRC_HR,
                      Variant.RT_ENS_SRC, Variant.RT_ENS_HR})


class Schedule(Enum):
    JOINT = "joint"
    SEQUENTIAL = "sequential"


class TransformKind(Enum):
    NONE = "none"
    TRANSLATE_TO = "translate_to"


@dataclass(frozen=True)
class TestTransform:
    """What happens to a raw test instance before a model sees it."""

    __test__ = False  # "Test" here means test-time, not a pytest case

    kind: TransformKind
    language: Optional[LanguageTag] = None

    def __post_init__(self):
        if (self.kind is TransformKind.TRANSLATE_TO) != (self.language is not None):
            raise ValueError("translate_to needs a language; none must not have one")

    @classmethod
    def none(cls) -> "TestTransform":
        return cls(TransformKind.NONE)

    @classmethod
    def translate_to(cls, language: LanguageTag) -> "TestTransform":
        return cls(TransformKind.TRANSLATE_TO, language)


class Combine(Enum):
    SINGLE = "single"
    AVERAGE = "average_distributions"


DEFAULT_HR_LANGUAGES = (LanguageTag("tur"), LanguageTag("rus"), LanguageTag("zho"))
DEFAULT_SOURCE = LanguageTag("eng")


@dataclass(frozen=True)
class Substitution:
    """An MT proxy: train/translate via ``mt_target``, evaluate on ``eval_target``."""

    eval_target: LanguageTag
    mt_target: LanguageTag
    score: float


@dataclass(frozen=True)
class StrategySpec:
    family: Family
    variant: Optional[Variant] = None
    schedule: Schedule = Schedule.JOINT
    targets: tuple[LanguageTag, ...] = ()
    hr_languages: tuple[LanguageTag, ...] = DEFAULT_HR_LANGUAGES
    source: LanguageTag = DEFAULT_SOURCE
    seeds: tuple[int, ...] = (0, 1, 2)
    decoding: DecodingConfig = DecodingConfig.beam()
    rt_ens_src_include_clean: bool = False
    substitutions: tuple[Substitution, ...] = ()
    # true evaluation languages when proxying made targets diverge from
    # them (several unsupported targets may share one MT proxy)
    eval_languages: tuple[LanguageTag, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(self.targets))
        object.__setattr__(self, "hr_languages", tuple(self.hr_languages))
        object.__setattr__(self, "seeds", tuple(self.seeds))
        object.__setattr__(self, "substitutions", tuple(self.substitutions))
        object.__setattr__(self, "eval_languages", tuple(self.eval_languages))
        if self.family is Family.ZERO_SHOT:
            if self.variant is not None:
                raise UnsupportedVariant("zero-shot takes no variant")
        else:
            if self.variant not in FAMILY_VARIANTS[self.family]:
                raise UnsupportedVariant(f"{self.variant} is not a {self.family.value} variant")
        if self.schedule is Schedule.SEQUENTIAL and self.variant not in _SEQUENTIAL_OK:
            raise UnsupportedVariant("sequential schedule is only defined for T_SRC and M_T_SRC")
        if not self.targets:
            raise ValueError("at least one target language is required")
        if len(set(self.targets)) != len(self.targets):
            raise ValueError("duplicate targets")
        if self.source in self.targets:
            raise ValueError("source language cannot be a target")
        if self.variant is not None and self.variant not in _MULTI_TARGET \
                and len(self.targets) != 1:
            raise UnsupportedVariant(f"{self.variant.value} takes exactly one target")
        if self.variant in _USES_HR:
            if not self.hr_languages:
                raise UnsupportedVariant(f"{self.variant.value} needs hr_languages")
            if set(self.hr_languages) & set(self.targets):
                raise ValueError("hr_languages and targets must be disjoint")
            if self.source in self.hr_languages:
                raise ValueError("source language cannot be a high-resource auxiliary")
        if self.variant is Variant.RT_ENS_SRC:
            if len(self.seeds) != len(self.hr_languages) + 1:
                raise UnsupportedVariant(
                    "RT_ENS_SRC needs equally many models: "
                    f"{len(self.hr_languages) + 1} seeds, got {len(self.seeds)}")
            if len(set(self.seeds)) != len(self.seeds):
                raise UnsupportedVariant("RT_ENS_SRC needs distinct seeds")

    @property
    def eval_targets(self) -> tuple[LanguageTag, ...]:
        """True evaluation languages (targets unless proxying changed them)."""
        return self.eval_languages or self.targets

    def mt_target_for(self, eval_target: LanguageTag) -> LanguageTag:
        """The language MT actually runs through for an evaluation language."""
        for substitution in self.substitutions:
            if substitution.eval_target == eval_target:
                return substitution.mt_target
        return eval_target

    def to_json(self) -> dict:
        return {
            "family": self.family.value,
            "variant": self.variant.value if self.variant else None,
            "schedule": self.schedule.value,
            "source": self.source.render(),
            "targets": [t.render() for t in self.targets],
            "hr_languages": [h.render() for h in self.hr_languages],
            "seeds": list(self.seeds),
            "decoding": self.decoding.to_wire(),
            "rt_ens_src_include_clean": self.rt_ens_src_include_clean,
            "substitutions": [
                {"eval_target": s.eval_target.render(), "mt_target": s.mt_target.render(),
                 "score": s.score}
                for s in self.substitutions],
            "eval_languages": [t.render() for t in self.eval_languages],
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> "StrategySpec":
        return cls(
            family=Family(obj["family"]),
            variant=Variant(obj["variant"]) if obj.get("variant") else None,
            schedule=Schedule(obj.get("schedule", "joint")),
            targets=tuple(LanguageTag.parse(t) for t in obj["targets"]),
            hr_languages=tuple(LanguageTag.parse(h)
                               for h in obj.get("hr_languages",
                                                [t.render() for t in DEFAULT_HR_LANGUAGES])),
            source=LanguageTag.parse(obj.get("source", DEFAULT_SOURCE.render())),
            seeds=tuple(obj.get("seeds", (0, 1, 2))),
            decoding=(DecodingConfig.from_wire(obj["decoding"])
                      if obj.get("decoding") else DecodingConfig.beam()),
            rt_ens_src_include_clean=bool(obj.get("rt_ens_src_include_clean", False)),
            substitutions=tuple(
                Substitution(LanguageTag.parse(s["eval_target"]),
                             LanguageTag.parse(s["mt_target"]), float(s["score"]))
                for s in obj.get("substitutions", ())),
            eval_languages=tuple(LanguageTag.parse(t)
                                 for t in obj.get("eval_languages", ())),
        )


@dataclass(frozen=True)
class PlanEntry:
    """One dataset inside a phase; weights are fixed at 1."""

    name: str
    dataset: Dataset
    weight: float = 1.0

    def __post_init__(self):
        if self.weight != 1.0:
            raise ValueError("data weighting is not supported; weight must be 1")


Phase = tuple[PlanEntry, ...]


@dataclass(frozen=True)
class ModelPlan:
    """Training phases for one model; ``seed`` pins an ensemble member's
    seed (None means the run seed applies)."""

    phases: tuple[Phase, ...]
    seed: Optional[int] = None

    @property
    def size(self) -> int:
        return sum(len(e.dataset) for phase in self.phases for e in phase)

    def phase_sizes(self) -> tuple[int, ...]:
        return tuple(sum(len(e.dataset) for e in phase) for phase in self.phases)


@dataclass
class TrainingPlan:
    """Compiled training data: single-model phases, or per-model plans for
    ensembles. ``metadata`` carries projection reports and substitutions."""

    phases: tuple[Phase, ...]
    model_count: int = 1
    per_model_plans: Optional[tuple[ModelPlan, ...]] = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.per_model_plans is not None:
            if len(self.per_model_plans) != self.model_count:
                raise ValueError("per_model_plans must match model_count")
        elif self.model_count != 1:
            raise ValueError("multi-model plans need per_model_plans")

    def model_plans(self) -> tuple[ModelPlan, ...]:
        if self.per_model_plans is not None:
            return self.per_model_plans
        return (ModelPlan(self.phases),)


@dataclass(frozen=True)
class InferencePipeline:
    """Per-model test transforms plus the combination rule."""

    transforms: tuple[TestTransform, ...]
    combine: Combine = Combine.SINGLE

    def __post_init__(self):
        if not self.transforms:
            raise ValueError("need at least one transform")
        if self.combine is Combine.SINGLE and len(self.transforms) != 1:
            raise ValueError("single combine implies exactly one model")


@dataclass
class Resources:
    """Everything compilation draws on: clean data and backends."""

    train: Dataset
    validation: Optional[Dataset] = None
    translator: Optional[TranslatorBackend] = None
    aligner: Optional[AlignerBackend] = None
    supported: Optional[frozenset[LanguageTag]] = None
    typology: Optional[TypologyStore] = None
    oracle_validation: Mapping[LanguageTag, Dataset] = field(default_factory=dict)

    def __post_init__(self):
        if self.supported is not None and self.translator is not None:
            declared = self.translator.supported_languages()
            if declared is not None and frozenset(self.supported) != declared:
                raise ValueError("supported set disagrees with the translator's")

    def supported_languages(self) -> Optional[frozenset[LanguageTag]]:
        if self.supported is not None:
            return frozenset(self.supported)
        if self.translator is not None:
            return self.translator.supported_languages()
        return None

    def supports(self, language: LanguageTag) -> bool:
        supported = self.supported_languages()
        return supported is None or language in supported


def apply_proxy_substitution(spec: StrategySpec, typology: TypologyStore,
                             supported: frozenset[LanguageTag]) -> StrategySpec:
    """Replace MT-unsupported targets with their typologically closest
    supported language; evaluation stays on the true targets (several of
    which may share one proxy)."""
    new_targets: list[LanguageTag] = []
    subs = list(spec.substitutions)
    changed = False
    for target in spec.targets:
        if target in supported:
            new_targets.append(target)
            continue
        proxy, score = closest_supported(target, supported, typology)
        subs.append(Substitution(target, proxy, score))
        changed = True
        if proxy not in new_targets:
            new_targets.append(proxy)
    if not changed:
        return spec
    return replace(spec, targets=tuple(dict.fromkeys(new_targets)),
                   substitutions=tuple(subs),
                   eval_languages=spec.eval_targets)


def _languages_to_translate(spec: StrategySpec) -> list[LanguageTag]:
    langs: list[LanguageTag] = [spec.source]
    variant = spec.variant
    if variant is None:
        return []
    if variant is not Variant.SRC_HR:
        langs.extend(spec.targets)
    if variant in _USES_HR and variant is not Variant.RT_ENS_SRC:
        langs.extend(spec.hr_languages)
    return langs


def compile_strategy(spec: StrategySpec, resources: Resources, *,
                     max_batch: int = 32, jobs: int = 1
                     ) -> tuple[TrainingPlan, InferencePipeline]:
    """Compile a strategy into a training plan and inference pipeline.

    Token-level datasets pass through label projection; the resulting
    reports land in ``plan.metadata["projection_reports"]`` keyed by the
    plan-entry name. Unsupported languages raise UnsupportedLanguage; run
    :func:`apply_proxy_substitution` first to proxy them.
    """
    missing = [lang for lang in _languages_to_translate(spec)
               if not resources.supports(lang)]
    if missing:
        raise UnsupportedLanguage(
            "not supported by the translator: " + ", ".join(str(m) for m in missing))

    metadata: dict = {
        "family": spec.family.value,
        "variant": spec.variant.value if spec.variant else None,
        "schedule": spec.schedule.value,
        "eval_targets": [t.render() for t in spec.eval_targets],
        "substitutions": [
            {"eval_target": s.eval_target.render(), "mt_target": s.mt_target.render(),
             "score": s.score} for s in spec.substitutions],
        "projection_reports": {},
    }
    reports: dict[str, ProjectionReport] = {}
    clean = PlanEntry("clean", resources.train)
    is_ner = resources.train.task is TaskKind.NER
    src = spec.source

    def record(name: str, dataset: Dataset, report: Optional[ProjectionReport]) -> PlanEntry:
        if report is not None:
            reports[name] = report
            if report.total > 0 and report.retained == 0:
                raise ProjectionCollapse(f"{name}: label projection discarded all instances")
        return PlanEntry(name, dataset)

    def translated(tgt: LanguageTag) -> PlanEntry:
        name = f"t:{tgt}"
        if is_ner:
            if resources.aligner is None:
                raise ValueError("token-level strategies need an aligner backend")
            dataset, report = translate_and_project(
                resources.translator, resources.aligner, resources.train,
                src, tgt, spec.decoding, max_batch=max_batch, jobs=jobs)
            return record(name, dataset, report)
        dataset = translate_dataset(resources.translator, resources.train,
                                    src, tgt, spec.decoding,
                                    max_batch=max_batch, jobs=jobs)
        return record(name, dataset, None)

    def roundtripped(pivot: LanguageTag, final: LanguageTag) -> PlanEntry:
        name = f"rt:{pivot}>{final}"
        if is_ner:
            if resources.aligner is None:
                raise ValueError("token-level strategies need an aligner backend")
            dataset, report = roundtrip_and_project(
                resources.translator, resources.aligner, resources.train,
                src, pivot, final, spec.decoding, max_batch=max_batch, jobs=jobs)
            return record(name, dataset, report)
        dataset = roundtrip_dataset(resources.translator, resources.train,
                                    src, pivot, final, spec.decoding,
                                    max_batch=max_batch, jobs=jobs)
        return record(name, dataset, None)

    to_source = TestTransform.translate_to(src)
    variant = spec.variant
    per_model: Optional[tuple[ModelPlan, ...]] = None
    phases: tuple[Phase, ...]
    transforms: tuple[TestTransform, ...]
    combine = Combine.SINGLE

    if spec.family is Family.ZERO_SHOT:
        phases = ((clean,),)
        transforms = (TestTransform.none(),)
    elif variant is Variant.T:
        phases = ((translated(spec.targets[0]),),)
        transforms = (TestTransform.none(),)
    elif variant is Variant.T_SRC:
        entry = translated(spec.targets[0])
        phases = (((clean,), (entry,)) if spec.schedule is Schedule.SEQUENTIAL
                  else ((clean, entry),))
        transforms = (TestTransform.none(),)
    elif variant is Variant.M_T:
        phases = (tuple(translated(t) for t in spec.targets),)
        transforms = (TestTransform.none(),)
    elif variant is Variant.M_T_SRC:
        entries = tuple(translated(t) for t in spec.targets)
        phases = (((clean,), entries) if spec.schedule is Schedule.SEQUENTIAL
                  else ((clean, *entries),))
        transforms = (TestTransform.none(),)
    elif variant is Variant.SRC_HR:
        phases = ((clean, *(translated(h) for h in spec.hr_languages)),)
        transforms = (TestTransform.none(),)
    elif variant is Variant.T_SRC_HR:
        phases = ((clean, translated(spec.targets[0]),
                   *(translated(h) for h in spec.hr_languages)),)
        transforms = (TestTransform.none(),)
    elif variant is Variant.M_T_SRC_HR:
        phases = ((clean, *(translated(t) for t in spec.targets),
                   *(translated(h) for h in spec.hr_languages)),)
        transforms = (TestTransform.none(),)
    elif variant is Variant.TTEST:
        phases = ((clean,),)
        transforms = (to_source,)
    elif variant is Variant.RT:
        phases = ((roundtripped(spec.targets[0], src),),)
        transforms = (to_source,)
    elif variant is Variant.RT_SRC:
        phases = ((clean, roundtripped(spec.targets[0], src)),)
        transforms = (to_source,)
    elif variant is Variant.M_RT_SRC:
        phases = ((clean, *(roundtripped(t, src) for t in spec.targets)),)
        transforms = (to_source,)
    elif variant is Variant.RT_ENS_SRC:
        entry = roundtripped(spec.targets[0], src)
        member_phase: Phase = (clean, entry) if spec.rt_ens_src_include_clean else (entry,)
        per_model = tuple(ModelPlan(phases=(member_phase,), seed=seed)
                          for seed in spec.seeds)
        phases = ()
        transforms = tuple(to_source for _ in per_model)
        combine = Combine.AVERAGE
    elif variant is Variant.RT_ENS_HR:
        target = spec.targets[0]
        members = [ModelPlan(phases=((clean, roundtripped(target, src)),))]
        member_transforms = [to_source]
        for h in spec.hr_languages:
            members.append(ModelPlan(phases=((clean, roundtripped(target, h)),)))
            member_transforms.append(TestTransform.translate_to(h))
        per_model = tuple(members)
        phases = ()
        transforms = tuple(member_transforms)
        combine = Combine.AVERAGE
    else:  # pragma: no cover - exhaustive over the enum
        raise UnsupportedVariant(str(variant))

    metadata["projection_reports"] = reports
    model_count = len(per_model) if per_model is not None else 1
    plan = TrainingPlan(phases=phases, model_count=model_count,
                        per_model_plans=per_model, metadata=metadata)
    pipeline = InferencePipeline(transforms=transforms, combine=combine)
    return plan, pipeline
