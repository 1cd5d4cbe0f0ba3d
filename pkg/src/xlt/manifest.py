"""Plan and run manifests: serialization of compiled plans to a manifest
directory of JSONL datasets plus plan.json, and the content-digested run
manifest that makes reruns reproducible.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional

from .align import ProjectionReport
from .corpus import (
    Dataset,
    LanguageTag,
    Split,
    TaskKind,
    dataset_from_json,
    dataset_to_json,
    read_jsonl,
    write_jsonl,
)
from .strategy import (
    Combine,
    InferencePipeline,
    ModelPlan,
    PlanEntry,
    TestTransform,
    TrainingPlan,
    TransformKind,
)


def sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def sha256_file(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _safe_name(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]", "_", name)


# --- inline plan serialization (wire protocol) --------------------------------

def model_plan_to_json(plan: ModelPlan) -> dict:
    return {
        "seed": plan.seed,
        "phases": [[{"name": entry.name, "weight": entry.weight,
                     "dataset": dataset_to_json(entry.dataset)}
                    for entry in phase]
                   for phase in plan.phases],
    }


def model_plan_from_json(obj: Mapping) -> ModelPlan:
    phases = tuple(
        tuple(PlanEntry(entry["name"], dataset_from_json(entry["dataset"]))
              for entry in phase)
        for phase in obj["phases"])
    return ModelPlan(phases=phases, seed=obj.get("seed"))


# --- plan manifest directories -------------------------------------------------

def _transform_to_json(transform: TestTransform) -> dict:
    return {"kind": transform.kind.value,
            "language": transform.language.render() if transform.language else None}


def _transform_from_json(obj: Mapping) -> TestTransform:
    kind = TransformKind(obj["kind"])
    if kind is TransformKind.TRANSLATE_TO:
        return TestTransform.translate_to(LanguageTag.parse(obj["language"]))
    return TestTransform.none()


def pipeline_to_json(pipeline: InferencePipeline) -> dict:
    return {"transforms": [_transform_to_json(t) for t in pipeline.transforms],
            "combine": pipeline.combine.value}


def pipeline_from_json(obj: Mapping) -> InferencePipeline:
    return InferencePipeline(
        transforms=tuple(_transform_from_json(t) for t in obj["transforms"]),
        combine=Combine(obj["combine"]))


def write_plan_manifest(plan: TrainingPlan, pipeline: InferencePipeline,
                        directory: Path) -> dict[str, str]:
    """Write plan.json plus one JSONL file per distinct dataset entry.

    Returns {relative path: sha256} for every file written. Dataset files
    carry the instances; task/label_set/split live in plan.json so a
    reload reproduces each dataset exactly.
    """
    directory.mkdir(parents=True, exist_ok=True)
    digests: dict[str, str] = {}
    seen: dict[str, dict] = {}

    def dataset_ref(entry: PlanEntry) -> dict:
        filename = f"datasets/{_safe_name(entry.name)}.jsonl"
        ref = {
            "name": entry.name,
            "weight": entry.weight,
            "file": filename,
            "task": entry.dataset.task.value,
            "label_set": list(entry.dataset.label_set),
            "split": entry.dataset.split.value,
            "count": len(entry.dataset),
        }
        if filename not in seen:
            path = directory / filename
            path.parent.mkdir(parents=True, exist_ok=True)
            text = write_jsonl(entry.dataset)
            path.write_text(text, encoding="utf-8")
            digests[filename] = sha256_text(text)
            seen[filename] = ref
        elif digests[filename] != sha256_text(write_jsonl(entry.dataset)):
            raise ValueError(f"plan entry name collision: {entry.name!r} "
                             "refers to two different datasets")
        return ref

    def phases_json(phases) -> list:
        return [[dataset_ref(entry) for entry in phase] for phase in phases]

    obj = {
        "model_count": plan.model_count,
        "phases": phases_json(plan.phases),
        "per_model_plans": ([{"seed": mp.seed, "phases": phases_json(mp.phases)}
                             for mp in plan.per_model_plans]
                            if plan.per_model_plans is not None else None),
        "pipeline": pipeline_to_json(pipeline),
        "metadata": {
            **{k: v for k, v in plan.metadata.items() if k != "projection_reports"},
            "projection_reports": {
                name: report.to_json()
                for name, report in plan.metadata.get("projection_reports", {}).items()},
        },
    }
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    (directory / "plan.json").write_text(text, encoding="utf-8")
    digests["plan.json"] = sha256_text(text)
    return digests


def read_plan_manifest(directory: Path) -> tuple[TrainingPlan, InferencePipeline]:
    obj = json.loads((directory / "plan.json").read_text(encoding="utf-8"))
    cache: dict[str, Dataset] = {}

    def load_entry(ref: Mapping) -> PlanEntry:
        filename = ref["file"]
        if filename not in cache:
            text = (directory / filename).read_text(encoding="utf-8")
            cache[filename] = read_jsonl(
                text, task=TaskKind(ref["task"]), label_set=tuple(ref["label_set"]),
                split=Split(ref["split"]))
        return PlanEntry(ref["name"], cache[filename], ref.get("weight", 1.0))

    def load_phases(phases_obj) -> tuple:
        return tuple(tuple(load_entry(ref) for ref in phase) for phase in phases_obj)

    per_model = None
    if obj.get("per_model_plans") is not None:
        per_model = tuple(ModelPlan(load_phases(mp["phases"]), seed=mp.get("seed"))
                          for mp in obj["per_model_plans"])
    metadata = dict(obj.get("metadata", {}))
    reports = {}
    for name, rep in metadata.get("projection_reports", {}).items():
        reports[name] = ProjectionReport(
            total=rep["total"], retained=rep["retained"],
            discarded_no_link=rep["discarded_no_link"],
            discarded_span_conflict=rep["discarded_span_conflict"],
            absorbed_tokens=rep.get("absorbed_tokens", 0))
    metadata["projection_reports"] = reports
    plan = TrainingPlan(phases=load_phases(obj["phases"]),
                        model_count=obj["model_count"],
                        per_model_plans=per_model, metadata=metadata)
    return plan, pipeline_from_json(obj["pipeline"])


# --- run manifest ---------------------------------------------------------------

@dataclass
class RunManifest:
    """Everything needed to reconstruct a run: config, digests, seeds."""

    config_hash: str
    config: dict
    seeds: list[int] = field(default_factory=list)
    backends: dict = field(default_factory=dict)
    strategy: Optional[dict] = None
    files: dict[str, str] = field(default_factory=dict)  # relpath -> sha256
    projection_reports: dict = field(default_factory=dict)
    selection: list[dict] = field(default_factory=list)
    scores: dict = field(default_factory=dict)
    stages: list[str] = field(default_factory=list)

    def add_files(self, stage: str, digests: Mapping[str, str]) -> None:
        for rel, digest in digests.items():
            self.files[f"{stage}/{rel}"] = digest
        if stage not in self.stages:
            self.stages.append(stage)

    def to_json(self) -> dict:
        return {
            "config_hash": self.config_hash,
            "config": self.config,
            "seeds": self.seeds,
            "backends": self.backends,
            "strategy": self.strategy,
            "files": dict(sorted(self.files.items())),
            "projection_reports": self.projection_reports,
            "selection": self.selection,
            "scores": self.scores,
            "stages": self.stages,
        }

    def save(self, path: Path) -> None:
        path.write_text(json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n",
                        encoding="utf-8")

    @classmethod
    def load(cls, path: Path) -> "RunManifest":
        obj = json.loads(path.read_text(encoding="utf-8"))
        manifest = cls(config_hash=obj["config_hash"], config=obj["config"])
        manifest.seeds = list(obj.get("seeds", []))
        manifest.backends = dict(obj.get("backends", {}))
        manifest.strategy = obj.get("strategy")
        manifest.files = dict(obj.get("files", {}))
        manifest.projection_reports = dict(obj.get("projection_reports", {}))
        manifest.selection = list(obj.get("selection", []))
        manifest.scores = dict(obj.get("scores", {}))
        manifest.stages = list(obj.get("stages", []))
        return manifest


def config_hash(config: Mapping) -> str:
    return sha256_text(json.dumps(config, sort_keys=True))[:16]
