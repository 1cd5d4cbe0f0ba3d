"""Command-line orchestration: reproducible runs driven by a JSON config.

Stages form a dependency chain (build-data -> train -> select -> evaluate
-> ensemble -> report, with project next to build-data for token-level
tasks); each stage's outputs live under ``runs/<config-hash>/<stage>/``
and are reused on rerun unless ``--force`` is given.

Exit codes: 0 success, 2 config error, 3 backend error, 4 data error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .align import ProjectionReport, projection_rate_rows
from .corpus import LanguageTag, TaskKind
from .errors import (
    BackendFailure,
    BackendUnreachable,
    ConfigInvalid,
    StageDependencyMissing,
    UndeclaredPair,
    UnsupportedLanguage,
    XLTError,
)
from .manifest import (
    RunManifest,
    config_hash,
    read_plan_manifest,
    sha256_file,
    sha256_text,
    write_plan_manifest,
)
from .metrics import ScoreReport, rate_table_csv, task_metric
from .model import Checkpoint, CheckpointSeries, DeskModel, DeskParameters
from .pipeline import TrainedModels, evaluate_members, validation_series
from .runconfig import (
    RunConfig,
    load_config,
    make_aligner,
    make_task_model,
    make_translator,
)
from .selection import build_validation, select_checkpoint
from .strategy import (
    Combine,
    Resources,
    apply_proxy_substitution,
    compile_strategy,
)
from .typology import closest_supported, load_typology_csv, rank_candidates

STAGES = ("build-data", "project", "train", "select", "evaluate", "ensemble", "report")


# --- run context -----------------------------------------------------------------

class RunContext:
    """One config bound to its run directory and manifest."""

    def __init__(self, config: RunConfig, runs_dir: Path, jobs: int = 1,
                 force: bool = False):
        self.config = config
        self.jobs = jobs
        self.force = force
        hashed = {"config": config.raw, "backends": config.backends}
        self.config_hash = config_hash(hashed)
        self.run_dir = runs_dir / self.config_hash
        self.run_dir.mkdir(parents=True, exist_ok=True)
        manifest_path = self.run_dir / "manifest.json"
        if manifest_path.exists():
            self.manifest = RunManifest.load(manifest_path)
        else:
            self.manifest = RunManifest(config_hash=self.config_hash, config=config.raw)
        self.manifest.seeds = list(config.seeds)
        self.manifest.backends = dict(config.backends)
        self._resources: Optional[Resources] = None

    def save_manifest(self) -> None:
        self.manifest.save(self.run_dir / "manifest.json")

    def stage_dir(self, stage: str) -> Path:
        path = self.run_dir / stage
        path.mkdir(parents=True, exist_ok=True)
        return path

    def stage_cached(self, stage: str) -> bool:
        if self.force or stage not in self.manifest.stages:
            return False
        prefix = f"{stage}/"
        entries = {rel: digest for rel, digest in self.manifest.files.items()
                   if rel.startswith(prefix)}
        if not entries:
            return False
        for rel, digest in entries.items():
            path = self.run_dir / rel
            if not path.exists() or sha256_file(path) != digest:
                return False
        return True

    def write_stage_file(self, stage: str, name: str, text: str) -> None:
        path = self.stage_dir(stage) / name
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
        self.manifest.add_files(stage, {name: sha256_text(text)})

    def resources(self) -> Resources:
        if self._resources is None:
            config = self.config
            translator = make_translator(config.backends["mt"], config.base_dir,
                                         config.supported_languages)
            aligner = (make_aligner(config.backends["align"])
                       if config.task is TaskKind.NER else None)
            typology = (load_typology_csv(config.typology_csv)
                        if config.typology_csv else None)
            train = config.train.load(config.task)
            validation = config.validation.load(config.task)
            oracle = {lang: src.load(config.task)
                      for lang, src in config.oracle_validation.items()}
            try:
                self._resources = Resources(
                    train=train, validation=validation, translator=translator,
                    aligner=aligner, supported=config.supported_languages,
                    typology=typology, oracle_validation=oracle)
            except ValueError as exc:
                raise ConfigInvalid(str(exc)) from exc
        return self._resources

    def effective_spec(self):
        spec = self.config.strategy
        resources = self.resources()
        supported = resources.supported_languages()
        if self.config.proxy_unsupported and supported is not None:
            unsupported = [t for t in spec.targets if t not in supported]
            if unsupported:
                if resources.typology is None:
                    raise ConfigInvalid(
                        "proxy_unsupported needs typology_csv for: "
                        + ", ".join(map(str, unsupported)))
                spec = apply_proxy_substitution(spec, resources.typology, supported)
        return spec


# --- stages -----------------------------------------------------------------------

def stage_build_data(ctx: RunContext) -> None:
    if ctx.stage_cached("build-data"):
        print("build-data: cached")
        return
    spec = ctx.effective_spec()
    plan, pipeline = compile_strategy(spec, ctx.resources(),
                                      max_batch=ctx.config.max_batch, jobs=ctx.jobs)
    digests = write_plan_manifest(plan, pipeline, ctx.stage_dir("build-data"))
    ctx.manifest.add_files("build-data", digests)
    ctx.manifest.strategy = spec.to_json()
    ctx.manifest.projection_reports = {
        name: report.to_json()
        for name, report in plan.metadata.get("projection_reports", {}).items()}
    ctx.save_manifest()
    sizes = [mp.phase_sizes() for mp in plan.model_plans()]
    print(f"build-data: {plan.model_count} model(s), phase sizes {sizes}")


def _load_plan(ctx: RunContext):
    plan_path = ctx.run_dir / "build-data" / "plan.json"
    if not plan_path.exists():
        raise StageDependencyMissing("run build-data first")
    return read_plan_manifest(ctx.run_dir / "build-data")


def stage_project(ctx: RunContext) -> None:
    if ctx.config.task is not TaskKind.NER:
        print("project: sequence task, nothing to project")
        return
    if ctx.stage_cached("project"):
        print("project: cached")
        return
    plan, _ = _load_plan(ctx)
    reports: dict[str, ProjectionReport] = plan.metadata.get("projection_reports", {})
    rows = projection_rate_rows(reports)
    ctx.write_stage_file("project", "projection_rates.csv",
                         rate_table_csv(rows, ("dataset", "projection_rate")))
    ctx.write_stage_file("project", "projection_reports.json", json.dumps(
        {name: report.to_json() for name, report in reports.items()},
        indent=2, sort_keys=True) + "\n")
    ctx.save_manifest()
    for name, rate in rows:
        print(f"project: {name}: {rate:.1f}")


def _member_npy(seed: int, member: int) -> str:
    return f"seed{seed}/member{member}.npy"


def stage_train(ctx: RunContext) -> None:
    if ctx.stage_cached("train"):
        print("train: cached")
        return
    plan, _ = _load_plan(ctx)
    config = ctx.config
    stage = ctx.stage_dir("train")
    remote_factory = make_task_model(config.backends["model"], config.task)
    digests = {}
    meta: dict = {"hyper": config.hyper.to_json(),
                  "checkpoint_fraction": config.checkpoint_fraction,
                  "members": {}}
    def train_member(seed: int, j: int, model_plan) -> tuple[str, dict]:
        entry: dict
        if remote_factory is not None:
            model = remote_factory(model_plan)
            series = model.train(model_plan, config.hyper, seed,
                                 config.checkpoint_fraction)
            job_id = series.checkpoints[0].handle[0] if series.checkpoints else ""
            entry = {"job_id": job_id}
        else:
            desk = DeskModel.for_plan(model_plan, config.features)
            series = desk.train(model_plan, config.hyper, seed,
                                config.checkpoint_fraction)
            stack = np.stack([c.handle.weights for c in series.checkpoints])
            rel = _member_npy(seed, j)
            path = stage / rel
            path.parent.mkdir(parents=True, exist_ok=True)
            np.save(path, stack)
            entry = {"file": rel}
        entry["fractions"] = [c.epoch_fraction for c in series.checkpoints]
        entry["total_epochs"] = series.total_epochs
        return f"{seed}/{j}", entry

    work = [(seed, j, model_plan) for seed in config.seeds
            for j, model_plan in enumerate(plan.model_plans())]
    if ctx.jobs > 1 and len(work) > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=ctx.jobs) as pool:
            results = list(pool.map(lambda args: train_member(*args), work))
    else:
        results = [train_member(*args) for args in work]
    for key, entry in sorted(results):
        meta["members"][key] = entry
        if "file" in entry:
            digests[entry["file"]] = sha256_file(stage / entry["file"])
    text = json.dumps(meta, indent=2, sort_keys=True) + "\n"
    (stage / "training.json").write_text(text, encoding="utf-8")
    digests["training.json"] = sha256_text(text)
    ctx.manifest.add_files("train", digests)
    ctx.save_manifest()
    print(f"train: {len(config.seeds)} seed(s) x {plan.model_count} model(s)")


def _load_trained(ctx: RunContext, plan, seed: int) -> TrainedModels:
    stage = ctx.run_dir / "train"
    meta_path = stage / "training.json"
    if not meta_path.exists():
        raise StageDependencyMissing("run train first")
    meta = json.loads(meta_path.read_text(encoding="utf-8"))
    from .model import Hyperparameters

    hyper = Hyperparameters.from_json(meta["hyper"])
    remote_factory = make_task_model(ctx.config.backends["model"], ctx.config.task)
    models, series_list = [], []
    for j, model_plan in enumerate(plan.model_plans()):
        info = meta["members"].get(f"{seed}/{j}")
        if info is None:
            raise StageDependencyMissing(f"no trained member {seed}/{j}")
        if remote_factory is not None:
            model = remote_factory(model_plan)
            checkpoints = tuple(
                Checkpoint(fraction, (info["job_id"], fraction))
                for fraction in info["fractions"])
        else:
            model = DeskModel.for_plan(model_plan, ctx.config.features)
            stack = np.load(stage / info["file"])
            checkpoints = tuple(
                Checkpoint(fraction, DeskParameters(model.task, model.label_set,
                                                    model.classes, stack[i],
                                                    ctx.config.features))
                for i, fraction in enumerate(info["fractions"]))
        series = CheckpointSeries(checkpoints, hyper,
                                  total_epochs=info["total_epochs"])
        models.append(model)
        series_list.append(series)
    return TrainedModels(models, series_list)


def stage_select(ctx: RunContext) -> None:
    if ctx.stage_cached("select"):
        print("select: cached")
        return
    plan, pipeline = _load_plan(ctx)
    spec = ctx.effective_spec()
    resources = ctx.resources()
    config = ctx.config
    records = []
    for seed in config.seeds:
        trained = _load_trained(ctx, plan, seed)
        for eval_target in spec.eval_targets:
            mt_target = spec.mt_target_for(eval_target)
            validation = build_validation(
                config.validation_variant, spec.family, resources, eval_target,
                mt_target=mt_target, decoding=spec.decoding,
                max_batch=config.max_batch, jobs=ctx.jobs)
            series = validation_series(trained, pipeline, validation,
                                       resources.translator, resources.aligner,
                                       decoding=spec.decoding)
            chosen = select_checkpoint(series)
            records.append({
                "seed": seed,
                "target": eval_target.render(),
                "variant": config.validation_variant.value,
                "chosen_fraction": chosen,
                "score": dict(series)[chosen],
                "series": [[fraction, score] for fraction, score in series],
            })
    text = json.dumps({"selection": records}, indent=2, sort_keys=True) + "\n"
    ctx.write_stage_file("select", "selection.json", text)
    ctx.manifest.selection = [
        {k: r[k] for k in ("seed", "target", "variant", "chosen_fraction", "score")}
        for r in records]
    ctx.save_manifest()
    for r in records:
        print(f"select: seed {r['seed']} {r['target']}: "
              f"fraction {r['chosen_fraction']} ({r['variant']} {r['score']:.4f})")


def _load_selection(ctx: RunContext) -> dict[tuple[int, str], float]:
    path = ctx.run_dir / "select" / "selection.json"
    if not path.exists():
        raise StageDependencyMissing("run select first")
    records = json.loads(path.read_text(encoding="utf-8"))["selection"]
    return {(r["seed"], r["target"]): r["chosen_fraction"] for r in records}


def _evaluate(ctx: RunContext, combine_ensemble: bool) -> dict:
    plan, pipeline = _load_plan(ctx)
    spec = ctx.effective_spec()
    resources = ctx.resources()
    config = ctx.config
    chosen_map = _load_selection(ctx)
    test_sets = {lang: src.load(config.task) for lang, src in config.test.items()}
    scores: dict = {}
    for seed in config.seeds:
        trained = _load_trained(ctx, plan, seed)
        for eval_target in spec.eval_targets:
            test = test_sets.get(eval_target)
            if test is None:
                continue
            mt_target = spec.mt_target_for(eval_target)
            if mt_target != eval_target:
                from .corpus import pretend_language

                test = pretend_language(test, mt_target)
            chosen = chosen_map.get((seed, eval_target.render()))
            if chosen is None:
                raise StageDependencyMissing(
                    f"no selection for seed {seed} target {eval_target}")
            members = trained.members_at(chosen, pipeline)
            key = f"{seed}/{eval_target.render()}"
            if combine_ensemble:
                score = evaluate_members(members, pipeline.combine, test,
                                         resources.translator, resources.aligner,
                                         decoding=spec.decoding)
                scores[key] = score
            else:
                scores[key] = [
                    evaluate_members([member], Combine.SINGLE, test,
                                     resources.translator, resources.aligner,
                                     decoding=spec.decoding)
                    for member in members]
    return scores


def stage_evaluate(ctx: RunContext) -> None:
    if ctx.stage_cached("evaluate"):
        print("evaluate: cached")
        return
    plan, pipeline = _load_plan(ctx)
    is_ensemble = pipeline.combine is Combine.AVERAGE
    scores = _evaluate(ctx, combine_ensemble=not is_ensemble)
    payload = {"metric": task_metric(ctx.config.task),
               "per_member" if is_ensemble else "scores": scores}
    ctx.write_stage_file("evaluate", "scores.json",
                         json.dumps(payload, indent=2, sort_keys=True) + "\n")
    if not is_ensemble:
        ctx.manifest.scores["evaluate"] = scores
    ctx.save_manifest()
    for key, value in sorted(scores.items()):
        print(f"evaluate: {key}: {value}")


def stage_ensemble(ctx: RunContext) -> None:
    _, pipeline = _load_plan(ctx)
    if pipeline.combine is not Combine.AVERAGE:
        print("ensemble: single-model strategy, nothing to combine")
        return
    if ctx.stage_cached("ensemble"):
        print("ensemble: cached")
        return
    scores = _evaluate(ctx, combine_ensemble=True)
    payload = {"metric": task_metric(ctx.config.task), "scores": scores}
    ctx.write_stage_file("ensemble", "scores.json",
                         json.dumps(payload, indent=2, sort_keys=True) + "\n")
    ctx.manifest.scores["ensemble"] = scores
    ctx.save_manifest()
    for key, value in sorted(scores.items()):
        print(f"ensemble: {key}: {value:.4f}")


def stage_report(ctx: RunContext) -> None:
    if ctx.stage_cached("report"):
        print("report: cached")
        return
    _, pipeline = _load_plan(ctx)
    headline_stage = "ensemble" if pipeline.combine is Combine.AVERAGE else "evaluate"
    path = ctx.run_dir / headline_stage / "scores.json"
    if not path.exists():
        raise StageDependencyMissing(f"run {headline_stage} first")
    payload = json.loads(path.read_text(encoding="utf-8"))
    flat = payload["scores"]
    by_language: dict[str, list[float]] = {}
    for key in sorted(flat):
        seed, lang = key.split("/", 1)
        by_language.setdefault(lang, []).append(flat[key] * 100.0)
    report = ScoreReport({lang: tuple(vals) for lang, vals in by_language.items()},
                         metric=payload["metric"])
    ctx.write_stage_file("report", "scores.csv", report.to_csv())
    ctx.write_stage_file("report", "scores.json",
                         json.dumps(report.to_json(), indent=2, sort_keys=True) + "\n")
    ctx.manifest.scores["report"] = report.to_json()
    ctx.save_manifest()
    print(report.to_csv(), end="")


_STAGE_FUNCS = {
    "build-data": stage_build_data,
    "project": stage_project,
    "train": stage_train,
    "select": stage_select,
    "evaluate": stage_evaluate,
    "ensemble": stage_ensemble,
    "report": stage_report,
}


def run_stages(ctx: RunContext, stages: list[str]) -> RunManifest:
    for stage in stages:
        _STAGE_FUNCS[stage](ctx)
    ctx.save_manifest()
    return ctx.manifest


def run(config_path: Path, stages: list[str], *, runs_dir: Path,
        backend_overrides: Optional[dict[str, str]] = None, jobs: int = 1,
        force: bool = False) -> RunManifest:
    """Programmatic entry point mirroring the CLI subcommands."""
    config = load_config(config_path, backend_overrides)
    ctx = RunContext(config, runs_dir, jobs=jobs, force=force)
    return run_stages(ctx, stages)


# --- argument parsing ---------------------------------------------------------------

def _parse_backend_args(values: Optional[list[str]]) -> dict[str, str]:
    overrides: dict[str, str] = {}
    for value in values or []:
        if "=" in value and not value.startswith(("http:", "https:")):
            kind, spec = value.split("=", 1)
            if kind not in ("mt", "align", "model"):
                raise ConfigInvalid(f"--backend {value}: kind must be mt/align/model")
            overrides[kind] = spec
        elif value.startswith(("http:", "https:")):
            # one service can host all three endpoints
            overrides.update(mt=value, align=value, model=value)
        else:
            overrides["mt"] = value
            overrides["align"] = ("mock:reverse" if value == "mock:reverse"
                                  else "mock:oracle")
    return overrides


def _add_run_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", required=True, type=Path)
    parser.add_argument("--backend", action="append", metavar="[KIND=]SPEC",
                        help="mt/align/model backend: mock:identity, "
                             "mock:dict:<file>, mock:reverse, http:<url>")
    parser.add_argument("--runs-dir", type=Path, default=Path("runs"))
    parser.add_argument("--jobs", type=int, default=1)
    parser.add_argument("--force", action="store_true")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the config's seed list with one seed")
    parser.add_argument("--typology-csv", type=Path, default=None,
                        help="override the config's typology vector store")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="xlt",
        description="Compile and run translation-based cross-lingual transfer strategies")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    for name, help_text in (
            ("build-data", "compile the strategy into a plan manifest"),
            ("project", "write label-projection reports (token-level tasks)"),
            ("train", "train desk models over the compiled plan"),
            ("select", "build validation data and select checkpoints"),
            ("evaluate", "score the inference pipeline on test data"),
            ("ensemble", "combine ensemble member predictions"),
            ("report", "aggregate seed scores into the final tables"),
            ("all", "run every stage in order")):
        stage_parser = sub.add_parser(name, help=help_text)
        _add_run_arguments(stage_parser)

    closest = sub.add_parser("closest-lang",
                             help="typologically closest MT-supported language")
    closest.add_argument("--target", required=True)
    closest.add_argument("--typology-csv", required=True, type=Path)
    closest.add_argument("--supported", required=True, type=Path,
                         help="file with one supported language tag per line")
    closest.add_argument("--top", type=int, default=1)
    return parser


def cmd_closest_lang(args: argparse.Namespace) -> int:
    store = load_typology_csv(args.typology_csv)
    target = LanguageTag.parse(args.target)
    supported = frozenset(
        LanguageTag.parse(line) for line in
        args.supported.read_text(encoding="utf-8").splitlines() if line.strip())
    if args.top > 1:
        for lang, score in rank_candidates(target, supported, store)[:args.top]:
            print(f"{lang} {score:.6f}")
        return 0
    lang, score = closest_supported(target, supported, store)
    print(f"{lang} {score:.6f}")
    return 0


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "closest-lang":
            return cmd_closest_lang(args)
        overrides = _parse_backend_args(args.backend)
        config = load_config(args.config, overrides)
        if args.seed is not None:
            config.seeds = (args.seed,)
            config.raw = {**config.raw, "seeds": [args.seed]}
        if args.typology_csv is not None:
            config.typology_csv = args.typology_csv.resolve()
            config.raw = {**config.raw, "typology_csv": str(config.typology_csv)}
        ctx = RunContext(config, args.runs_dir, jobs=args.jobs, force=args.force)
        stages = list(STAGES) if args.command == "all" else [args.command]
        run_stages(ctx, stages)
        print(f"manifest: {ctx.run_dir / 'manifest.json'}")
        return 0
    except ConfigInvalid as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (BackendUnreachable, BackendFailure, UnsupportedLanguage,
            UndeclaredPair) as exc:
        print(f"backend error: {exc}", file=sys.stderr)
        return 3
    except XLTError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 4
    except ValueError as exc:
        # dataset invariant violations in user-supplied files
        print(f"data error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
