"""Run configuration: the JSON config file schema, dataset loading, and
backend construction from ``--backend`` specs.

Backend URLs may reference environment variables (``http:${MT_URL}``);
interpolation happens only on backend specs, never on data paths.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional

from .align import AlignerBackend, OracleAligner
from .corpus import (
    Dataset,
    LanguageTag,
    Split,
    TaskKind,
    TsvSchema,
    parse_conll,
    parse_sequence_tsv,
    read_jsonl,
)
from .errors import ConfigInvalid
from .model import FeatureConfig, Hyperparameters, HYPERPARAMETER_PRESETS, DESK_HYPERPARAMETERS
from .selection import ValidationVariant
from .strategy import StrategySpec
from .translate import (
    DictionaryTranslator,
    IdentityTranslator,
    PermutationTranslator,
    TranslatorBackend,
)

_VALIDATION_VARIANTS = {v.value: v for v in ValidationVariant}


@dataclass
class DataSource:
    path: Path
    format: str  # jsonl | tsv | conll
    language: LanguageTag
    split: Split
    schema: Optional[TsvSchema] = None
    column: Optional[int] = None
    label_set: Optional[tuple[str, ...]] = None

    def load(self, task: TaskKind) -> Dataset:
        text = self.path.read_text(encoding="utf-8")
        if self.format == "jsonl":
            return read_jsonl(text, task=task, label_set=self.label_set,
                              split=self.split)
        if self.format == "tsv":
            if self.schema is None:
                raise ConfigInvalid(f"{self.path}: tsv data needs a schema")
            return parse_sequence_tsv(text, self.schema, task,
                                      label_set=self.label_set,
                                      language=self.language, split=self.split)
        if self.format == "conll":
            if self.column is None:
                raise ConfigInvalid(f"{self.path}: conll data needs a column")
            return parse_conll(text, self.column, language=self.language,
                               split=self.split)
        raise ConfigInvalid(f"unknown data format {self.format!r}")


@dataclass
class RunConfig:
    """Validated run configuration; ``raw`` is the canonical JSON form the
    config hash is computed over."""

    raw: dict
    base_dir: Path
    task: TaskKind
    strategy: StrategySpec
    train: DataSource
    validation: DataSource
    test: dict[LanguageTag, DataSource] = field(default_factory=dict)
    oracle_validation: dict[LanguageTag, DataSource] = field(default_factory=dict)
    backends: dict[str, str] = field(default_factory=dict)
    supported_languages: Optional[frozenset[LanguageTag]] = None
    proxy_unsupported: bool = False
    typology_csv: Optional[Path] = None
    seeds: tuple[int, ...] = (0,)
    hyper: Hyperparameters = DESK_HYPERPARAMETERS
    checkpoint_fraction: float = 0.1
    validation_variant: ValidationVariant = ValidationVariant.VAL_SRC
    features: FeatureConfig = FeatureConfig()
    max_batch: int = 32


def _language(obj, key: str) -> LanguageTag:
    try:
        return LanguageTag.parse(str(obj))
    except ValueError as exc:
        raise ConfigInvalid(f"{key}: {exc}") from exc


def _data_source(obj: Mapping, base_dir: Path, key: str,
                 default_split: Split) -> DataSource:
    if not isinstance(obj, Mapping) or "path" not in obj:
        raise ConfigInvalid(f"{key}: needs an object with a path")
    schema = None
    if "schema" in obj:
        s = obj["schema"]
        try:
            schema = TsvSchema(text_a_col=int(s["text_a_col"]),
                               label_col=int(s["label_col"]),
                               text_b_col=(int(s["text_b_col"])
                                           if s.get("text_b_col") is not None else None),
                               id_col=int(s["id_col"]) if s.get("id_col") is not None else None,
                               has_header=bool(s.get("has_header", False)))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigInvalid(f"{key}.schema: {exc}") from exc
    return DataSource(
        path=(base_dir / str(obj["path"])).resolve(),
        format=str(obj.get("format", "jsonl")),
        language=_language(obj.get("language", "eng"), f"{key}.language"),
        split=Split(obj.get("split", default_split.value)),
        schema=schema,
        column=int(obj["column"]) if obj.get("column") is not None else None,
        label_set=tuple(obj["label_set"]) if obj.get("label_set") else None,
    )


def load_config(path: Path, backend_overrides: Optional[Mapping[str, str]] = None) -> RunConfig:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigInvalid(f"{path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigInvalid(f"{path}: config must be a JSON object")
    base_dir = Path(path).resolve().parent

    try:
        task = TaskKind(raw["task"])
    except (KeyError, ValueError) as exc:
        raise ConfigInvalid(f"task: {exc}") from exc

    if "strategy" not in raw or not isinstance(raw["strategy"], Mapping):
        raise ConfigInvalid("strategy: required object")
    try:
        strategy = StrategySpec.from_json(raw["strategy"])
    except Exception as exc:  # noqa: BLE001 - any spec violation is a config error
        raise ConfigInvalid(f"strategy: {exc}") from exc

    data = raw.get("data")
    if not isinstance(data, Mapping) or "train" not in data or "validation" not in data:
        raise ConfigInvalid("data: needs train and validation entries")
    train = _data_source(data["train"], base_dir, "data.train", Split.TRAIN)
    validation = _data_source(data["validation"], base_dir, "data.validation",
                              Split.VALIDATION)
    test = {}
    for lang, obj in (data.get("test") or {}).items():
        test[_language(lang, "data.test")] = _data_source(obj, base_dir,
                                                          f"data.test.{lang}", Split.TEST)
    oracle = {}
    for lang, obj in (data.get("oracle_validation") or {}).items():
        oracle[_language(lang, "data.oracle_validation")] = _data_source(
            obj, base_dir, f"data.oracle_validation.{lang}", Split.VALIDATION)

    backends = {"mt": "mock:identity", "align": "mock:oracle", "model": "desk"}
    for kind, spec in (raw.get("backends") or {}).items():
        if kind not in backends:
            raise ConfigInvalid(f"backends.{kind}: unknown backend kind")
        backends[kind] = str(spec)
    for kind, spec in (backend_overrides or {}).items():
        if kind not in backends:
            raise ConfigInvalid(f"--backend {kind}: unknown backend kind")
        backends[kind] = spec

    supported = None
    if raw.get("supported_languages"):
        supported = frozenset(_language(t, "supported_languages")
                              for t in raw["supported_languages"])

    hyper = DESK_HYPERPARAMETERS
    if raw.get("hyper") == "preset":
        hyper = HYPERPARAMETER_PRESETS[task]
    elif isinstance(raw.get("hyper"), Mapping):
        try:
            hyper = Hyperparameters.from_json(raw["hyper"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigInvalid(f"hyper: {exc}") from exc

    variant_name = raw.get("validation_variant", ValidationVariant.VAL_SRC.value)
    if variant_name not in _VALIDATION_VARIANTS:
        raise ConfigInvalid(f"validation_variant: unknown {variant_name!r}")

    features = FeatureConfig()
    if isinstance(raw.get("features"), Mapping):
        f = raw["features"]
        features = FeatureConfig(dim=int(f.get("dim", features.dim)),
                                 ngram_min=int(f.get("ngram_min", features.ngram_min)),
                                 ngram_max=int(f.get("ngram_max", features.ngram_max)))

    seeds = tuple(int(s) for s in raw.get("seeds", [0]))
    if not seeds:
        raise ConfigInvalid("seeds: need at least one")

    fraction = float(raw.get("checkpoint_fraction", 0.1))
    if not (0.0 < fraction <= 1.0):
        raise ConfigInvalid("checkpoint_fraction: must be in (0, 1]")

    return RunConfig(
        raw=raw, base_dir=base_dir, task=task, strategy=strategy,
        train=train, validation=validation, test=test, oracle_validation=oracle,
        backends=backends, supported_languages=supported,
        proxy_unsupported=bool(raw.get("proxy_unsupported", False)),
        typology_csv=(base_dir / raw["typology_csv"]).resolve()
        if raw.get("typology_csv") else None,
        seeds=seeds, hyper=hyper, checkpoint_fraction=fraction,
        validation_variant=_VALIDATION_VARIANTS[variant_name],
        features=features, max_batch=int(raw.get("max_batch", 32)),
    )


# --- backend construction ------------------------------------------------------

def _load_lexicons(path: Path) -> dict[tuple[LanguageTag, LanguageTag], dict[str, str]]:
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
        lexicons = {}
        for pair, words in obj.items():
            src, tgt = pair.split("->")
            lexicons[(LanguageTag.parse(src), LanguageTag.parse(tgt))] = {
                str(k): str(v) for k, v in words.items()}
        return lexicons
    except (OSError, ValueError, AttributeError) as exc:
        raise ConfigInvalid(f"lexicon file {path}: {exc}") from exc


def make_translator(spec: str, base_dir: Path,
                    languages: Optional[frozenset[LanguageTag]]) -> TranslatorBackend:
    spec = os.path.expandvars(spec)
    if spec == "mock:identity":
        return IdentityTranslator(languages)
    if spec == "mock:reverse":
        return PermutationTranslator(languages)
    if spec.startswith("mock:dict:"):
        return DictionaryTranslator(_load_lexicons(base_dir / spec[len("mock:dict:"):]),
                                    languages)
    if spec.startswith(("http:", "https:")):
        from .remote import HttpTranslatorBackend

        return HttpTranslatorBackend(_backend_url(spec))
    raise ConfigInvalid(f"unknown mt backend {spec!r}")


def _backend_url(spec: str) -> str:
    # accept both the prefixed form "http:<url>" and a bare URL
    if spec.startswith("http:") and not spec[5:].startswith("//"):
        return spec[5:]
    return spec


def make_task_model(spec: str, task: TaskKind):
    """None selects the built-in desk model; ``http:<url>`` returns a
    factory producing the remote task-model client."""
    spec = os.path.expandvars(spec)
    if spec in ("desk", "mock:desk", "") or spec.startswith("mock:"):
        return None
    if spec.startswith(("http:", "https:")):
        from .remote import HttpTaskModel

        url = _backend_url(spec)
        return lambda model_plan: HttpTaskModel(url, task)
    raise ConfigInvalid(f"unknown model backend {spec!r}")


def make_aligner(spec: str) -> AlignerBackend:
    spec = os.path.expandvars(spec)
    if spec.startswith("pharaoh:"):
        from .align import PharaohFileAligner

        return PharaohFileAligner.from_file(spec[len("pharaoh:"):])
    if spec in ("mock:oracle", "mock:identity"):
        return OracleAligner()
    if spec == "mock:reverse":
        from .translate import PermutationTranslator as _P

        return OracleAligner(permutation=_P.permutation)
    if spec.startswith("mock:oracle:"):
        params = dict(kv.split("=", 1) for kv in spec[len("mock:oracle:"):].split(",") if kv)
        return OracleAligner(drop_prob=float(params.get("drop", 0.0)),
                             seed=int(params.get("seed", 0)))
    if spec.startswith(("http:", "https:")):
        from .remote import HttpAlignerBackend

        return HttpAlignerBackend(_backend_url(spec))
    raise ConfigInvalid(f"unknown align backend {spec!r}")
