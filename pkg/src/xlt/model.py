"""Task models: a deterministic desk-scale classifier for all three task
kinds, checkpointing at epoch fractions, and distribution-averaging
ensembles.

The desk models are hashed character-n-gram softmax classifiers standing in
for large-LM fine-tuning: language-agnostic, fast, seeded, and sensitive to
translation lexicon changes so strategy differences stay observable.
"""

from __future__ import annotations

import zlib
from abc import ABC, abstractmethod
from dataclasses import dataclass, replace
from typing import Optional, Sequence, Union

import numpy as np

from .align import AlignerBackend, project_labels
from .corpus import (
    Instance,
    SequenceInstance,
    TaskKind,
    TokenInstance,
    repair_iob1,
)
from .errors import (
    EmptyPlan,
    LabelOrderMismatch,
    LabelSetMismatch,
    TaskMismatch,
)
from .strategy import (
    ModelPlan,
    TestTransform,
    TransformKind,
)
from .translate import DecodingConfig, TranslatorBackend, translate_texts

PROB_TOL = 1e-9


@dataclass(frozen=True)
class Distribution:
    """A probability vector over an ordered label set."""

    labels: tuple[str, ...]
    probabilities: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "probabilities", tuple(float(p) for p in self.probabilities))
        if len(self.labels) != len(self.probabilities):
            raise ValueError("labels and probabilities differ in length")
        if any(p < 0 for p in self.probabilities):
            raise ValueError("negative probability")
        if abs(sum(self.probabilities) - 1.0) > PROB_TOL:
            raise ValueError(f"probabilities sum to {sum(self.probabilities)!r}")

    def argmax_label(self) -> str:
        """Most probable label; ties break lexicographically."""
        return min(zip(self.probabilities, self.labels), key=lambda pl: (-pl[0], pl[1]))[1]


def average_distributions(distributions: Sequence[Distribution]) -> Distribution:
    """Arithmetic mean of distributions sharing one label order."""
    if not distributions:
        raise ValueError("nothing to average")
    labels = distributions[0].labels
    for d in distributions[1:]:
        if d.labels != labels:
            raise LabelOrderMismatch(f"{d.labels} != {labels}")
    stacked = np.array([d.probabilities for d in distributions], dtype=np.float64)
    return Distribution(labels, tuple(stacked.mean(axis=0)))


@dataclass(frozen=True)
class Hyperparameters:
    epochs: int
    batch_size: int
    learning_rate: float
    weight_decay: float

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be positive")
        if self.learning_rate <= 0 or self.weight_decay < 0:
            raise ValueError("learning_rate must be positive, weight_decay nonnegative")

    def to_json(self) -> dict:
        return {"epochs": self.epochs, "batch_size": self.batch_size,
                "learning_rate": self.learning_rate, "weight_decay": self.weight_decay}

    @classmethod
    def from_json(cls, obj) -> "Hyperparameters":
        return cls(int(obj["epochs"]), int(obj["batch_size"]),
                   float(obj["learning_rate"]), float(obj["weight_decay"]))


# Fine-tuning presets per task (NLI / TC / NER benchmarks' settings).
HYPERPARAMETER_PRESETS: dict[TaskKind, Hyperparameters] = {
    TaskKind.NLI: Hyperparameters(epochs=2, batch_size=32, learning_rate=2e-6, weight_decay=0.01),
    TaskKind.TC: Hyperparameters(epochs=20, batch_size=32, learning_rate=1e-5, weight_decay=0.01),
    TaskKind.NER: Hyperparameters(epochs=10, batch_size=32, learning_rate=1e-5, weight_decay=0.01),
}

# Desk-scale default: large enough steps to actually learn small fixtures.
DESK_HYPERPARAMETERS = Hyperparameters(epochs=5, batch_size=16,
                                       learning_rate=0.5, weight_decay=0.0001)


def checkpoint_fractions(epochs: int, fraction: float) -> tuple[float, ...]:
    """Cumulative epoch fractions at which checkpoints are emitted.

    Within each epoch a checkpoint lands at every multiple of ``fraction``
    plus the epoch end, so epochs=2 with fraction=0.1 gives 20 checkpoints.
    """
    if not (0.0 < fraction <= 1.0):
        raise ValueError("checkpoint fraction must be in (0, 1]")
    per_epoch = [round(k * fraction, 9) for k in range(1, int(1.0 / fraction + 1e-9) + 1)]
    if not per_epoch or per_epoch[-1] < 1.0 - 1e-9:
        per_epoch.append(1.0)
    out = []
    for e in range(epochs):
        out.extend(round(e + f, 9) for f in per_epoch)
    return tuple(out)


@dataclass(frozen=True)
class Checkpoint:
    epoch_fraction: float
    handle: object


@dataclass(frozen=True)
class CheckpointSeries:
    checkpoints: tuple[Checkpoint, ...]
    hyper: Hyperparameters
    total_epochs: float

    def __post_init__(self):
        fractions = [c.epoch_fraction for c in self.checkpoints]
        if any(b <= a for a, b in zip(fractions, fractions[1:])):
            raise ValueError("checkpoint fractions must be strictly increasing")
        if fractions and abs(fractions[-1] - self.total_epochs) > 1e-9:
            raise ValueError(f"last fraction {fractions[-1]} != total epochs {self.total_epochs}")

    def __len__(self) -> int:
        return len(self.checkpoints)

    def at(self, epoch_fraction: float) -> Checkpoint:
        for checkpoint in self.checkpoints:
            if abs(checkpoint.epoch_fraction - epoch_fraction) <= 1e-9:
                return checkpoint
        raise KeyError(f"no checkpoint at {epoch_fraction}")

    @property
    def last(self) -> Checkpoint:
        return self.checkpoints[-1]


class TaskModel(ABC):
    """Trains on a plan and yields per-label probability distributions."""

    task: TaskKind

    @abstractmethod
    def train(self, plan: ModelPlan, hyper: Hyperparameters, seed: int,
              checkpoint_fraction: float = 0.1) -> CheckpointSeries:
        ...

    @abstractmethod
    def predict_proba(self, checkpoint: Checkpoint, instance: Instance
                      ) -> Union[Distribution, list[Distribution]]:
        ...


# --- hashed character-n-gram features ---------------------------------------

@dataclass(frozen=True)
class FeatureConfig:
    dim: int = 1 << 15
    ngram_min: int = 3
    ngram_max: int = 5


def _hash_feature(name: str, dim: int) -> int:
    return zlib.crc32(name.encode("utf-8")) % dim


def _char_ngrams(text: str, lo: int, hi: int) -> list[str]:
    padded = f"\x02{text}\x03"
    grams = []
    for n in range(lo, hi + 1):
        grams.extend(padded[i:i + n] for i in range(len(padded) - n + 1))
    return grams


def _text_features(prefix: str, text: str, config: FeatureConfig) -> list[int]:
    return [_hash_feature(f"{prefix}|{g}", config.dim)
            for g in _char_ngrams(text, config.ngram_min, config.ngram_max)]


def sequence_features(instance: SequenceInstance, config: FeatureConfig) -> np.ndarray:
    feats = _text_features("a", instance.text_a, config)
    if instance.text_b is not None:
        feats += _text_features("b", instance.text_b, config)
    return np.asarray(feats, dtype=np.int64)


def token_features(tokens: Sequence[str], index: int, config: FeatureConfig) -> np.ndarray:
    token = tokens[index]
    prev_tok = tokens[index - 1] if index > 0 else "<s>"
    next_tok = tokens[index + 1] if index + 1 < len(tokens) else "</s>"
    feats = _text_features("t", token, config)
    feats.append(_hash_feature(f"w|{token}", config.dim))
    feats.append(_hash_feature(f"p|{prev_tok}", config.dim))
    feats.append(_hash_feature(f"n|{next_tok}", config.dim))
    return np.asarray(feats, dtype=np.int64)


def ner_tag_vocabulary(label_set: Sequence[str]) -> tuple[str, ...]:
    """Prediction space for token-level models: O plus B-X/I-X per type."""
    vocab = ["O"]
    for etype in label_set:
        vocab.extend((f"B-{etype}", f"I-{etype}"))
    return tuple(vocab)


@dataclass(frozen=True)
class DeskParameters:
    """Immutable weight snapshot; the desk model's checkpoint handle."""

    task: TaskKind
    label_set: tuple[str, ...]
    classes: tuple[str, ...]
    weights: np.ndarray  # (dim, len(classes)), read-only
    features: FeatureConfig

    def __post_init__(self):
        self.weights.setflags(write=False)


def _softmax(scores: np.ndarray) -> np.ndarray:
    shifted = scores - scores.max()
    exp = np.exp(shifted)
    return exp / exp.sum()


class DeskModel(TaskModel):
    """Multinomial logistic regression over hashed character n-grams.

    Training is plain minibatch SGD with a seeded shuffle per epoch and is
    bitwise deterministic for a fixed seed. Sequential plans warm-start
    each phase from the previous phase's final weights.
    """

    def __init__(self, task: TaskKind, label_set: Sequence[str],
                 features: FeatureConfig = FeatureConfig()):
        self.task = task
        self.label_set = tuple(label_set)
        self.features = features
        self.classes = (ner_tag_vocabulary(self.label_set) if task is TaskKind.NER
                        else self.label_set)
        self._class_index = {c: i for i, c in enumerate(self.classes)}

    @classmethod
    def for_plan(cls, plan: ModelPlan, features: FeatureConfig = FeatureConfig()) -> "DeskModel":
        datasets = [e.dataset for phase in plan.phases for e in phase]
        if not datasets or all(len(d) == 0 for d in datasets):
            raise EmptyPlan("plan contains no instances")
        task, label_set = datasets[0].task, datasets[0].label_set
        for d in datasets[1:]:
            if d.task is not task or d.label_set != label_set:
                raise LabelSetMismatch(
                    f"{d.task}/{d.label_set} vs {task}/{label_set}")
        return cls(task, label_set, features)

    # -- training ------------------------------------------------------------

    def _examples(self, phase) -> list[tuple[np.ndarray, int]]:
        examples: list[tuple[np.ndarray, int]] = []
        for entry in phase:
            dataset = entry.dataset
            if dataset.task is not self.task or dataset.label_set != self.label_set:
                raise LabelSetMismatch(
                    f"{dataset.task}/{dataset.label_set} vs {self.task}/{self.label_set}")
            for inst in dataset.instances:
                if self.task is TaskKind.NER:
                    assert isinstance(inst, TokenInstance)
                    for i in range(len(inst.tokens)):
                        examples.append((token_features(inst.tokens, i, self.features),
                                         self._class_index[inst.tags[i]]))
                else:
                    assert isinstance(inst, SequenceInstance)
                    examples.append((sequence_features(inst, self.features),
                                     self._class_index[inst.label]))
        return examples

    def train(self, plan: ModelPlan, hyper: Hyperparameters, seed: int,
              checkpoint_fraction: float = 0.1) -> CheckpointSeries:
        if plan.seed is not None:
            seed = plan.seed
        phase_examples = [self._examples(phase) for phase in plan.phases]
        if sum(len(x) for x in phase_examples) == 0:
            raise EmptyPlan("plan contains no instances")

        n_classes = len(self.classes)
        weights = np.zeros((self.features.dim, n_classes), dtype=np.float64)
        rng = np.random.default_rng(seed)
        checkpoints: list[Checkpoint] = []
        offset = 0.0

        def snapshot(fraction: float) -> None:
            handle = DeskParameters(self.task, self.label_set, self.classes,
                                    weights.copy(), self.features)
            checkpoints.append(Checkpoint(round(fraction, 9), handle))

        lr, decay = hyper.learning_rate, hyper.weight_decay
        for examples in phase_examples:
            if not examples:
                continue  # an empty phase contributes no epochs
            fractions = checkpoint_fractions(hyper.epochs, checkpoint_fraction)
            n = len(examples)
            steps = (n + hyper.batch_size - 1) // hyper.batch_size
            boundary = 0
            for epoch in range(hyper.epochs):
                order = rng.permutation(n)
                for step in range(steps):
                    batch = order[step * hyper.batch_size:(step + 1) * hyper.batch_size]
                    if decay:
                        weights *= 1.0 - lr * decay
                    scale = lr / len(batch)
                    for idx in batch:
                        feats, gold = examples[idx]
                        probs = _softmax(weights[feats].sum(axis=0))
                        probs[gold] -= 1.0
                        np.add.at(weights, feats, -scale * probs)
                    done = epoch + (step + 1) / steps
                    while boundary < len(fractions) and fractions[boundary] <= done + 1e-9:
                        snapshot(offset + fractions[boundary])
                        boundary += 1
            offset += hyper.epochs

        if not checkpoints:  # every phase empty: cannot happen past the guard
            raise EmptyPlan("plan contains no instances")
        return CheckpointSeries(tuple(checkpoints), hyper, total_epochs=offset)

    # -- inference -----------------------------------------------------------

    def initial_checkpoint(self) -> Checkpoint:
        """An untrained (all-zero weights, uniform output) checkpoint."""
        handle = DeskParameters(self.task, self.label_set, self.classes,
                                np.zeros((self.features.dim, len(self.classes))),
                                self.features)
        return Checkpoint(0.0, handle)

    def predict_proba(self, checkpoint: Checkpoint, instance: Instance
                      ) -> Union[Distribution, list[Distribution]]:
        params = checkpoint.handle
        assert isinstance(params, DeskParameters)
        if self.task is TaskKind.NER:
            if not isinstance(instance, TokenInstance):
                raise TaskMismatch(f"expected token-level instance, got {type(instance).__name__}")
            return predict_token_proba(params, instance.tokens)
        if not isinstance(instance, SequenceInstance):
            raise TaskMismatch(f"expected sequence instance, got {type(instance).__name__}")
        if (instance.text_b is not None) != (self.task is TaskKind.NLI):
            raise TaskMismatch("text_b presence does not match the model's task")
        return predict_sequence_proba(params, instance)


def predict_sequence_proba(params: DeskParameters, instance: SequenceInstance) -> Distribution:
    feats = sequence_features(instance, params.features)
    probs = _softmax(params.weights[feats].sum(axis=0))
    return Distribution(params.classes, tuple(probs))


def predict_token_proba(params: DeskParameters, tokens: Sequence[str]) -> list[Distribution]:
    out = []
    for i in range(len(tokens)):
        feats = token_features(tokens, i, params.features)
        probs = _softmax(params.weights[feats].sum(axis=0))
        out.append(Distribution(params.classes, tuple(probs)))
    return out


def predict_tags(params: DeskParameters, tokens: Sequence[str]) -> tuple[str, ...]:
    """Per-token argmax tags, repaired to valid BIO."""
    raw = [d.argmax_label() for d in predict_token_proba(params, tokens)]
    return repair_iob1(raw)


# --- test-time transforms and ensembling ------------------------------------

def apply_transform(instance: Instance, transform: TestTransform,
                    translator: Optional[TranslatorBackend],
                    decoding: DecodingConfig) -> Instance:
    """Apply a test-time transform to a raw instance.

    Sequence texts are translated field-wise; token instances are
    translated as whitespace-joined strings and re-split. Gold labels/tags
    ride along untouched (they are only read by evaluation).
    """
    if transform.kind is TransformKind.NONE:
        return instance
    assert transform.language is not None
    if instance.language == transform.language:
        return instance
    if translator is None:
        raise ValueError("translate_to transform needs a translator")
    src, tgt = instance.language, transform.language
    if isinstance(instance, TokenInstance):
        text = " ".join(instance.tokens)
        translated = translate_texts(translator, [text], src, tgt, decoding)[0]
        tokens = translated.split(" ") if translated else [""]
        return replace(instance, tokens=tuple(tokens), tags=("O",) * len(tokens),
                       language=tgt)
    texts = [instance.text_a]
    if instance.text_b is not None:
        texts.append(instance.text_b)
    translated = translate_texts(translator, texts, src, tgt, decoding)
    return replace(instance, text_a=translated[0],
                   text_b=translated[1] if instance.text_b is not None else None,
                   language=tgt)


@dataclass(frozen=True)
class EnsembleMember:
    """A model with the checkpoint to load and its test-time transform."""

    model: TaskModel
    checkpoint: Checkpoint
    transform: TestTransform


def ensemble_predict(members: Sequence[EnsembleMember], raw_instance: SequenceInstance,
                     translator: Optional[TranslatorBackend], *,
                     decoding: DecodingConfig = DecodingConfig.beam()) -> Distribution:
    """Apply each member's transform, collect distributions, return the mean.

    The prediction is the argmax of the averaged distribution (ties break
    lexicographically on the label string).
    """
    if not members:
        raise ValueError("ensemble needs at least one member")
    distributions = []
    for member in members:
        transformed = apply_transform(raw_instance, member.transform, translator, decoding)
        assert isinstance(transformed, SequenceInstance)
        dist = member.model.predict_proba(member.checkpoint, transformed)
        assert isinstance(dist, Distribution)
        distributions.append(dist)
    return average_distributions(distributions)


def ensemble_predict_tags(members: Sequence[EnsembleMember], raw_instance: TokenInstance,
                          translator: Optional[TranslatorBackend],
                          aligner: Optional[AlignerBackend], *,
                          decoding: DecodingConfig = DecodingConfig.beam()) -> tuple[str, ...]:
    """Token-level ensemble: members predict on their transformed tokens,
    predictions are projected back onto the raw tokens, then combined by
    averaging one-hot tag votes per token (all-O on projection failure)
    and repairing the argmax sequence to BIO.
    """
    if not members:
        raise ValueError("ensemble needs at least one member")
    votes: list[dict[str, float]] = [{} for _ in raw_instance.tokens]
    for member in members:
        tags = predict_transformed_tags(member.model, member.checkpoint,
                                        raw_instance, member.transform,
                                        translator, aligner, decoding=decoding)
        for i, tag in enumerate(tags):
            votes[i][tag] = votes[i].get(tag, 0.0) + 1.0
    raw_tags = [min(counted.items(), key=lambda kv: (-kv[1], kv[0]))[0]
                for counted in votes]
    return repair_iob1(raw_tags)


def predict_transformed_tags(model: TaskModel, checkpoint: Checkpoint,
                             instance: TokenInstance, transform: TestTransform,
                             translator: Optional[TranslatorBackend],
                             aligner: Optional[AlignerBackend], *,
                             decoding: DecodingConfig = DecodingConfig.beam()
                             ) -> tuple[str, ...]:
    """Predict BIO tags for a raw token instance under a test transform.

    With a translate_to transform the model predicts on the translated
    tokens and the predicted tags are projected back onto the raw tokens;
    a projection discard falls back to all-O (test instances are never
    dropped).
    """
    transformed = apply_transform(instance, transform, translator, decoding)
    assert isinstance(transformed, TokenInstance)
    distributions = model.predict_proba(checkpoint, transformed)
    assert isinstance(distributions, list)
    predicted = repair_iob1([d.argmax_label() for d in distributions])
    if transformed is instance:
        return predicted
    if aligner is None:
        raise ValueError("token-level translate_to inference needs an aligner")
    links = aligner.align(transformed.tokens, instance.tokens)
    outcome = project_labels(transformed.tokens, predicted, instance.tokens, links)
    if outcome.retained:
        assert outcome.tags is not None
        return outcome.tags
    return ("O",) * len(instance.tokens)
