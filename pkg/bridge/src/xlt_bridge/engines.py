"""Engines the bridge can host: deterministic mock translators, a built-in
word aligner pair, lazily loaded Hugging Face models, and a small trainable
task model. The bridge shares no code with the client toolkit; the wire
protocol is the only contract.
"""

from __future__ import annotations

import hashlib
import json
import random
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np

from .config import BridgeConfig, ModelLoadFailure

_TAG_RE = re.compile(r"^[a-z]{2,3}(_[A-Za-z]{4})?$")


class EngineError(Exception):
    """Engine-level failure surfaced as a protocol error object."""

    def __init__(self, message: str, code: str = "internal",
                 index: Optional[int] = None):
        super().__init__(message)
        self.code = code
        self.index = index


def check_language_tag(tag: str) -> str:
    if not isinstance(tag, str) or not _TAG_RE.match(tag):
        raise EngineError(f"malformed language tag {tag!r}", code="protocol")
    return tag


# --- decoding ----------------------------------------------------------------

@dataclass(frozen=True)
class Decoding:
    """Validated decoding request; exactly one mode's knobs may be set."""

    mode: str = "beam"
    beam_size: Optional[int] = 5
    top_p: Optional[float] = None
    seed: Optional[int] = None

    @classmethod
    def from_payload(cls, obj: Optional[Mapping]) -> "Decoding":
        if obj is None:
            return cls()
        mode = obj.get("mode")
        if mode not in ("greedy", "beam", "nucleus"):
            raise EngineError(f"unknown decoding mode {mode!r}", code="protocol")
        beam_size = obj.get("beam_size")
        top_p = obj.get("top_p")
        seed = obj.get("seed")
        if mode == "beam":
            if beam_size is None:
                beam_size = 5
            if int(beam_size) < 1:
                raise EngineError("beam_size must be >= 1", code="protocol")
            if top_p is not None or seed is not None:
                raise EngineError("beam decoding must not set top_p/seed",
                                  code="protocol")
            return cls("beam", int(beam_size), None, None)
        if mode == "nucleus":
            if top_p is None:
                top_p = 0.8
            if not (0.0 < float(top_p) <= 1.0):
                raise EngineError("top_p must be in (0, 1]", code="protocol")
            if beam_size is not None:
                raise EngineError("nucleus decoding must not set beam_size",
                                  code="protocol")
            return cls("nucleus", None, float(top_p),
                       int(seed) if seed is not None else 0)
        if beam_size is not None or top_p is not None or seed is not None:
            raise EngineError("greedy decoding takes no parameters",
                              code="protocol")
        return cls("greedy", None, None, None)


# --- translation engines -------------------------------------------------------

class TranslationEngine:
    def languages(self) -> list[str]:
        raise NotImplementedError

    def translate(self, src: str, tgt: str, texts: Sequence[str],
                  decoding: Decoding) -> list[str]:
        raise NotImplementedError


class _MockMT(TranslationEngine):
    def __init__(self, languages: Sequence[str]):
        self._languages = sorted({check_language_tag(t) for t in languages})
        if len(self._languages) < 2:
            raise ModelLoadFailure("mock MT engines need at least two languages")

    def languages(self) -> list[str]:
        return list(self._languages)

    def _check_pair(self, src: str, tgt: str) -> None:
        for tag in (src, tgt):
            if tag not in self._languages:
                raise EngineError(f"{tag} is not supported",
                                  code="unsupported_language")
        if src == tgt:
            raise EngineError("src and tgt must differ", code="protocol")

    def translate(self, src, tgt, texts, decoding):
        self._check_pair(src, tgt)
        return [self._one(text, i, decoding) for i, text in enumerate(texts)]

    def _one(self, text: str, index: int, decoding: Decoding) -> str:
        raise NotImplementedError


class IdentityMT(_MockMT):
    def _one(self, text, index, decoding):
        return text


class ReverseMT(_MockMT):
    def _one(self, text, index, decoding):
        return " ".join(reversed(text.split(" "))) if text else text


class SamplerMT(_MockMT):
    """Identity under greedy/beam; under nucleus decoding, deterministically
    shuffles token order keyed on the request seed (exercises the seed
    plumbing end to end)."""

    def _one(self, text, index, decoding):
        if decoding.mode != "nucleus" or not text:
            return text
        tokens = text.split(" ")
        rng = random.Random(f"sampler:{decoding.seed}:{text}")
        rng.shuffle(tokens)
        return " ".join(tokens)


class BoomMT(_MockMT):
    """Fails with a positional model error on texts containing ``BOOM``."""

    def _one(self, text, index, decoding):
        if "BOOM" in text.split(" "):
            raise EngineError(f"refusing to translate text {index}",
                              code="boom", index=index)
        return text


class DictMT(_MockMT):
    """Word-for-word lexicons loaded from a JSON file {"src->tgt": {...}}."""

    def __init__(self, path: Path, languages: Sequence[str]):
        try:
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
            self._lexicons = {}
            langs = set(languages)
            for pair, words in raw.items():
                src, tgt = pair.split("->")
                langs.add(src)
                langs.add(tgt)
                self._lexicons[(src, tgt)] = {str(k): str(v)
                                              for k, v in words.items()}
        except (OSError, ValueError) as exc:
            raise ModelLoadFailure(f"lexicon file {path}: {exc}") from exc
        super().__init__(sorted(langs))

    def translate(self, src, tgt, texts, decoding):
        self._check_pair(src, tgt)
        lexicon = self._lexicons.get((src, tgt))
        if lexicon is None:
            raise EngineError(f"no lexicon for {src}->{tgt}",
                              code="undeclared_pair")
        return [" ".join(lexicon.get(w, w) for w in text.split(" ")) if text
                else text for text in texts]


class HuggingFaceMT(TranslationEngine):
    """Seq2seq translation via transformers (e.g. NLLB checkpoints).

    Loaded lazily; greedy/beam map onto ``generate`` parameters and nucleus
    seeds the torch RNG per request.
    """

    def __init__(self, model_id: str, device: str = "cpu", max_batch: int = 32):
        try:
            import torch
            from transformers import AutoModelForSeq2SeqLM, AutoTokenizer
        except ImportError as exc:
            raise ModelLoadFailure(
                "hf: engines need the [neural] extra (torch, transformers)") from exc
        try:
            self._tokenizer = AutoTokenizer.from_pretrained(model_id)
            self._model = AutoModelForSeq2SeqLM.from_pretrained(model_id)
        except Exception as exc:  # noqa: BLE001 - load-time boundary
            raise ModelLoadFailure(f"could not load {model_id}: {exc}") from exc
        self._torch = torch
        self._model.to(device)
        self._model.eval()
        self._device = device
        self._max_batch = max_batch
        codes = getattr(self._tokenizer, "lang_code_to_id", None)
        if not codes:
            raise ModelLoadFailure(
                f"{model_id} does not declare language codes; only "
                "NLLB-style multilingual checkpoints are supported")
        self._languages = sorted(codes)

    def languages(self) -> list[str]:
        return list(self._languages)

    def translate(self, src, tgt, texts, decoding):
        for tag in (src, tgt):
            if tag not in self._languages:
                raise EngineError(f"{tag} is not supported",
                                  code="unsupported_language")
        if src == tgt:
            raise EngineError("src and tgt must differ", code="protocol")
        kwargs = {"max_new_tokens": 256}
        if decoding.mode == "beam":
            kwargs.update(num_beams=decoding.beam_size, do_sample=False)
        elif decoding.mode == "nucleus":
            kwargs.update(do_sample=True, top_p=decoding.top_p)
            self._torch.manual_seed(decoding.seed or 0)
        else:
            kwargs.update(num_beams=1, do_sample=False)
        out: list[str] = []
        self._tokenizer.src_lang = src
        bos = self._tokenizer.convert_tokens_to_ids(tgt)
        for start in range(0, len(texts), self._max_batch):
            chunk = list(texts[start:start + self._max_batch])
            batch = self._tokenizer(chunk, return_tensors="pt", padding=True)
            batch = {k: v.to(self._device) for k, v in batch.items()}
            with self._torch.no_grad():
                generated = self._model.generate(
                    **batch, forced_bos_token_id=bos, **kwargs)
            out.extend(self._tokenizer.batch_decode(generated,
                                                    skip_special_tokens=True))
        return out


# --- alignment engines ----------------------------------------------------------

class AlignmentEngine:
    def align(self, src_tokens: Sequence[str],
              tgt_tokens: Sequence[str]) -> list[tuple[int, int]]:
        raise NotImplementedError


class PositionalAligner(AlignmentEngine):
    """Aligns by position; ``reverse=True`` mirrors the reversal translator."""

    def __init__(self, reverse: bool = False):
        self._reverse = reverse

    def align(self, src_tokens, tgt_tokens):
        n = min(len(src_tokens), len(tgt_tokens))
        m = len(tgt_tokens)
        return [(i, m - 1 - i if self._reverse else i) for i in range(n)
                if 0 <= (m - 1 - i if self._reverse else i) < m]


class HuggingFaceAligner(AlignmentEngine):
    """Greedy mutual-argmax alignment over contextual token embeddings."""

    def __init__(self, model_id: str, device: str = "cpu"):
        try:
            import torch
            from transformers import AutoModel, AutoTokenizer
        except ImportError as exc:
            raise ModelLoadFailure(
                "hf: engines need the [neural] extra (torch, transformers)") from exc
        try:
            self._tokenizer = AutoTokenizer.from_pretrained(model_id)
            self._model = AutoModel.from_pretrained(model_id)
        except Exception as exc:  # noqa: BLE001 - load-time boundary
            raise ModelLoadFailure(f"could not load {model_id}: {exc}") from exc
        self._torch = torch
        self._model.to(device)
        self._model.eval()
        self._device = device

    def _embed(self, tokens):
        encoded = self._tokenizer(list(tokens), is_split_into_words=True,
                                  return_tensors="pt", truncation=True)
        with self._torch.no_grad():
            hidden = self._model(
                **{k: v.to(self._device) for k, v in encoded.items()}
            ).last_hidden_state[0]
        vectors = []
        word_ids = encoded.word_ids(0)
        for wi in range(len(tokens)):
            rows = [i for i, w in enumerate(word_ids) if w == wi]
            vectors.append(hidden[rows].mean(dim=0) if rows else hidden.mean(dim=0))
        stacked = self._torch.stack(vectors)
        return stacked / stacked.norm(dim=1, keepdim=True).clamp_min(1e-9)

    def align(self, src_tokens, tgt_tokens):
        src = self._embed(src_tokens)
        tgt = self._embed(tgt_tokens)
        sim = src @ tgt.T
        fwd = sim.argmax(dim=1)
        bwd = sim.argmax(dim=0)
        return sorted((i, int(fwd[i])) for i in range(len(src_tokens))
                      if int(bwd[int(fwd[i])]) == i)


# --- trainable task model ---------------------------------------------------------

def _hash_feature(name: str, dim: int) -> int:
    digest = hashlib.blake2b(name.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big") % dim


class ToyTaskModel:
    """Word-hash logistic regression, trained per posted plan.

    Deliberately simpler than anything a caller would host for real runs,
    but honors the protocol semantics exactly: seeded shuffling, warm start
    across phases, checkpoints at every ``fraction`` of an epoch plus epoch
    ends, cumulative across phases.
    """

    def __init__(self, dim: int = 1 << 14):
        self.dim = dim
        self.jobs: dict[str, dict] = {}

    # -- features ------------------------------------------------------------

    def _sequence_features(self, obj: Mapping) -> np.ndarray:
        feats = [_hash_feature(f"a|{w}", self.dim)
                 for w in (obj.get("text_a") or "").split()]
        if obj.get("text_b"):
            feats += [_hash_feature(f"b|{w}", self.dim)
                      for w in obj["text_b"].split()]
        feats.append(_hash_feature("bias", self.dim))
        return np.asarray(feats, dtype=np.int64)

    def _token_features(self, tokens: Sequence[str], i: int) -> np.ndarray:
        prev_tok = tokens[i - 1] if i > 0 else "<s>"
        next_tok = tokens[i + 1] if i + 1 < len(tokens) else "</s>"
        return np.asarray([
            _hash_feature(f"w|{tokens[i]}", self.dim),
            _hash_feature(f"p|{prev_tok}", self.dim),
            _hash_feature(f"n|{next_tok}", self.dim),
            _hash_feature("bias", self.dim),
        ], dtype=np.int64)

    @staticmethod
    def _classes(task: str, label_set: Sequence[str]) -> list[str]:
        if task == "NER":
            classes = ["O"]
            for etype in label_set:
                classes.extend((f"B-{etype}", f"I-{etype}"))
            return classes
        return list(label_set)

    @staticmethod
    def _fractions(epochs: int, fraction: float) -> list[float]:
        per_epoch = [round(k * fraction, 9)
                     for k in range(1, int(1.0 / fraction + 1e-9) + 1)]
        if not per_epoch or per_epoch[-1] < 1.0 - 1e-9:
            per_epoch.append(1.0)
        return [round(e + f, 9) for e in range(epochs) for f in per_epoch]

    # -- protocol operations ---------------------------------------------------

    def train(self, payload: Mapping) -> str:
        plan = payload["plan"]
        hyper = payload["hyper"]
        epochs = int(hyper["epochs"])
        batch_size = int(hyper["batch_size"])
        lr = float(hyper["learning_rate"])
        decay = float(hyper["weight_decay"])
        fraction = float(payload.get("checkpoint_fraction", 0.1))
        if not (0.0 < fraction <= 1.0):
            raise EngineError("checkpoint_fraction must be in (0, 1]",
                              code="protocol")
        seed = plan.get("seed")
        if seed is None:
            seed = int(payload["seed"])

        job_id = hashlib.sha256(
            json.dumps(payload, sort_keys=True).encode("utf-8")).hexdigest()[:16]
        if job_id in self.jobs:
            return job_id

        task = None
        label_set: Optional[list[str]] = None
        phases = []
        for phase in plan["phases"]:
            examples = []
            for entry in phase:
                dataset = entry["dataset"]
                if task is None:
                    task = dataset["task"]
                    label_set = list(dataset["label_set"])
                elif dataset["task"] != task or list(dataset["label_set"]) != label_set:
                    raise EngineError("plan datasets disagree on task/labels",
                                      code="protocol")
                for inst in dataset["instances"]:
                    if task == "NER":
                        tokens = inst["tokens"]
                        classes = self._classes(task, label_set)
                        for i, tag in enumerate(inst["tags"]):
                            examples.append((self._token_features(tokens, i),
                                             classes.index(tag)))
                    else:
                        examples.append((self._sequence_features(inst),
                                         label_set.index(inst["label"])))
            phases.append(examples)
        if task is None or sum(map(len, phases)) == 0:
            raise EngineError("plan contains no instances", code="protocol")

        classes = self._classes(task, label_set or [])
        weights = np.zeros((self.dim, len(classes)))
        rng = np.random.default_rng(seed)
        checkpoints = []
        offset = 0.0
        for examples in phases:
            if not examples:
                continue
            fractions = self._fractions(epochs, fraction)
            steps = (len(examples) + batch_size - 1) // batch_size
            boundary = 0
            for epoch in range(epochs):
                order = rng.permutation(len(examples))
                for step in range(steps):
                    batch = order[step * batch_size:(step + 1) * batch_size]
                    if decay:
                        weights *= 1.0 - lr * decay
                    scale = lr / len(batch)
                    for idx in batch:
                        feats, gold = examples[idx]
                        scores = weights[feats].sum(axis=0)
                        scores -= scores.max()
                        probs = np.exp(scores)
                        probs /= probs.sum()
                        probs[gold] -= 1.0
                        np.add.at(weights, feats, -scale * probs)
                    done = epoch + (step + 1) / steps
                    while boundary < len(fractions) and \
                            fractions[boundary] <= done + 1e-9:
                        checkpoints.append((round(offset + fractions[boundary], 9),
                                            weights.copy()))
                        boundary += 1
            offset += epochs
        self.jobs[job_id] = {"task": task, "classes": classes,
                             "checkpoints": checkpoints}
        return job_id

    def checkpoints(self, job_id: str) -> list[float]:
        job = self.jobs.get(job_id)
        if job is None:
            raise EngineError(f"no job {job_id!r}", code="unknown_job")
        return [fraction for fraction, _ in job["checkpoints"]]

    def predict(self, job_id: str, epoch_fraction: Optional[float],
                instance: Mapping) -> dict:
        job = self.jobs.get(job_id)
        if job is None:
            raise EngineError(f"no job {job_id!r}", code="unknown_job")
        checkpoints = job["checkpoints"]
        if epoch_fraction is None:
            weights = checkpoints[-1][1]
        else:
            for fraction, snapshot in checkpoints:
                if abs(fraction - float(epoch_fraction)) <= 1e-9:
                    weights = snapshot
                    break
            else:
                raise EngineError(f"no checkpoint at {epoch_fraction}",
                                  code="protocol")

        def distribution(feats: np.ndarray) -> list[float]:
            scores = weights[feats].sum(axis=0)
            scores -= scores.max()
            probs = np.exp(scores)
            probs /= probs.sum()
            return [float(p) for p in probs]

        if job["task"] == "NER":
            tokens = instance.get("tokens")
            if not tokens:
                raise EngineError("NER prediction needs tokens", code="protocol")
            return {"labels": job["classes"],
                    "token_probabilities": [
                        distribution(self._token_features(tokens, i))
                        for i in range(len(tokens))]}
        return {"labels": job["classes"],
                "probabilities": distribution(self._sequence_features(instance))}


# --- factory -------------------------------------------------------------------

def build_translation_engine(config: BridgeConfig) -> TranslationEngine:
    spec = config.mt
    if spec == "mock:identity":
        return IdentityMT(config.languages)
    if spec == "mock:reverse":
        return ReverseMT(config.languages)
    if spec == "mock:sampler":
        return SamplerMT(config.languages)
    if spec == "mock:boom":
        return BoomMT(config.languages)
    if spec.startswith("mock:dict:"):
        return DictMT(Path(spec[len("mock:dict:"):]), config.languages)
    if spec.startswith("hf:"):
        return HuggingFaceMT(spec[3:], config.device, config.max_batch)
    raise ModelLoadFailure(f"unknown MT engine {spec!r}")


def build_alignment_engine(config: BridgeConfig) -> AlignmentEngine:
    spec = config.aligner
    if spec in ("mock:identity", "mock:oracle"):
        return PositionalAligner()
    if spec == "mock:reverse":
        return PositionalAligner(reverse=True)
    if spec.startswith("hf:"):
        return HuggingFaceAligner(spec[3:], config.device)
    raise ModelLoadFailure(f"unknown aligner engine {spec!r}")


def build_task_model(config: BridgeConfig) -> Optional[ToyTaskModel]:
    spec = config.task_model
    if spec in ("none", ""):
        return None
    if spec == "toy:ngram":
        return ToyTaskModel()
    raise ModelLoadFailure(f"unknown task model {spec!r}")
