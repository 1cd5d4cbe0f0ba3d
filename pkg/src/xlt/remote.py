"""HTTP clients for remote translator / aligner / task-model backends.

Transport failures (connection errors, timeouts, 5xx) are retried twice
with exponential backoff; model errors (4xx with an error body) never are,
since resubmitting the same request cannot succeed.
"""

from __future__ import annotations

import time
from typing import Mapping, Optional, Sequence

import requests

from .align import AlignerBackend, AlignmentLinks
from .corpus import LanguageTag, TaskKind
from .errors import BackendFailure, BackendUnreachable, UnsupportedLanguage
from .model import Checkpoint, CheckpointSeries, Distribution, Hyperparameters, TaskModel
from .strategy import ModelPlan
from .translate import DecodingConfig, TranslationRequest, TranslatorBackend
from .wire import links_from_wire

DEFAULT_TIMEOUT = 30.0
DEFAULT_RETRIES = 2
DEFAULT_BACKOFF = 0.5


class _HttpClient:
    def __init__(self, base_url: str, *, timeout: float = DEFAULT_TIMEOUT,
                 retries: int = DEFAULT_RETRIES, backoff: float = DEFAULT_BACKOFF,
                 session: Optional[requests.Session] = None):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self.retries = retries
        self.backoff = backoff
        self.session = session or requests.Session()

    def request(self, method: str, path: str, payload: Optional[Mapping] = None) -> dict:
        url = self.base_url + path
        attempt = 0
        while True:
            try:
                response = self.session.request(method, url, json=payload,
                                                timeout=self.timeout)
            except requests.RequestException as exc:
                if attempt < self.retries:
                    time.sleep(self.backoff * (2 ** attempt))
                    attempt += 1
                    continue
                raise BackendFailure(f"{method} {url}: {exc}", code="transport",
                                     transient=True) from exc
            if response.status_code >= 500:
                if attempt < self.retries:
                    time.sleep(self.backoff * (2 ** attempt))
                    attempt += 1
                    continue
                raise BackendFailure(f"{method} {url}: HTTP {response.status_code}",
                                     code="transport", transient=True)
            try:
                body = response.json()
            except ValueError as exc:
                raise BackendFailure(f"{method} {url}: non-JSON response",
                                     code="protocol") from exc
            if response.status_code >= 400 or "error" in body:
                error = body.get("error") or {}
                raise BackendFailure(error.get("message", f"HTTP {response.status_code}"),
                                     code=error.get("code", "error"),
                                     index=error.get("index"))
            return body


class HttpTranslatorBackend(TranslatorBackend):
    """Translator served over the JSON wire protocol.

    The handshake (GET /v1/languages) runs once at construction and fixes
    the supported set and the concurrency declaration.
    """

    def __init__(self, base_url: str, *, timeout: float = DEFAULT_TIMEOUT,
                 retries: int = DEFAULT_RETRIES, backoff: float = DEFAULT_BACKOFF,
                 session: Optional[requests.Session] = None):
        self._client = _HttpClient(base_url, timeout=timeout, retries=retries,
                                   backoff=backoff, session=session)
        self.name = f"http:{base_url}"
        try:
            handshake = self._client.request("GET", "/v1/languages")
            self._languages = frozenset(LanguageTag.parse(t)
                                        for t in handshake["languages"])
            self.concurrent = bool(handshake.get("concurrent", False))
        except (BackendFailure, KeyError, ValueError) as exc:
            raise BackendUnreachable(f"handshake with {base_url} failed: {exc}") from exc

    def supported_languages(self) -> Optional[frozenset[LanguageTag]]:
        return self._languages

    def translate_batch(self, requests_: Sequence[TranslationRequest],
                        decoding: DecodingConfig) -> list[str]:
        if not requests_:
            return []
        src, tgt = requests_[0].src, requests_[0].tgt
        for i, request in enumerate(requests_):
            if request.src != src or request.tgt != tgt:
                raise ValueError(f"request {i}: mixed language pairs in one batch")
            if not self.supports(request.src) or not self.supports(request.tgt):
                raise UnsupportedLanguage(f"request {i}: {request.src}->{request.tgt}")
        body = self._client.request("POST", "/v1/translate", {
            "src": src.render(), "tgt": tgt.render(),
            "decoding": decoding.to_wire(),
            "texts": [r.text for r in requests_],
        })
        translations = body.get("translations")
        if not isinstance(translations, list) or len(translations) != len(requests_):
            raise BackendFailure("bad translations array", code="protocol")
        return [str(t) for t in translations]


class HttpAlignerBackend(AlignerBackend):
    def __init__(self, base_url: str, *, timeout: float = DEFAULT_TIMEOUT,
                 retries: int = DEFAULT_RETRIES, backoff: float = DEFAULT_BACKOFF,
                 session: Optional[requests.Session] = None):
        self._client = _HttpClient(base_url, timeout=timeout, retries=retries,
                                   backoff=backoff, session=session)
        self.name = f"http:{base_url}"
        self.concurrent = False

    def align(self, src_tokens: Sequence[str], tgt_tokens: Sequence[str]) -> AlignmentLinks:
        body = self._client.request("POST", "/v1/align", {
            "src_tokens": list(src_tokens), "tgt_tokens": list(tgt_tokens)})
        if "links" not in body:
            raise BackendFailure("response lacks links", code="protocol")
        return links_from_wire(body, len(src_tokens), len(tgt_tokens))


class HttpTaskModel(TaskModel):
    """Task model served remotely; checkpoints are (job_id, fraction) handles."""

    def __init__(self, base_url: str, task: TaskKind, *,
                 timeout: float = DEFAULT_TIMEOUT, retries: int = DEFAULT_RETRIES,
                 backoff: float = DEFAULT_BACKOFF,
                 session: Optional[requests.Session] = None):
        self._client = _HttpClient(base_url, timeout=timeout, retries=retries,
                                   backoff=backoff, session=session)
        self.name = f"http:{base_url}"
        self.task = task

    def train(self, plan: ModelPlan, hyper: Hyperparameters, seed: int,
              checkpoint_fraction: float = 0.1) -> CheckpointSeries:
        from .manifest import model_plan_to_json

        body = self._client.request("POST", "/v1/train", {
            "plan": model_plan_to_json(plan),
            "hyper": hyper.to_json(),
            "seed": seed,
            "checkpoint_fraction": checkpoint_fraction,
        })
        job_id = body["job_id"]
        listing = self._client.request("POST", "/v1/checkpoints", {"job_id": job_id})
        checkpoints = tuple(
            Checkpoint(float(c["epoch_fraction"]), (job_id, float(c["epoch_fraction"])))
            for c in listing["checkpoints"])
        total = checkpoints[-1].epoch_fraction if checkpoints else 0.0
        return CheckpointSeries(checkpoints, hyper, total_epochs=total)

    def predict_proba(self, checkpoint: Checkpoint, instance):
        from .corpus import _instance_to_obj  # wire uses the JSONL field names

        job_id, fraction = checkpoint.handle
        body = self._client.request("POST", "/v1/predict_proba", {
            "job_id": job_id, "epoch_fraction": fraction,
            "instance": _instance_to_obj(self.task, instance)})
        labels = tuple(body["labels"])
        if "token_probabilities" in body:
            return [Distribution(labels, tuple(row)) for row in body["token_probabilities"]]
        return Distribution(labels, tuple(body["probabilities"]))
