"""In-process JSON wire-protocol engine.

The same request/response semantics back three surfaces: the mock backends
served locally (or over ``scripts/serve_mock_backend.py``), the HTTP
clients in :mod:`xlt.remote`, and any external service implementing the
protocol. Handlers return ``(status, body)`` pairs; protocol and model
errors are ``400`` with an ``{"error": {code, message, index}}`` body.

Endpoints:
    GET  /v1/languages      -> {"languages": [...], "concurrent": bool}
    POST /v1/translate      -> {"translations": [...]}
    POST /v1/align          -> {"links": [[i, j], ...]}
    POST /v1/train          -> {"job_id": "..."}
    GET  /v1/checkpoints    -> {"checkpoints": [{"epoch_fraction": f}, ...]}
    POST /v1/predict_proba  -> {"probabilities": [...]} or {"token_probabilities": [...]}
"""

from __future__ import annotations

import hashlib
import json
from typing import Any, Mapping, Optional

from .align import AlignerBackend, AlignmentLinks
from .corpus import (
    LanguageTag,
    SequenceInstance,
    TaskKind,
    TokenInstance,
    dataset_from_json,
)
from .errors import BackendFailure, UndeclaredPair, UnsupportedLanguage
from .model import (
    CheckpointSeries,
    DeskModel,
    Distribution,
    FeatureConfig,
    Hyperparameters,
)
from .strategy import ModelPlan, PlanEntry
from .translate import DecodingConfig, TranslationRequest, TranslatorBackend

Response = tuple[int, dict]


def error_response(code: str, message: str, index: Optional[int] = None,
                   status: int = 400) -> Response:
    return status, {"error": {"code": code, "message": message, "index": index}}


def _require(payload: Mapping, key: str) -> Any:
    if key not in payload:
        raise KeyError(key)
    return payload[key]


def handle_languages(translator: TranslatorBackend) -> Response:
    supported = translator.supported_languages()
    if supported is None:
        raise ValueError("serving a translator requires a declared language set")
    return 200, {"languages": sorted(t.render() for t in supported),
                 "concurrent": bool(translator.concurrent)}


def handle_translate(translator: TranslatorBackend, payload: Mapping) -> Response:
    try:
        src = LanguageTag.parse(str(_require(payload, "src")))
        tgt = LanguageTag.parse(str(_require(payload, "tgt")))
        texts = _require(payload, "texts")
        if not isinstance(texts, list) or not all(isinstance(t, str) for t in texts):
            raise TypeError("texts must be a list of strings")
        decoding = (DecodingConfig.from_wire(payload["decoding"])
                    if payload.get("decoding") else DecodingConfig.beam())
        requests = [TranslationRequest(text, src, tgt) for text in texts]
    except (KeyError, TypeError, ValueError) as exc:
        return error_response("protocol", f"{type(exc).__name__}: {exc}")
    try:
        translations = translator.translate_batch(requests, decoding)
    except UnsupportedLanguage as exc:
        return error_response("unsupported_language", str(exc))
    except UndeclaredPair as exc:
        return error_response("undeclared_pair", str(exc))
    except BackendFailure as exc:
        return error_response(exc.code, str(exc), exc.index)
    if len(translations) != len(texts):
        return error_response("internal", "translation count mismatch", status=500)
    return 200, {"translations": list(translations)}


def handle_align(aligner: AlignerBackend, payload: Mapping) -> Response:
    try:
        src_tokens = _require(payload, "src_tokens")
        tgt_tokens = _require(payload, "tgt_tokens")
        for tokens in (src_tokens, tgt_tokens):
            if not isinstance(tokens, list) or not tokens \
                    or not all(isinstance(t, str) for t in tokens):
                raise TypeError("src_tokens/tgt_tokens must be nonempty string lists")
    except (KeyError, TypeError) as exc:
        return error_response("protocol", f"{type(exc).__name__}: {exc}")
    try:
        links = aligner.align(src_tokens, tgt_tokens)
    except BackendFailure as exc:
        return error_response(exc.code, str(exc), exc.index)
    return 200, {"links": [[i, j] for i, j in sorted(links.links)]}


def links_from_wire(obj: Mapping, src_len: int, tgt_len: int) -> AlignmentLinks:
    return AlignmentLinks(frozenset((int(i), int(j)) for i, j in obj["links"]),
                          src_len, tgt_len)


def _instance_from_wire(obj: Mapping):
    task = TaskKind(obj["task"])
    language = LanguageTag.parse(obj.get("language", "und") if obj.get("language") else "und")
    if task is TaskKind.NER:
        tokens = tuple(obj["tokens"])
        return TokenInstance(id=str(obj.get("id", "0")), tokens=tokens,
                             tags=tuple(obj.get("tags") or ("O",) * len(tokens)),
                             language=language)
    return SequenceInstance(id=str(obj.get("id", "0")), text_a=obj["text_a"],
                            text_b=obj.get("text_b"), label=obj.get("label", ""),
                            language=language)


class ModelService:
    """Serves desk models over the task-model wire protocol.

    Training jobs are kept in memory; job ids are content hashes of the
    request so identical requests share one job.
    """

    def __init__(self, features: FeatureConfig = FeatureConfig()):
        self.features = features
        self._jobs: dict[str, tuple[DeskModel, CheckpointSeries]] = {}

    def handle_train(self, payload: Mapping) -> Response:
        try:
            plan_obj = _require(payload, "plan")
            hyper = Hyperparameters.from_json(_require(payload, "hyper"))
            seed = int(_require(payload, "seed"))
            fraction = float(payload.get("checkpoint_fraction", 0.1))
            phases = tuple(
                tuple(PlanEntry(str(entry.get("name", f"p{p}e{i}")),
                                dataset_from_json(entry["dataset"]))
                      for i, entry in enumerate(phase))
                for p, phase in enumerate(plan_obj["phases"]))
            plan = ModelPlan(phases=phases, seed=plan_obj.get("seed"))
        except Exception as exc:  # noqa: BLE001 - protocol boundary
            return error_response("protocol", f"{type(exc).__name__}: {exc}")
        job_id = hashlib.sha256(
            json.dumps(payload, sort_keys=True).encode("utf-8")).hexdigest()[:16]
        if job_id not in self._jobs:
            try:
                desk = DeskModel.for_plan(plan, self.features)
                series = desk.train(plan, hyper, seed, fraction)
            except Exception as exc:  # noqa: BLE001 - protocol boundary
                return error_response("train_failure", f"{type(exc).__name__}: {exc}")
            self._jobs[job_id] = (desk, series)
        return 200, {"job_id": job_id}

    def handle_checkpoints(self, payload: Mapping) -> Response:
        job = self._jobs.get(str(payload.get("job_id")))
        if job is None:
            return error_response("unknown_job", f"no job {payload.get('job_id')!r}")
        _, series = job
        return 200, {"checkpoints": [{"epoch_fraction": c.epoch_fraction}
                                     for c in series.checkpoints]}

    def handle_predict(self, payload: Mapping) -> Response:
        job = self._jobs.get(str(payload.get("job_id")))
        if job is None:
            return error_response("unknown_job", f"no job {payload.get('job_id')!r}")
        desk, series = job
        try:
            fraction = payload.get("epoch_fraction")
            checkpoint = series.at(float(fraction)) if fraction is not None else series.last
            instance = _instance_from_wire(_require(payload, "instance"))
        except (KeyError, TypeError, ValueError) as exc:
            return error_response("protocol", f"{type(exc).__name__}: {exc}")
        try:
            result = desk.predict_proba(checkpoint, instance)
        except Exception as exc:  # noqa: BLE001 - protocol boundary
            return error_response("predict_failure", f"{type(exc).__name__}: {exc}")
        if isinstance(result, Distribution):
            return 200, {"labels": list(result.labels),
                         "probabilities": list(result.probabilities)}
        return 200, {"labels": list(result[0].labels) if result else [],
                     "token_probabilities": [list(d.probabilities) for d in result]}


def make_http_server(service: "WireService", host: str = "127.0.0.1",
                     port: int = 0):
    """A stdlib ThreadingHTTPServer exposing a WireService over JSON/HTTP.

    Returns the server; call ``serve_forever`` (or run it in a thread) and
    read ``server_port`` for the bound port.
    """
    import json as _json
    from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

    class Handler(BaseHTTPRequestHandler):
        def log_message(self, *args):  # tests and scripts stay quiet
            pass

        def _respond(self, payload):
            try:
                status, body = service.handle(self.command, self.path, payload)
            except Exception as exc:  # noqa: BLE001 - server boundary
                status, body = error_response("internal", f"{type(exc).__name__}: {exc}",
                                              status=500)
            data = _json.dumps(body).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(data)))
            self.end_headers()
            self.wfile.write(data)

        def do_GET(self):
            self._respond(None)

        def do_POST(self):
            length = int(self.headers.get("Content-Length") or 0)
            raw = self.rfile.read(length) if length else b""
            try:
                payload = _json.loads(raw) if raw else None
            except _json.JSONDecodeError:
                status, body = error_response("protocol", "request body is not JSON")
                data = _json.dumps(body).encode("utf-8")
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(data)))
                self.end_headers()
                self.wfile.write(data)
                return
            self._respond(payload)

    return ThreadingHTTPServer((host, port), Handler)


class WireService:
    """Routes (method, path, payload) onto backend handlers.

    This is the single in-process implementation behind the stdlib HTTP
    server script and the test transports; a conforming remote service
    must behave identically.
    """

    def __init__(self, translator: Optional[TranslatorBackend] = None,
                 aligner: Optional[AlignerBackend] = None,
                 model_service: Optional[ModelService] = None):
        self.translator = translator
        self.aligner = aligner
        self.model_service = model_service

    def handle(self, method: str, path: str, payload: Optional[Mapping]) -> Response:
        from urllib.parse import parse_qsl

        method = method.upper()
        path, _, query = path.partition("?")
        payload = {**dict(parse_qsl(query)), **(payload or {})}
        route = (method, path)
        if route == ("GET", "/v1/languages"):
            if self.translator is None:
                return error_response("no_backend", "no translator configured")
            return handle_languages(self.translator)
        if route == ("POST", "/v1/translate"):
            if self.translator is None:
                return error_response("no_backend", "no translator configured")
            return handle_translate(self.translator, payload)
        if route == ("POST", "/v1/align"):
            if self.aligner is None:
                return error_response("no_backend", "no aligner configured")
            return handle_align(self.aligner, payload)
        if self.model_service is not None:
            if route == ("POST", "/v1/train"):
                return self.model_service.handle_train(payload)
            if route in (("GET", "/v1/checkpoints"), ("POST", "/v1/checkpoints")):
                return self.model_service.handle_checkpoints(payload)
            if route == ("POST", "/v1/predict_proba"):
                return self.model_service.handle_predict(payload)
        return error_response("not_found", f"{method} {path}", status=404)
