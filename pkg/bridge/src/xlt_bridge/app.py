"""FastAPI application exposing the wire protocol over the loaded engines.

Every error leaves as ``{"error": {"code", "message", "index"}}`` with
status 400 (500 for unexpected internal failures); successful responses
match the protocol bodies bit for bit.
"""

from __future__ import annotations

from typing import Optional

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse

from .config import BridgeConfig
from .engines import (
    Decoding,
    EngineError,
    build_alignment_engine,
    build_task_model,
    build_translation_engine,
    check_language_tag,
)


def error_json(code: str, message: str, index: Optional[int] = None,
               status: int = 400) -> JSONResponse:
    return JSONResponse(status_code=status,
                        content={"error": {"code": code, "message": message,
                                           "index": index}})


def create_app(config: BridgeConfig) -> FastAPI:
    translation = build_translation_engine(config)
    alignment = build_alignment_engine(config)
    task_model = build_task_model(config)
    app = FastAPI(title="xlt-bridge", version="0.1.0")
    app.state.config = config

    @app.exception_handler(RequestValidationError)
    async def _validation_handler(request: Request, exc: RequestValidationError):
        return error_json("protocol", str(exc.errors()[:1]))

    @app.exception_handler(EngineError)
    async def _engine_handler(request: Request, exc: EngineError):
        return error_json(exc.code, str(exc), exc.index)

    @app.exception_handler(Exception)
    async def _internal_handler(request: Request, exc: Exception):
        return error_json("internal", f"{type(exc).__name__}: {exc}", status=500)

    @app.get("/v1/languages")
    async def languages():
        return {"languages": translation.languages(),
                "concurrent": config.concurrent}

    @app.post("/v1/translate")
    async def translate(request: Request):
        payload = await _json_body(request)
        for key in ("src", "tgt", "texts"):
            if key not in payload:
                raise EngineError(f"missing field {key!r}", code="protocol")
        src = check_language_tag(payload["src"])
        tgt = check_language_tag(payload["tgt"])
        texts = payload["texts"]
        if not isinstance(texts, list) or not all(isinstance(t, str) for t in texts):
            raise EngineError("texts must be a list of strings", code="protocol")
        decoding = Decoding.from_payload(payload.get("decoding"))
        translations = translation.translate(src, tgt, texts, decoding)
        if len(translations) != len(texts):
            return error_json("internal", "translation count mismatch", status=500)
        return {"translations": translations}

    @app.post("/v1/align")
    async def align(request: Request):
        payload = await _json_body(request)
        src_tokens = payload.get("src_tokens")
        tgt_tokens = payload.get("tgt_tokens")
        for tokens in (src_tokens, tgt_tokens):
            if not isinstance(tokens, list) or not tokens \
                    or not all(isinstance(t, str) for t in tokens):
                raise EngineError("src_tokens/tgt_tokens must be nonempty "
                                  "string lists", code="protocol")
        links = alignment.align(src_tokens, tgt_tokens)
        for i, j in links:
            if not (0 <= i < len(src_tokens) and 0 <= j < len(tgt_tokens)):
                return error_json("internal", f"link {i}-{j} out of range",
                                  status=500)
        return {"links": [[i, j] for i, j in sorted(links)]}

    @app.post("/v1/train")
    async def train(request: Request):
        if task_model is None:
            raise EngineError("no task model configured", code="no_task_model")
        payload = await _json_body(request)
        for key in ("plan", "hyper", "seed"):
            if key not in payload:
                raise EngineError(f"missing field {key!r}", code="protocol")
        try:
            job_id = task_model.train(payload)
        except EngineError:
            raise
        except Exception as exc:  # noqa: BLE001 - malformed plans surface here
            raise EngineError(f"{type(exc).__name__}: {exc}",
                              code="train_failure") from exc
        return {"job_id": job_id}

    @app.get("/v1/checkpoints")
    async def checkpoints_get(job_id: str = ""):
        return _checkpoints(job_id)

    @app.post("/v1/checkpoints")
    async def checkpoints_post(request: Request):
        payload = await _json_body(request)
        return _checkpoints(str(payload.get("job_id", "")))

    def _checkpoints(job_id: str):
        if task_model is None:
            raise EngineError("no task model configured", code="no_task_model")
        return {"checkpoints": [{"epoch_fraction": fraction}
                                for fraction in task_model.checkpoints(job_id)]}

    @app.post("/v1/predict_proba")
    async def predict(request: Request):
        if task_model is None:
            raise EngineError("no task model configured", code="no_task_model")
        payload = await _json_body(request)
        if "instance" not in payload:
            raise EngineError("missing field 'instance'", code="protocol")
        return task_model.predict(str(payload.get("job_id", "")),
                                  payload.get("epoch_fraction"),
                                  payload["instance"])

    async def _json_body(request: Request) -> dict:
        try:
            payload = await request.json()
        except Exception as exc:  # noqa: BLE001 - malformed body
            raise EngineError("request body is not JSON", code="protocol") from exc
        if not isinstance(payload, dict):
            raise EngineError("request body must be a JSON object", code="protocol")
        return payload

    return app
