"""Wire-protocol golden tests.

The suite runs over a transport callable ``(method, path, payload) ->
(status, body)``, so the same checks exercise in-process backends (through
:class:`xlt.wire.WireService`) and any HTTP service implementing the
protocol. A service conforms when every returned check passes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

from .corpus import LanguageTag

Transport = Callable[[str, str, Optional[dict]], tuple[int, dict]]


@dataclass(frozen=True)
class CheckResult:
    name: str
    ok: bool
    detail: str = ""

    def __str__(self) -> str:
        status = "PASS" if self.ok else "FAIL"
        return f"[{status}] {self.name}" + (f": {self.detail}" if self.detail else "")


def _is_error_body(body: dict) -> bool:
    error = body.get("error")
    return (isinstance(error, dict)
            and "code" in error and "message" in error and "index" in error)


def _unsupported_tag(supported: set[str]) -> str:
    for code in ("zxx", "qqz", "xxq"):
        if code not in supported:
            return code
    raise AssertionError("could not invent an unsupported language tag")


def run_translator_conformance(transport: Transport, *,
                               fault_token: Optional[str] = None) -> list[CheckResult]:
    """Golden checks for /v1/languages and /v1/translate.

    ``fault_token`` (for backends with a fault-injection text marker) adds
    the positional-error-indexing check.
    """
    results: list[CheckResult] = []

    def check(name: str, ok: bool, detail: str = "") -> None:
        results.append(CheckResult(name, ok, "" if ok else detail))

    status, body = transport("GET", "/v1/languages", None)
    languages = body.get("languages") if isinstance(body, dict) else None
    handshake_ok = (status == 200 and isinstance(languages, list)
                    and len(languages) >= 2
                    and isinstance(body.get("concurrent"), bool))
    check("handshake_shape", handshake_ok, f"status={status} body={body}")
    if handshake_ok:
        try:
            for tag in languages:
                LanguageTag.parse(tag)
            check("handshake_tags_parse", True)
        except ValueError as exc:
            check("handshake_tags_parse", False, str(exc))
    else:
        return results

    src, tgt = languages[0], languages[1]

    def translate(texts, decoding=None, src_=None, tgt_=None):
        payload = {"src": src_ or src, "tgt": tgt_ or tgt, "texts": texts}
        if decoding is not None:
            payload["decoding"] = decoding
        return transport("POST", "/v1/translate", payload)

    beam = {"mode": "beam", "beam_size": 5}
    status, body = translate(["alpha beta", "gamma"], beam)
    shape_ok = (status == 200 and isinstance(body.get("translations"), list)
                and len(body["translations"]) == 2
                and all(isinstance(t, str) for t in body["translations"]))
    check("translate_shape", shape_ok, f"status={status} body={body}")
    if not shape_ok:
        return results

    status1, one = translate(["alpha beta"], beam)
    status2, two = translate(["gamma"], beam)
    status3, both = translate(["alpha beta", "gamma"], beam)
    check("positional_correspondence",
          status1 == status2 == status3 == 200
          and both["translations"] == [one["translations"][0], two["translations"][0]],
          f"{one} + {two} vs {both}")

    _, again = translate(["alpha beta", "gamma"], beam)
    check("beam_determinism", again == both, f"{again} vs {both}")

    _, g1 = translate(["delta"], {"mode": "greedy"})
    _, g2 = translate(["delta"], {"mode": "greedy"})
    check("greedy_determinism", g1 == g2, f"{g1} vs {g2}")

    status, body = translate(["x"], {"mode": "beam", "beam_size": 5, "top_p": 0.8})
    check("decoding_cross_params_rejected",
          status == 400 and _is_error_body(body), f"status={status} body={body}")

    status, body = translate(["x"], {"mode": "nucleus", "top_p": 0.8, "seed": 1})
    check("nucleus_accepted", status == 200 and "translations" in body,
          f"status={status} body={body}")

    nucleus = {"mode": "nucleus", "top_p": 0.8, "seed": 7}
    _, n1 = translate(["epsilon zeta eta theta"], nucleus)
    _, n2 = translate(["epsilon zeta eta theta"], nucleus)
    check("nucleus_seed_determinism", n1 == n2, f"{n1} vs {n2}")

    bad = _unsupported_tag(set(languages))
    status, body = translate(["x"], beam, tgt_=bad)
    check("unsupported_language_error",
          status == 400 and _is_error_body(body)
          and body["error"]["code"] == "unsupported_language",
          f"status={status} body={body}")

    status, body = translate(["x"], beam, tgt_=src)
    check("src_eq_tgt_rejected", status == 400 and _is_error_body(body),
          f"status={status} body={body}")

    status, body = transport("POST", "/v1/translate", {"texts": ["x"]})
    check("missing_fields_rejected", status == 400 and _is_error_body(body)
          and body["error"]["index"] is None,
          f"status={status} body={body}")

    if fault_token is not None:
        status, body = translate(["fine", f"now {fault_token}", "fine"], beam)
        check("positional_error_index",
              status == 400 and _is_error_body(body) and body["error"]["index"] == 1,
              f"status={status} body={body}")
    return results


def run_aligner_conformance(transport: Transport, *,
                            expect_identity: bool = False) -> list[CheckResult]:
    """Golden checks for /v1/align."""
    results: list[CheckResult] = []

    def check(name: str, ok: bool, detail: str = "") -> None:
        results.append(CheckResult(name, ok, "" if ok else detail))

    payload = {"src_tokens": ["a", "b"], "tgt_tokens": ["x", "y", "z"]}
    status, body = transport("POST", "/v1/align", payload)
    links = body.get("links") if isinstance(body, dict) else None
    shape_ok = (status == 200 and isinstance(links, list)
                and all(isinstance(p, list) and len(p) == 2 for p in links)
                and all(0 <= p[0] < 2 and 0 <= p[1] < 3 for p in links))
    check("align_shape", shape_ok, f"status={status} body={body}")

    _, again = transport("POST", "/v1/align", payload)
    check("align_determinism", body == again, f"{body} vs {again}")

    status, body = transport("POST", "/v1/align", {"src_tokens": [], "tgt_tokens": ["x"]})
    check("align_empty_rejected", status == 400 and _is_error_body(body),
          f"status={status} body={body}")

    if expect_identity:
        status, body = transport(
            "POST", "/v1/align", {"src_tokens": ["a", "b"], "tgt_tokens": ["x", "y"]})
        check("align_identity_links",
              status == 200 and sorted(map(tuple, body["links"])) == [(0, 0), (1, 1)],
              f"status={status} body={body}")
    return results


def run_model_conformance(transport: Transport) -> list[CheckResult]:
    """Golden checks for /v1/train, /v1/checkpoints and /v1/predict_proba."""
    results: list[CheckResult] = []

    def check(name: str, ok: bool, detail: str = "") -> None:
        results.append(CheckResult(name, ok, "" if ok else detail))

    def seq(idx: str, text: str, label: str) -> dict:
        return {"id": idx, "task": "TC", "language": "eng", "script": None,
                "provenance": "clean", "pivot": None,
                "text_a": text, "text_b": None, "label": label}

    dataset = {
        "task": "TC", "label_set": ["pos", "neg"], "split": "train",
        "instances": [seq("0", "good great fine", "pos"),
                      seq("1", "bad awful poor", "neg"),
                      seq("2", "nice good lovely", "pos"),
                      seq("3", "sad bad gross", "neg")],
    }
    train_payload = {
        "plan": {"seed": None,
                 "phases": [[{"name": "clean", "weight": 1.0, "dataset": dataset}]]},
        "hyper": {"epochs": 2, "batch_size": 2, "learning_rate": 0.5,
                  "weight_decay": 0.0},
        "seed": 7,
        "checkpoint_fraction": 0.5,
    }
    status, body = transport("POST", "/v1/train", train_payload)
    job_ok = status == 200 and isinstance(body.get("job_id"), str)
    check("train_returns_job", job_ok, f"status={status} body={body}")
    if not job_ok:
        return results
    job_id = body["job_id"]

    status, body = transport("POST", "/v1/checkpoints", {"job_id": job_id})
    fractions = [c.get("epoch_fraction") for c in body.get("checkpoints", [])] \
        if isinstance(body, dict) else []
    check("checkpoint_cadence", status == 200 and fractions == [0.5, 1.0, 1.5, 2.0],
          f"status={status} fractions={fractions}")

    status, body = transport("POST", "/v1/predict_proba", {
        "job_id": job_id, "epoch_fraction": 2.0,
        "instance": seq("q", "good nice", "pos")})
    probs = body.get("probabilities") if isinstance(body, dict) else None
    check("predict_distribution",
          status == 200 and isinstance(probs, list)
          and abs(sum(probs) - 1.0) < 1e-9 and all(p >= 0 for p in probs),
          f"status={status} body={body}")

    status, body = transport("POST", "/v1/predict_proba", {
        "job_id": "nope", "instance": seq("q", "good", "pos")})
    check("unknown_job_rejected", status == 400 and _is_error_body(body),
          f"status={status} body={body}")
    return results


def failures(results: list[CheckResult]) -> list[CheckResult]:
    return [r for r in results if not r.ok]


def assert_conformant(results: list[CheckResult]) -> None:
    bad = failures(results)
    if bad:
        raise AssertionError("conformance failures:\n" + "\n".join(map(str, bad)))
