"""Bridge configuration and engine-spec parsing.

Engine specs:
    MT:      mock:identity | mock:reverse | mock:sampler | mock:boom |
             mock:dict:<file> | hf:<model_id>
    aligner: mock:identity | mock:reverse | hf:<encoder_id>
    model:   toy:ngram | none

``hf:`` specs load Hugging Face models lazily at startup and need the
``neural`` extra installed plus local model availability.
"""

from __future__ import annotations

import argparse
from dataclasses import dataclass
from typing import Optional, Sequence


class ModelLoadFailure(Exception):
    """An engine could not be constructed at startup."""


@dataclass(frozen=True)
class BridgeConfig:
    mt: str = "mock:identity"
    aligner: str = "mock:identity"
    task_model: str = "toy:ngram"
    languages: tuple[str, ...] = ()
    device: str = "cpu"
    max_batch: int = 32
    host: str = "127.0.0.1"
    port: int = 8900
    # single queue by default: remote callers must serialize
    concurrent: bool = False

    def __post_init__(self):
        if self.max_batch < 1:
            raise ModelLoadFailure("max_batch must be >= 1")
        if self.mt.startswith("mock:") and not self.languages:
            raise ModelLoadFailure(
                "mock MT engines need an explicit --languages list to advertise")


def parse_args(argv: Optional[Sequence[str]] = None) -> BridgeConfig:
    parser = argparse.ArgumentParser(
        prog="xlt-bridge",
        description="Serve MT / word-alignment / task-model backends over the "
                    "JSON wire protocol")
    parser.add_argument("--mt", default="mock:identity")
    parser.add_argument("--aligner", default="mock:identity")
    parser.add_argument("--task-model", default="toy:ngram")
    parser.add_argument("--languages", nargs="*", default=[],
                        help="language tags to advertise (mock MT engines)")
    parser.add_argument("--device", default="cpu")
    parser.add_argument("--max-batch", type=int, default=32)
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8900)
    parser.add_argument("--concurrent", action="store_true",
                        help="advertise concurrent request support")
    args = parser.parse_args(argv)
    return BridgeConfig(mt=args.mt, aligner=args.aligner,
                        task_model=args.task_model,
                        languages=tuple(args.languages), device=args.device,
                        max_batch=args.max_batch, host=args.host, port=args.port,
                        concurrent=args.concurrent)
