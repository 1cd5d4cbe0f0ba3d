"""Uvicorn entry point: ``xlt-bridge --mt mock:identity --languages ...``."""

from __future__ import annotations

import sys
from typing import Optional, Sequence

import uvicorn

from .app import create_app
from .config import ModelLoadFailure, parse_args


def main(argv: Optional[Sequence[str]] = None) -> int:
    config = parse_args(argv)
    try:
        app = create_app(config)
    except ModelLoadFailure as exc:
        print(f"startup failure: {exc}", file=sys.stderr)
        return 1
    uvicorn.run(app, host=config.host, port=config.port, log_level="warning")
    return 0


if __name__ == "__main__":
    sys.exit(main())
