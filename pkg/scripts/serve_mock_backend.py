#!/usr/bin/env python3
"""Serve mock translator/aligner/model backends over the JSON wire protocol.

Useful for exercising the HTTP client paths and as a reference
implementation of the protocol:

    python scripts/serve_mock_backend.py --port 8922 \
        --mt mock:identity --languages eng_Latn deu_Latn tur_Latn

Then point a run at it with ``--backend mt=http:http://127.0.0.1:8922``.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from xlt.corpus import LanguageTag
from xlt.runconfig import make_aligner, make_translator
from xlt.wire import ModelService, WireService, make_http_server


def parse_args() -> argparse.Namespace:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8922)
    parser.add_argument("--mt", default="mock:identity",
                        help="mock:identity | mock:reverse | mock:dict:<file>")
    parser.add_argument("--align", default="mock:oracle")
    parser.add_argument("--languages", nargs="+", required=True,
                        help="language tags advertised by /v1/languages")
    return parser.parse_args()


def main() -> int:
    args = parse_args()
    languages = frozenset(LanguageTag.parse(t) for t in args.languages)
    translator = make_translator(args.mt, Path.cwd(), languages)
    aligner = make_aligner(args.align)
    service = WireService(translator, aligner, ModelService())
    server = make_http_server(service, args.host, args.port)
    print(f"serving {args.mt} / {args.align} on "
          f"http://{args.host}:{server.server_port} "
          f"({len(languages)} languages)")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    return 0


if __name__ == "__main__":
    sys.exit(main())
