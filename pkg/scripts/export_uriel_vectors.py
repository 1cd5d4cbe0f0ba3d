#!/usr/bin/env python3
"""Export URIEL typological vectors to the toolkit's CSV store format.

Requires the ``lang2vec`` package (not bundled). By default exports the
knn-imputed syntax+phonology+inventory concatenation for every language of
the three built-in benchmarks, which the typology acceptance check consumes
via XLT_URIEL_CSV:

    pip install lang2vec
    python scripts/export_uriel_vectors.py --output tests/data/uriel_knn.csv
    XLT_URIEL_CSV=tests/data/uriel_knn.csv pytest tests/test_acceptance.py
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from xlt.benchmarks import all_benchmark_languages
from xlt.typology import TypologyStore, TypologyVector, write_typology_csv

DEFAULT_FEATURE_SETS = ["syntax_knn", "phonology_knn", "inventory_knn"]


def parse_args() -> argparse.Namespace:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--output", type=Path, required=True)
    parser.add_argument("--feature-sets", nargs="+", default=DEFAULT_FEATURE_SETS,
                        help="lang2vec feature set names to concatenate")
    parser.add_argument("--languages", nargs="+", default=None,
                        help="ISO-639-3 codes (default: benchmark languages)")
    return parser.parse_args()


def main() -> int:
    args = parse_args()
    try:
        import lang2vec.lang2vec as l2v
    except ImportError:
        print("lang2vec is not installed; `pip install lang2vec` first",
              file=sys.stderr)
        return 1

    codes = args.languages or [t.code for t in all_benchmark_languages()]
    feature_set = "+".join(args.feature_sets)
    vectors = []
    skipped = []
    for code in sorted(set(codes)):
        try:
            features = l2v.get_features(code, feature_set, minimal=False)
        except Exception as exc:  # noqa: BLE001 - lang2vec raises plain Exception
            skipped.append((code, str(exc)))
            continue
        values = features.get(code)
        if values is None:
            skipped.append((code, "no vector returned"))
            continue
        floats = [0.0 if v == "--" else float(v) for v in values]
        from xlt.corpus import LanguageTag

        vectors.append(TypologyVector(LanguageTag(code), tuple(floats)))
    if not vectors:
        print("no vectors exported", file=sys.stderr)
        return 1
    # record the feature-set knob in the column names
    dim = len(vectors[0].values)
    names = [f"{feature_set}_{i}" for i in range(1, dim + 1)]
    store = TypologyStore(vectors, feature_names=names)
    args.output.parent.mkdir(parents=True, exist_ok=True)
    args.output.write_text(write_typology_csv(store), encoding="utf-8")
    print(f"wrote {len(vectors)} vectors of dim {store.dim} to {args.output} "
          f"({feature_set})")
    for code, reason in skipped:
        print(f"skipped {code}: {reason}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
