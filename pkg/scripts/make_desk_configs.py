#!/usr/bin/env python3
"""Stage a ready-to-run desk-scale experiment directory for the CLI.

Writes synthetic two-language data, a bilingual lexicon file, and one
config per strategy family, so the pipeline can be tried immediately:

    python scripts/make_desk_configs.py --out /tmp/desk
    xlt all --config /tmp/desk/rt_src.json --runs-dir /tmp/desk/runs
    xlt all --config /tmp/desk/zero_shot.json --runs-dir /tmp/desk/runs
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from xlt.corpus import LanguageTag, Split, write_jsonl
from xlt.synthdata import build_sentiment_world, sample_sentiment_dataset

STRATEGIES = {
    "zero_shot": {"family": "ZeroShot"},
    "t_src": {"family": "TTrain", "variant": "T_SRC", "schedule": "joint"},
    "t_src_seq": {"family": "TTrain", "variant": "T_SRC", "schedule": "sequential"},
    "t_test": {"family": "TTest", "variant": "TTEST"},
    "rt_src": {"family": "RTT", "variant": "RT_SRC"},
    "rt_ens_src": {"family": "RTT", "variant": "RT_ENS_SRC",
                   "seeds": [0, 1, 2, 3]},
}


def parse_args() -> argparse.Namespace:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", type=Path, required=True)
    parser.add_argument("--train-size", type=int, default=300)
    parser.add_argument("--seed", type=int, default=0)
    return parser.parse_args()


def main() -> int:
    args = parse_args()
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    eng, deu = LanguageTag("eng"), LanguageTag("deu")
    world = build_sentiment_world(eng, deu, seed=args.seed)

    (out / "train.jsonl").write_text(
        write_jsonl(sample_sentiment_dataset(world, args.train_size, seed=1)))
    (out / "val.jsonl").write_text(
        write_jsonl(sample_sentiment_dataset(world, 80, seed=2,
                                             split=Split.VALIDATION,
                                             id_prefix="v")))
    (out / "test_deu.jsonl").write_text(
        write_jsonl(sample_sentiment_dataset(world, 80, seed=3, split=Split.TEST,
                                             language=deu, id_prefix="t")))
    (out / "oracle_deu.jsonl").write_text(
        write_jsonl(sample_sentiment_dataset(world, 40, seed=4,
                                             split=Split.VALIDATION,
                                             language=deu, id_prefix="o")))
    (out / "lexicons.json").write_text(json.dumps(
        {"eng->deu": dict(world.lexicon), "deu->eng": world.reverse_lexicon()},
        indent=2, sort_keys=True))

    base = {
        "task": "TC",
        "data": {
            "train": {"path": "train.jsonl", "language": "eng"},
            "validation": {"path": "val.jsonl", "language": "eng",
                           "split": "validation"},
            "test": {"deu": {"path": "test_deu.jsonl", "language": "deu",
                             "split": "test"}},
            "oracle_validation": {"deu": {"path": "oracle_deu.jsonl",
                                          "language": "deu",
                                          "split": "validation"}},
        },
        "backends": {"mt": "mock:dict:lexicons.json", "align": "mock:oracle",
                     "model": "desk"},
        "seeds": [7, 8, 9],
        "hyper": {"epochs": 3, "batch_size": 16, "learning_rate": 0.5,
                  "weight_decay": 0.0001},
        "checkpoint_fraction": 0.2,
        "validation_variant": "Val-Trg",
        "features": {"dim": 4096},
    }
    for name, strategy in STRATEGIES.items():
        config = dict(base)
        config["strategy"] = {"source": "eng", "targets": ["deu"],
                              "decoding": {"mode": "beam", "beam_size": 5},
                              **strategy}
        if "seeds" in strategy:  # ensemble member seeds live in the strategy
            config["strategy"]["seeds"] = strategy["seeds"]
        (out / f"{name}.json").write_text(json.dumps(config, indent=2))
    print(f"staged {len(STRATEGIES)} configs under {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
