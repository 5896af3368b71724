"""Run pairs -> featurize -> train -> predict -> calibrate -> evaluate through the CLI.

    python3 scripts/run_pipeline.py fixtures/synthetic50/config.toml runs/synthetic50
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from humorank.cli import main as cli


def run(config: Path, out: Path, seed: int | None = None) -> int:
    out.mkdir(parents=True, exist_ok=True)
    common = ["--config", str(config)] + ([] if seed is None else ["--seed", str(seed)])
    o = lambda name: str(out / name)
    steps = [
        ["pairs", "--out", o("pairs.tsv")],
        ["featurize", "--out", o("features.csv")],
        ["train", "--pairs", o("pairs.tsv"), "--features", o("features.csv"), "--out", o("model.json")],
        ["predict", "--model", o("model.json"), "--features", o("features.csv"), "--out", o("raw.csv")],
        ["calibrate", "--scores", o("raw.csv"), "--out", o("calibration.json")],
        ["predict", "--model", o("model.json"), "--features", o("features.csv"),
         "--calibration", o("calibration.json"), "--out", o("predictions.csv")],
        ["evaluate", "--predictions", o("predictions.csv"), "--report", o("report.json")],
    ]
    for step in steps:
        print(f"== {step[0]}")
        code = cli(step[:1] + common + step[1:])
        if code:
            return code
    return 0


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description="run the full pipeline from one config file")
    ap.add_argument("config", type=Path)
    ap.add_argument("out", type=Path)
    ap.add_argument("--seed", type=int)
    args = ap.parse_args()
    sys.exit(run(args.config, args.out, args.seed))
