"""Full pipeline on synthetic data: triggered releases and a null calibration run.

Writes each data set under --out and prints the forward-direction results.
"""

import argparse
import shutil
from dataclasses import dataclass
from pathlib import Path

import pandas as pd

from newsjumps.cli import main, write_synthetic_dataset


@dataclass
class EndToEndExperiment:
    out: Path = Path("e2e")
    trigger_prob: float = 0.8
    lag: int = 1
    null_reps: int = 50
    bootstrap: int = 10_000
    seed: int = 5


def forward_row(cfg_path: Path, out: Path) -> pd.Series:
    if main(["all", "--config", str(cfg_path), "--out", str(out)]) != 0:
        raise RuntimeError(f"pipeline failed for {cfg_path}")
    res = pd.read_csv(out / "results_waiting.csv")
    return res[(res.subset == "all") & (res.direction == "forward")].iloc[0]


def run(cfg: EndToEndExperiment) -> dict:
    trig = write_synthetic_dataset(cfg.out / "triggered", seed=cfg.seed, trigger_prob=cfg.trigger_prob, lag=cfg.lag, bootstrap=cfg.bootstrap)
    row = forward_row(trig, cfg.out / "triggered" / "results")
    null = []
    for rep in range(cfg.null_reps):
        root = cfg.out / f"null{rep}"
        r = forward_row(write_synthetic_dataset(root, seed=1_000 + rep, trigger_prob=0.0, bootstrap=cfg.bootstrap), root / "results")
        null.append({"rep": rep, "welch_p_left": r.welch_p_left, "boot_median_p_left": r.boot_median_p_left})
        shutil.rmtree(root)
    null = pd.DataFrame(null)
    return {
        "triggered_median_h": row.median_d,
        "triggered_welch_p_left": row.welch_p_left,
        "triggered_boot_median_p_left": row.boot_median_p_left,
        "null_share_welch_above_0.05": float((null.welch_p_left > 0.05).mean()),
        "null_share_boot_above_0.05": float((null.boot_median_p_left > 0.05).mean()),
    }


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=EndToEndExperiment.out)
    ap.add_argument("--null-reps", type=int, default=EndToEndExperiment.null_reps)
    ap.add_argument("--bootstrap", type=int, default=EndToEndExperiment.bootstrap)
    args = ap.parse_args()
    for k, v in run(EndToEndExperiment(out=args.out, null_reps=args.null_reps, bootstrap=args.bootstrap)).items():
        print(f"{k:>30}: {v}")
