"""True-positive rate of the jump test against injected jumps of fixed size."""

import argparse
from dataclasses import dataclass

import pandas as pd

from newsjumps.jumps import DetectionConfig
from newsjumps.synth import JumpDiffusionParams, evaluate_detector, simulate_path


@dataclass
class PowerExperiment:
    sizes: tuple = (3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 10.0)
    paths: int = 100
    days: int = 977
    bars_per_day: int = 34
    intensity: float = 0.12
    alpha: float = 0.01
    seed: int = 20_000


def run(cfg: PowerExperiment) -> pd.DataFrame:
    rows = []
    for size in cfg.sizes:
        params = JumpDiffusionParams(jump_intensity=cfg.intensity, jump_mean=size, jump_std=0.0, jump_random_sign=True)
        hit = total = false = days = 0
        for s in range(cfg.paths):
            ev = evaluate_detector(simulate_path(params, cfg.days, cfg.bars_per_day, seed=cfg.seed + s), DetectionConfig(alpha=cfg.alpha))
            hit += round(ev.tpr * ev.n_true)
            total += ev.n_true
            false += ev.n_false
            days += ev.days
        rows.append({"jump_size_sd": size, "true_jumps": total, "tpr": hit / total, "false_per_day": false / days})
    return pd.DataFrame(rows)


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--paths", type=int, default=PowerExperiment.paths)
    ap.add_argument("--alpha", type=float, default=PowerExperiment.alpha)
    args = ap.parse_args()
    print(run(PowerExperiment(paths=args.paths, alpha=args.alpha)).to_string(index=False))
