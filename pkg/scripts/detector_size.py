"""Spurious-detection rate of the jump test on jump-free diffusion paths.

Compares the rate with the band implied by the extreme-value null and with
the same statistic computed from the true volatility.
"""

import argparse
import math
from dataclasses import dataclass

import numpy as np
import scipy.stats

from newsjumps.ingest import log_returns
from newsjumps.jumps import DetectionConfig, bipower_volatility, detect_jumps
from newsjumps.synth import JumpDiffusionParams, simulate_path


@dataclass
class SizeExperiment:
    paths: int = 200
    days: int = 977
    bars_per_day: int = 34
    alpha: float = 0.01
    window: int = 156
    seed: int = 10_000


def run(cfg: SizeExperiment) -> dict:
    c = math.sqrt(2 / math.pi)
    det = DetectionConfig(alpha=cfg.alpha, window=cfg.window)
    spurious_days = known = days = 0
    for s in range(cfg.paths):
        path = simulate_path(JumpDiffusionParams(), cfg.days, cfg.bars_per_day, seed=cfg.seed + s)
        r = log_returns(path.series, 900)
        found = detect_jumps(r, det)
        spurious_days += len(np.unique(found.starts.astype("datetime64[D]")))
        days += r.n_days
        tested = np.isfinite(bipower_volatility(r.returns, cfg.window))
        known += int(np.sum(np.abs(r.returns[tested]) / (c * path.bar_sd) > found.threshold))
    p_day = cfg.paths * -math.log1p(-cfg.alpha) / days
    lo, hi = scipy.stats.binom.ppf([0.025, 0.975], days, p_day)
    return {"days": days, "spurious_days": spurious_days, "expected": p_day * days, "band": (int(lo), int(hi)), "true_sigma_exceedances": known}


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--paths", type=int, default=SizeExperiment.paths)
    ap.add_argument("--alpha", type=float, default=SizeExperiment.alpha)
    ap.add_argument("--window", type=int, default=SizeExperiment.window)
    args = ap.parse_args()
    res = run(SizeExperiment(paths=args.paths, alpha=args.alpha, window=args.window))
    for k, v in res.items():
        print(f"{k:>24}: {v}")
