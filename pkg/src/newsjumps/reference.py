"""Seasonality-preserving reference announcement times.

A reference sample keeps each asset's announcement count, spreads the draws
uniformly over that asset's trading days and places them within the day
according to the asset's (or the pooled) intraday arrival distribution.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .calendar import NS_PER_DAY
from .errors import DataError
from .kde import DegenerateSampleError, grid_density, kde_bandwidth, reflect_unit

log = logging.getLogger(__name__)

MASK64 = (1 << 64) - 1
SEED_DERIVATION = "seed(copy m, asset i) = child(child(base_seed, m), i); child(s, j) = splitmix64(splitmix64(s) ^ j)"


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def child_seed(seed: int, index: int) -> int:
    return splitmix64(splitmix64(int(seed) & MASK64) ^ int(index))


def day_fraction(times) -> np.ndarray:
    t = np.asarray(times, dtype="datetime64[ns]").astype(np.int64)
    return (t % NS_PER_DAY) / NS_PER_DAY


@dataclass
class IntradayDistribution:
    """Arrival-time distribution over the day, as a fraction in [0, 1]."""

    mode: str
    atoms: np.ndarray | None = None
    weights: np.ndarray | None = None
    samples: np.ndarray | None = None
    bandwidth: float | None = None
    density: np.ndarray | None = field(default=None, repr=False)

    @classmethod
    def from_atoms(cls, fractions) -> "IntradayDistribution":
        values, counts = np.unique(np.asarray(fractions, dtype=float), return_counts=True)
        return cls("atoms", atoms=values, weights=counts / counts.sum())

    @classmethod
    def from_kde(cls, fractions, bandwidth: float | None = None) -> "IntradayDistribution":
        x = np.asarray(fractions, dtype=float)
        h = kde_bandwidth(x) if bandwidth is None else float(bandwidth)
        return cls("kde", samples=np.sort(x), bandwidth=h, density=grid_density(x, h))

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if size == 0:
            return np.empty(0)
        if self.mode == "atoms":
            return self.atoms[rng.choice(len(self.atoms), size=size, p=self.weights)]
        centres = self.samples[rng.integers(0, len(self.samples), size=size)]
        return reflect_unit(centres + self.bandwidth * rng.standard_normal(size))

    def pdf(self, x) -> np.ndarray:
        """Density at ``x`` (KDE mode), linear between bin centres and flat at the ends."""
        if self.mode != "kde":
            raise TypeError("an atom distribution has no density")
        g = len(self.density)
        centres = (np.arange(g) + 0.5) / g
        return np.interp(np.asarray(x, dtype=float), centres, self.density)

    def mass(self) -> float:
        if self.mode == "atoms":
            return float(self.weights.sum())
        return float(self.density.mean())


def fit_intraday_distribution(events, mode: str = "auto") -> IntradayDistribution:
    """Fit the arrival-time distribution of a set of events.

    ``mode`` is ``"atoms"`` (exact clock times), ``"kde"`` (smoothed) or
    ``"auto"``, which keeps atoms when releases repeat at fixed clock times
    (at most two distinct times, or on average at least two events per
    distinct time) and smooths otherwise.
    """
    times = events["time"].to_numpy() if isinstance(events, pd.DataFrame) else np.asarray([e.time for e in events])
    if len(times) == 0:
        raise DataError("cannot fit an arrival distribution to zero events")
    frac = day_fraction(times)
    distinct = len(np.unique(frac))
    if mode == "atoms" or (mode == "auto" and (distinct <= 2 or 2 * distinct <= len(frac))):
        return IntradayDistribution.from_atoms(frac)
    if mode not in ("kde", "auto"):
        raise ValueError(f"unknown distribution mode {mode!r}")
    try:
        return IntradayDistribution.from_kde(frac)
    except DegenerateSampleError:
        if mode == "kde":
            log.warning("all arrival times identical; using an atom distribution")
        return IntradayDistribution.from_atoms(frac)


def fit_distributions(events: pd.DataFrame, mode: str = "auto", pooling: str = "asset") -> dict[str, IntradayDistribution]:
    """Per-asset distributions, or one pooled distribution shared by all assets."""
    assets = sorted(events["asset_id"].unique())
    if pooling == "pooled":
        dist = fit_intraday_distribution(events, mode)
        return {a: dist for a in assets}
    if pooling != "asset":
        raise ValueError(f"unknown pooling {pooling!r}")
    return {a: fit_intraday_distribution(events[events["asset_id"] == a], mode) for a in assets}


@dataclass
class ReferenceSample:
    """Simulated announcement times per asset, with the per-day counts drawn."""

    times: dict[str, np.ndarray]
    day_counts: dict[str, np.ndarray]
    seed: int
    asset_seeds: dict[str, int]

    def count(self, asset: str | None = None) -> int:
        if asset is not None:
            return len(self.times[asset])
        return sum(len(v) for v in self.times.values())

    def to_frame(self, label: str = "reference", copy: int = 0) -> pd.DataFrame:
        parts = [
            pd.DataFrame({"asset_id": a, "time": t, "class": label, "source_id": f"ref-{copy}"})
            for a, t in sorted(self.times.items())
        ]
        if not parts:
            return pd.DataFrame(columns=["asset_id", "time", "class", "source_id"])
        return pd.concat(parts, ignore_index=True)


def _days_array(days) -> np.ndarray:
    return np.asarray(days, dtype="datetime64[D]").astype("datetime64[ns]")


def generate_reference_sample(
    asset_counts: dict[str, int],
    trading_days: dict[str, np.ndarray],
    dists: dict[str, IntradayDistribution],
    seed: int,
) -> ReferenceSample:
    """Draw one reference sample; asset ``i`` (in sorted order) uses ``child_seed(seed, i)``."""
    times, day_counts, seeds = {}, {}, {}
    for i, asset in enumerate(sorted(asset_counts)):
        n = int(asset_counts[asset])
        days = _days_array(trading_days[asset])
        if len(days) == 0:
            raise DataError(f"asset {asset} has no trading days")
        s = child_seed(seed, i)
        rng = np.random.default_rng(s)
        day_idx = rng.integers(0, len(days), size=n)
        frac = dists[asset].sample(rng, n) if n else np.empty(0)
        offset = np.rint(frac * NS_PER_DAY).astype(np.int64).astype("timedelta64[ns]")
        times[asset] = np.sort(days[day_idx] + offset)
        day_counts[asset] = np.bincount(day_idx, minlength=len(days))
        seeds[asset] = s
    return ReferenceSample(times, day_counts, int(seed), seeds)


def generate_reference_ensemble(
    asset_counts: dict[str, int],
    trading_days: dict[str, np.ndarray],
    dists: dict[str, IntradayDistribution],
    copies: int,
    base_seed: int,
) -> list[ReferenceSample]:
    """``copies`` independent reference samples; copy ``m`` uses ``child_seed(base_seed, m)``."""
    if copies < 1:
        raise ValueError("copies must be at least 1")
    return [
        generate_reference_sample(asset_counts, trading_days, dists, child_seed(base_seed, m)) for m in range(copies)
    ]


def write_reference_sample(sample: ReferenceSample, path, label: str = "reference", copy: int = 0, base_seed=None) -> None:
    frame = sample.to_frame(label, copy)
    frame["time"] = frame["time"].dt.strftime("%Y-%m-%dT%H:%M:%S.%f")
    with open(path, "w", newline="") as fh:
        if base_seed is not None:
            fh.write(f"# base_seed={base_seed}\n")
        fh.write(f"# seed={sample.seed}\n# copy={copy}\n# derivation={SEED_DERIVATION}\n")
        for asset, s in sorted(sample.asset_seeds.items()):
            fh.write(f"# asset_seed {asset}={s}\n")
        frame.rename(columns={"time": "timestamp"}).to_csv(fh, index=False)
