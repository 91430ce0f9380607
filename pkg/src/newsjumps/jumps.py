"""Lee-Mykland style intraday jump detection and signature curves."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
import pandas as pd

from .errors import ConfigError
from .series import QuoteSeries, ReturnSeries

log = logging.getLogger(__name__)

SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)

# 10 seconds, then 1..15 minutes
SIGNATURE_FREQUENCIES = (10,) + tuple(60 * m for m in range(1, 16))


@dataclass(frozen=True)
class DetectionConfig:
    alpha: float = 0.01
    window: int = 156
    bar_minutes: float = 15.0

    def __post_init__(self):
        if not 0.0 <= self.alpha < 1.0:
            raise ConfigError(f"alpha must lie in [0, 1), got {self.alpha}")
        if self.window < 3:
            raise ConfigError(f"bipower window must be at least 3 bars, got {self.window}")


@dataclass(frozen=True)
class JumpRecord:
    asset_id: str
    interval_start: np.datetime64
    interval_end: np.datetime64
    statistic: float
    sign: int
    local_volatility: float


@dataclass
class JumpSet:
    """Detected jumps of one asset as columns, sorted by interval start."""

    asset_id: str
    starts: np.ndarray
    ends: np.ndarray
    statistic: np.ndarray
    sign: np.ndarray
    sigma: np.ndarray
    n_tested: int = 0
    threshold: float = float("nan")

    def __post_init__(self):
        self.starts = np.asarray(self.starts, dtype="datetime64[ns]")
        self.ends = np.asarray(self.ends, dtype="datetime64[ns]")
        self.statistic = np.asarray(self.statistic, dtype=float)
        self.sign = np.asarray(self.sign, dtype=np.int64)
        self.sigma = np.asarray(self.sigma, dtype=float)
        order = np.argsort(self.starts, kind="mergesort")
        if np.any(order != np.arange(len(order))):
            for name in ("starts", "ends", "statistic", "sign", "sigma"):
                setattr(self, name, getattr(self, name)[order])

    def __len__(self):
        return len(self.starts)

    def records(self) -> list[JumpRecord]:
        return [
            JumpRecord(self.asset_id, s, e, float(l), int(g), float(v))
            for s, e, l, g, v in zip(self.starts, self.ends, self.statistic, self.sign, self.sigma)
        ]

    @classmethod
    def empty(cls, asset_id: str) -> "JumpSet":
        return cls(asset_id, np.array([], "datetime64[ns]"), np.array([], "datetime64[ns]"), [], [], [])


def bipower_volatility(returns, window: int) -> np.ndarray:
    """Local volatility from adjacent absolute-return products.

    ``sigma[k]**2 = sum(|r_j| |r_{j-1}|, j = k-K+2 .. k-1) / (K-2)``: only the
    ``K - 1`` returns strictly before bar ``k`` enter. Bars without enough
    history get NaN.
    """
    if window < 3:
        raise ConfigError(f"bipower window must be at least 3 bars, got {window}")
    r = np.abs(np.asarray(getattr(returns, "returns", returns), dtype=float))
    n = len(r)
    sigma = np.full(n, np.nan)
    if n < window:
        return sigma
    prod = r[1:] * r[:-1]  # prod[j-1] = |r_j||r_{j-1}|
    csum = np.concatenate([[0.0], np.cumsum(prod)])
    k = np.arange(window - 1, n)
    # products j = k-K+2 .. k-1  ->  prod indices k-K+1 .. k-2
    total = csum[k - 1] - csum[k - window + 1]
    sigma[k] = np.sqrt(np.maximum(total, 0.0) / (window - 2))
    return sigma


def jump_statistic(returns, sigma: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Normalised returns ``r / sigma``.

    Returns ``(L, degenerate)``; ``L`` is NaN where sigma is missing or zero,
    and ``degenerate`` marks bars with zero sigma but a nonzero return.
    """
    r = np.asarray(getattr(returns, "returns", returns), dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    ok = np.isfinite(sigma) & (sigma > 0)
    stat = np.full(len(r), np.nan)
    stat[ok] = r[ok] / sigma[ok]
    degenerate = np.isfinite(sigma) & (sigma == 0) & (r != 0)
    return stat, degenerate


def detection_threshold(n: int, alpha: float) -> float:
    """Critical value for ``|L|`` at sample size ``n`` and level ``alpha``."""
    if n < 2:
        raise ConfigError("sample size must be at least 2")
    if alpha <= 0.0:
        return math.inf
    if alpha >= 1.0:
        return -math.inf
    log_n = math.log(n)
    root = math.sqrt(2.0 * log_n)
    c_n = root / SQRT_2_OVER_PI - (math.log(math.pi) + math.log(log_n)) / (2.0 * SQRT_2_OVER_PI * root)
    s_n = 1.0 / (SQRT_2_OVER_PI * root)
    beta = -math.log(-math.log1p(-alpha))
    return c_n + s_n * beta


def detect_jumps(returns: ReturnSeries, config: DetectionConfig = DetectionConfig()) -> JumpSet:
    if len(returns) < config.window + 1:
        log.warning("asset %s: %d bars is too short for window %d", returns.asset_id, len(returns), config.window)
        return JumpSet.empty(returns.asset_id)
    sigma = bipower_volatility(returns.returns, config.window)
    stat, degenerate = jump_statistic(returns.returns, sigma)
    if degenerate.any():
        log.warning("asset %s: %d bars with zero local volatility excluded", returns.asset_id, int(degenerate.sum()))
    tested = np.isfinite(stat)
    n = int(tested.sum())
    if n < 2:
        return JumpSet.empty(returns.asset_id)
    threshold = detection_threshold(n, config.alpha)
    hit = np.flatnonzero(tested & (np.abs(np.where(tested, stat, 0.0)) > threshold))
    starts = returns.starts[hit]
    return JumpSet(
        asset_id=returns.asset_id,
        starts=starts,
        ends=returns.ends[hit],
        statistic=np.abs(stat[hit]),
        sign=np.sign(stat[hit]).astype(np.int64),
        sigma=sigma[hit],
        n_tested=n,
        threshold=threshold,
    )


def signature_curves(series: QuoteSeries | list[QuoteSeries], frequencies=SIGNATURE_FREQUENCIES) -> pd.DataFrame:
    """Mean daily realized variance and bipower variation per sampling frequency.

    Averages run over all (asset, day) pairs. A day with a single return has
    bipower variation 0.
    """
    series_list = [series] if isinstance(series, QuoteSeries) else list(series)
    rows = []
    for freq in frequencies:
        rv_all, bv_all = [], []
        for qs in series_list:
            if freq < qs.interval or freq % qs.interval:
                raise ConfigError(f"frequency {freq}s is not a multiple of the {qs.interval}s grid")
            step = freq // qs.interval
            logp = np.log(qs.mid)
            for _, sl in qs.sessions():
                r = np.diff(logp[sl][::step])
                if len(r) == 0:
                    continue
                a = np.abs(r)
                rv_all.append(float(np.sum(r * r)))
                bv_all.append(float(np.pi / 2 * np.sum(a[1:] * a[:-1])))
        rows.append(
            {
                "frequency_seconds": freq,
                "mean_rv": float(np.mean(rv_all)) if rv_all else float("nan"),
                "mean_bv": float(np.mean(bv_all)) if bv_all else float("nan"),
                "days": len(rv_all),
            }
        )
    return pd.DataFrame(rows)
