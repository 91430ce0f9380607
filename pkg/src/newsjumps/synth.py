"""Jump-diffusion price paths with announcement-triggered jumps.

Used as ground truth for detector size/power and end-to-end checks.
"""

from __future__ import annotations

import datetime as dt
import math
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .align import events_frame
from .calendar import NS_PER_DAY, NS_PER_SECOND, SessionCalendar, business_days
from .jumps import DetectionConfig, bipower_volatility, detect_jumps
from .ingest import log_returns
from .reference import IntradayDistribution
from .series import QuoteSeries

TRADING_DAYS_PER_YEAR = 252


@dataclass(frozen=True)
class StochasticVol:
    """Heston-type variance (per year), full-truncation Euler."""

    kappa: float = 4.0
    theta: float = 0.04
    xi: float = 0.3
    v0: float = 0.04


@dataclass(frozen=True)
class AnnouncementSpec:
    """Synthetic announcements and how prices respond to them.

    ``intraday`` of ``None`` spreads arrivals uniformly over the whole day.
    ``lag_probs[k]`` is the chance a triggered jump lands ``k`` bars after the
    bar in which the news becomes tradable.
    """

    count: int = 100
    intraday: IntradayDistribution | None = None
    trigger_prob: float = 0.0
    lag_probs: tuple[float, ...] = (1.0,)
    label: str = "scheduled"

    def __post_init__(self):
        if not 0.0 <= self.trigger_prob <= 1.0:
            raise ValueError("trigger_prob must be a probability")
        if abs(sum(self.lag_probs) - 1.0) > 1e-9 or min(self.lag_probs) < 0:
            raise ValueError("lag_probs must be a probability vector")


@dataclass(frozen=True)
class JumpDiffusionParams:
    """Model parameters. Jump sizes are in units of the per-bar diffusion sd."""

    mu: float = 0.0
    sigma: float = 0.2
    jump_intensity: float = 0.0
    jump_mean: float = 0.0
    jump_std: float = 6.0
    jump_random_sign: bool = False
    jump_open_share: float | None = None
    stochastic_vol: StochasticVol | None = None
    announcements: AnnouncementSpec | None = None
    noise_std: float = 0.0
    s0: float = 100.0

    def __post_init__(self):
        if self.sigma <= 0 or self.jump_intensity < 0 or self.jump_std < 0:
            raise ValueError("need sigma > 0, jump_intensity >= 0 and jump_std >= 0")
        if self.jump_open_share is not None and not 0 <= self.jump_open_share <= 1:
            raise ValueError("jump_open_share must be a probability")


@dataclass
class SimulatedPath:
    series: QuoteSeries
    jump_starts: np.ndarray
    jump_sizes: np.ndarray
    announcements: pd.DataFrame
    triggered: np.ndarray
    bar_sd: float
    log_returns_true: np.ndarray = field(repr=False, default=None)

    @property
    def calendar(self) -> SessionCalendar:
        return self.series.calendar


def synthetic_calendar(days: int, bars_per_day: int, bar_seconds: int, start=dt.date(2006, 1, 2), open_time=dt.time(9, 0), venue: str = "SYN") -> SessionCalendar:
    open_s = open_time.hour * 3600 + open_time.minute * 60 + open_time.second
    close_s = open_s + bars_per_day * bar_seconds
    if close_s >= 24 * 3600:
        raise ValueError("session does not fit in one day")
    close_time = dt.time(close_s // 3600, close_s % 3600 // 60, close_s % 60)
    return SessionCalendar(venue, open_time, close_time, tuple(business_days(start, days)))


def _sample_fractions(spec: AnnouncementSpec, rng: np.random.Generator, n: int) -> np.ndarray:
    if spec.intraday is None:
        return rng.uniform(0.0, 1.0, n)
    return spec.intraday.sample(rng, n)


def simulate_path(
    params: JumpDiffusionParams,
    days: int,
    bars_per_day: int,
    seed: int,
    bar_seconds: int = 900,
    asset_id: str = "SYN",
    calendar: SessionCalendar | None = None,
) -> SimulatedPath:
    """Euler scheme on the bar grid with Poisson jumps and news-triggered jumps."""
    if days < 1:
        raise ValueError("days must be at least 1")
    rng = np.random.default_rng(seed)
    cal = calendar or synthetic_calendar(days, bars_per_day, bar_seconds)
    if calendar is not None and (calendar.session_seconds != bars_per_day * bar_seconds or len(calendar.dates) != days):
        raise ValueError("calendar does not match days x bars_per_day")
    n_bars = days * bars_per_day
    dt_year = 1.0 / (TRADING_DAYS_PER_YEAR * bars_per_day)

    z = rng.standard_normal(n_bars)
    if params.stochastic_vol is None:
        var = np.full(n_bars, params.sigma**2)
    else:
        sv = params.stochastic_vol
        zv = rng.standard_normal(n_bars)
        var = np.empty(n_bars)
        v = sv.v0
        for k in range(n_bars):
            var[k] = max(v, 0.0)
            v = v + sv.kappa * (sv.theta - var[k]) * dt_year + sv.xi * math.sqrt(var[k] * dt_year) * zv[k]
    diffusion = (params.mu - 0.5 * var) * dt_year + np.sqrt(var * dt_year) * z
    base_var = params.sigma**2 if params.stochastic_vol is None else params.stochastic_vol.theta
    bar_sd = math.sqrt(base_var * dt_year)

    # baseline jumps
    n_jumps = rng.poisson(params.jump_intensity * days)
    day_idx = rng.integers(0, days, n_jumps)
    if params.jump_open_share is None:
        within = rng.integers(0, bars_per_day, n_jumps)
    else:
        n_open = max(1, min(bars_per_day, math.ceil(1800 / bar_seconds)))
        at_open = rng.uniform(size=n_jumps) < params.jump_open_share
        within = np.where(
            at_open,
            rng.integers(0, n_open, n_jumps),
            rng.integers(n_open, max(bars_per_day, n_open + 1), n_jumps) if bars_per_day > n_open else 0,
        )
    jump_bars = list(day_idx * bars_per_day + within)

    # announcements and the jumps they trigger
    spec = params.announcements
    starts_all = (cal.opens[:, None] + (np.arange(bars_per_day) * bar_seconds * NS_PER_SECOND).astype("timedelta64[ns]")).ravel()
    ends_all = starts_all + np.timedelta64(bar_seconds * NS_PER_SECOND, "ns")
    if spec is not None and spec.count > 0:
        midnights = cal.midnights
        ann_day = rng.integers(0, days, spec.count)
        frac = _sample_fractions(spec, rng, spec.count)
        ann_t = midnights[ann_day] + np.rint(frac * NS_PER_DAY).astype(np.int64).astype("timedelta64[ns]")
        ann_t = np.sort(ann_t)
        fire = rng.uniform(size=spec.count) < spec.trigger_prob
        lags = rng.choice(len(spec.lag_probs), size=spec.count, p=np.asarray(spec.lag_probs))
        first_bar = np.searchsorted(ends_all, ann_t, side="right")
        target = first_bar + lags
        ok = fire & (target < n_bars)
        jump_bars.extend(target[ok].tolist())
        triggered = ok
        announcements = events_frame(
            pd.DataFrame({"asset_id": asset_id, "time": ann_t, "class": spec.label, "source_id": [f"syn-{i}" for i in range(spec.count)]})
        )
    else:
        triggered = np.zeros(0, dtype=bool)
        announcements = events_frame(pd.DataFrame({"asset_id": [], "time": np.array([], "datetime64[ns]"), "class": [], "source_id": []}))

    jump_bars = np.asarray(jump_bars, dtype=np.int64)
    sizes = params.jump_mean + params.jump_std * rng.standard_normal(len(jump_bars))
    if params.jump_random_sign:
        sizes = sizes * rng.choice([-1.0, 1.0], size=len(jump_bars))
    sizes = sizes * bar_sd
    increments = diffusion.copy()
    np.add.at(increments, jump_bars, sizes)

    # prices: each session starts at the previous session's close
    inc = increments.reshape(days, bars_per_day)
    logp = math.log(params.s0) + np.concatenate([np.zeros((days, 1)), np.cumsum(inc, axis=1)], axis=1)
    logp += np.r_[0.0, np.cumsum(inc.sum(axis=1))[:-1]][:, None]
    prices = np.exp(logp).ravel()
    if params.noise_std > 0:
        prices = prices + params.noise_std * rng.standard_normal(len(prices))
        prices = np.maximum(prices, 1e-8)

    grid = (cal.opens[:, None] + (np.arange(bars_per_day + 1) * bar_seconds * NS_PER_SECOND).astype("timedelta64[ns]")).ravel()
    session = np.repeat(np.arange(days), bars_per_day + 1)
    series = QuoteSeries(asset_id, bar_seconds, grid, prices, session, cal)

    uniq, inv = np.unique(jump_bars, return_inverse=True)
    bar_sizes = np.zeros(len(uniq))
    np.add.at(bar_sizes, inv, sizes)
    return SimulatedPath(series, starts_all[uniq], bar_sizes, announcements, triggered, bar_sd, increments)


def path_to_ticks(path: SimulatedPath, half_spread: float = 0.005) -> pd.DataFrame:
    """One quote per grid point, in the tick CSV layout."""
    s = path.series
    return pd.DataFrame(
        {
            "asset_id": s.asset_id,
            "timestamp": pd.to_datetime(s.times).strftime("%Y-%m-%dT%H:%M:%S"),
            "bid": s.mid - half_spread,
            "ask": s.mid + half_spread,
        }
    )


@dataclass(frozen=True)
class DetectorEvaluation:
    tpr: float
    fp_per_day: float
    size: float
    n_true: int
    n_detected: int
    n_false: int
    days: int


def evaluate_detector(path: SimulatedPath, config: DetectionConfig = DetectionConfig()) -> DetectorEvaluation:
    """Compare detections with the true jump bars of a simulated path.

    Only bars with a volatility estimate enter the rates.
    """
    returns = log_returns(path.series, path.series.interval)
    found = detect_jumps(returns, config)
    tested = np.isfinite(bipower_volatility(returns.returns, config.window))
    is_true = np.isin(returns.starts, path.jump_starts)
    is_found = np.isin(returns.starts, found.starts)
    true_tested = is_true & tested
    n_true = int(true_tested.sum())
    n_false = int((is_found & ~is_true).sum())
    null_bars = int((tested & ~is_true).sum())
    days = returns.n_days
    return DetectorEvaluation(
        tpr=float((is_found & true_tested).sum() / n_true) if n_true else float("nan"),
        fp_per_day=n_false / days,
        size=n_false / null_bars if null_bars else float("nan"),
        n_true=n_true,
        n_detected=int(is_found.sum()),
        n_false=n_false,
        days=days,
    )
