"""Tick parsing, cleaning and regular-grid sampling.

Ticks travel as a :class:`pandas.DataFrame` with columns ``asset``, ``time``
(venue-local ``datetime64[ns]``), ``bid`` and ``ask``.
"""

from __future__ import annotations

import io
import logging
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd
from numpy.lib.stride_tricks import sliding_window_view

from .calendar import NS_PER_SECOND, CalendarError, SessionCalendar, to_local_ns
from .errors import ConfigError, DataError
from .series import QuoteSeries, ReturnSeries

log = logging.getLogger(__name__)

TICK_COLUMNS = ["asset", "time", "bid", "ask"]

# cleaning constants
SPREAD_MULTIPLE = 50.0
OUTLIER_WINDOW = 25
OUTLIER_MADS = 10.0


@dataclass(frozen=True)
class TickFormat:
    """Column mapping for delimited tick files.

    Leave ``asset`` as ``None`` for one-file-per-asset input and give the id
    in ``asset_id`` instead.
    """

    timestamp: str = "timestamp"
    bid: str = "bid"
    ask: str = "ask"
    asset: str | None = "asset_id"
    asset_id: str | None = None
    delimiter: str = ","
    timezone: str = "UTC"


@dataclass
class ParseReport:
    rows: int
    rejected: int
    reasons: list[tuple[int, str]]

    def write(self, path: str | Path) -> None:
        with open(path, "w") as fh:
            fh.write(f"rows\t{self.rows}\nrejected\t{self.rejected}\n")
            for line, reason in self.reasons:
                fh.write(f"{line}\t{reason}\n")


def empty_ticks() -> pd.DataFrame:
    return pd.DataFrame(
        {
            "asset": pd.Series([], dtype=object),
            "time": pd.Series([], dtype="datetime64[ns]"),
            "bid": pd.Series([], dtype=float),
            "ask": pd.Series([], dtype=float),
        }
    )


def parse_ticks(source, fmt: TickFormat) -> tuple[pd.DataFrame, ParseReport]:
    """Parse a delimited tick file into a tick frame, in file order.

    ``source`` may be a path, bytes, text or a binary/text stream. Rows whose
    timestamp or prices do not parse are skipped and itemised in the report.
    """
    if isinstance(source, (bytes, bytearray)):
        source = io.BytesIO(source)
    elif isinstance(source, str) and "\n" in source:
        source = io.StringIO(source)
    raw = pd.read_csv(source, sep=fmt.delimiter, dtype=str, keep_default_na=False, skipinitialspace=True)
    raw.columns = [c.strip() for c in raw.columns]
    needed = [fmt.timestamp, fmt.bid, fmt.ask] + ([fmt.asset] if fmt.asset else [])
    missing = [c for c in needed if c not in raw.columns]
    if missing:
        raise ConfigError(f"tick header lacks mapped columns {missing}; found {list(raw.columns)}")
    if fmt.asset is None and fmt.asset_id is None:
        raise ConfigError("either an asset column or a fixed asset_id is required")

    times = to_local_ns(raw[fmt.timestamp].str.strip(), fmt.timezone)
    bid = pd.to_numeric(raw[fmt.bid], errors="coerce").to_numpy(dtype=float)
    ask = pd.to_numeric(raw[fmt.ask], errors="coerce").to_numpy(dtype=float)
    assets = raw[fmt.asset].str.strip().to_numpy(dtype=object) if fmt.asset else np.full(len(raw), fmt.asset_id, dtype=object)

    bad_time = np.isnat(times)
    bad_bid = ~np.isfinite(bid)
    bad_ask = ~np.isfinite(ask)
    bad_asset = np.array([not a for a in assets], dtype=bool)
    bad = bad_time | bad_bid | bad_ask | bad_asset

    reasons = []
    for i in np.flatnonzero(bad):
        why = [name for name, m in (("timestamp", bad_time), ("bid", bad_bid), ("ask", bad_ask), ("asset", bad_asset)) if m[i]]
        reasons.append((int(i) + 2, "unparseable " + ",".join(why)))  # +2: header line, 1-based
    report = ParseReport(rows=len(raw), rejected=int(bad.sum()), reasons=reasons)
    if len(raw) and report.rejected > 0.5 * len(raw):
        raise ConfigError(f"{report.rejected} of {len(raw)} rows unparseable; check the column mapping")
    if report.rejected:
        log.warning("skipped %d unparseable tick rows", report.rejected)

    keep = ~bad
    ticks = pd.DataFrame({"asset": assets[keep], "time": times[keep], "bid": bid[keep], "ask": ask[keep]})
    return ticks.reset_index(drop=True), report


def sort_ticks(ticks: pd.DataFrame) -> pd.DataFrame:
    return ticks.sort_values(["asset", "time"], kind="mergesort").reset_index(drop=True)


def _rolling_outliers(mid: np.ndarray, window: int = OUTLIER_WINDOW, mads: float = OUTLIER_MADS) -> np.ndarray:
    """Flag points far from the median of their centred neighbourhood (self excluded)."""
    n = len(mid)
    if n < 3:
        return np.zeros(n, dtype=bool)
    half = window // 2
    padded = np.full(n + 2 * half, np.nan)
    padded[half : half + n] = mid
    flags = np.zeros(n, dtype=bool)
    chunk = 100_000
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        for lo in range(0, n, chunk):
            hi = min(n, lo + chunk)
            win = sliding_window_view(padded[lo : hi + 2 * half], 2 * half + 1)
            neigh = np.delete(win, half, axis=1)
            med = np.nanmedian(neigh, axis=1)
            mad = np.nanmean(np.abs(neigh - med[:, None]), axis=1)
            enough = np.sum(~np.isnan(neigh), axis=1) >= 2
            dev = np.abs(mid[lo:hi] - med)
            flags[lo:hi] = enough & (mad > 0) & (dev > mads * mad)
    return flags


def _quote_rules(ticks: pd.DataFrame, calendar: SessionCalendar, asset: str, counts: dict) -> pd.DataFrame:
    """One pass of the quote rules; returns the surviving rows."""
    bid = ticks["bid"].to_numpy()
    ask = ticks["ask"].to_numpy()
    keep = bid <= ask
    counts["Q1"] += int((~keep).sum())
    ticks = ticks[keep]

    day = ticks["time"].to_numpy().astype("datetime64[D]")
    spread = (ticks["ask"] - ticks["bid"]).to_numpy()
    med = pd.Series(spread).groupby(day).transform("median").to_numpy()
    wide = (med > 0) & (spread > SPREAD_MULTIPLE * med)
    counts["Q2"] += int(wide.sum())
    ticks = ticks[~wide]

    mid = ((ticks["bid"] + ticks["ask"]) / 2).to_numpy()
    day = ticks["time"].to_numpy().astype("datetime64[D]")
    flags = np.zeros(len(ticks), dtype=bool)
    if len(ticks):
        breaks = np.flatnonzero(day[1:] != day[:-1]) + 1
        for a, b in zip(np.r_[0, breaks], np.r_[breaks, len(ticks)]):
            flags[a:b] = _rolling_outliers(mid[a:b])
    counts["Q3"] += int(flags.sum())
    ticks = ticks[~flags]

    halted = calendar.halt_mask(asset, ticks["time"].to_numpy())
    counts["Q4"] += int(halted.sum())
    return ticks[~halted]


def clean_ticks(ticks: pd.DataFrame, calendar: SessionCalendar) -> pd.DataFrame:
    """Apply the P1-P3 / Q1-Q4 cleaning rules to the ticks of one asset.

    The quote rules are repeated until nothing more is removed, which makes
    cleaning idempotent. Per-rule drop counts land in ``result.attrs["dropped"]``.
    """
    counts = dict.fromkeys(["P1", "P2", "P3", "Q1", "Q2", "Q3", "Q4"], 0)
    if len(ticks) == 0:
        out = empty_ticks()
        out.attrs["dropped"] = counts
        return out
    assets = ticks["asset"].unique()
    if len(assets) != 1:
        raise DataError(f"clean_ticks expects a single asset, got {len(assets)}")
    asset = assets[0]
    ticks = ticks.sort_values("time", kind="mergesort")
    times = ticks["time"].to_numpy(dtype="datetime64[ns]")

    unknown = calendar.day_of(times) < 0
    if unknown.any():
        first = np.datetime_as_string(times[unknown][0], "D")
        raise CalendarError(f"calendar has no session for {first} ({int(unknown.sum())} ticks)")

    in_session = calendar.session_of(times) >= 0
    counts["P1"] = int((~in_session).sum())
    ticks = ticks[in_session]

    positive = (ticks["bid"] > 0) & (ticks["ask"] > 0)
    counts["P2"] = int((~positive).sum())
    ticks = ticks[positive]

    before = len(ticks)
    ticks = ticks.groupby("time", sort=True, as_index=False).agg(bid=("bid", "median"), ask=("ask", "median"))
    ticks.insert(0, "asset", asset)
    counts["P3"] = before - len(ticks)

    while True:
        n = len(ticks)
        ticks = _quote_rules(ticks, calendar, asset, counts)
        if len(ticks) == n:
            break
    out = ticks[TICK_COLUMNS].reset_index(drop=True)
    out.attrs["dropped"] = counts
    return out


def resample(ticks: pd.DataFrame, interval: int, calendar: SessionCalendar) -> QuoteSeries:
    """Previous-tick sampling of cleaned ticks onto each session's grid.

    Grid points before the first tick of a session take that first tick.
    """
    if interval <= 0:
        raise ConfigError("interval must be a positive number of seconds")
    assets = ticks["asset"].unique() if len(ticks) else []
    asset = str(assets[0]) if len(assets) else ""
    times = ticks["time"].to_numpy(dtype="datetime64[ns]")
    mid = ((ticks["bid"] + ticks["ask"]) / 2).to_numpy(dtype=float)
    sess = calendar.session_of(times) if len(times) else np.array([], dtype=np.int64)

    n_grid = calendar.session_seconds // interval + 1
    step = np.arange(n_grid) * np.timedelta64(interval * NS_PER_SECOND, "ns")
    out_t, out_p, out_s = [], [], []
    opens = calendar.opens
    for s in range(len(calendar.dates)):
        lo, hi = np.searchsorted(sess, s, side="left"), np.searchsorted(sess, s, side="right")
        if lo == hi:
            log.info("asset %s: no ticks in session %s, omitted", asset, calendar.dates[s])
            continue
        grid = opens[s] + step
        idx = np.searchsorted(times[lo:hi], grid, side="right") - 1
        idx = np.maximum(idx, 0)
        out_t.append(grid)
        out_p.append(mid[lo:hi][idx])
        out_s.append(np.full(n_grid, s))
    if not out_t:
        return QuoteSeries(asset, interval, np.array([], "datetime64[ns]"), np.array([]), np.array([], np.int64), calendar)
    return QuoteSeries(asset, interval, np.concatenate(out_t), np.concatenate(out_p), np.concatenate(out_s), calendar)


def log_returns(series: QuoteSeries, bar_seconds: int) -> ReturnSeries:
    """Within-session log-returns at ``bar_seconds`` spacing; overnight moves are dropped."""
    if bar_seconds <= 0 or bar_seconds % series.interval:
        raise ConfigError(f"bar length {bar_seconds}s is not a multiple of the {series.interval}s grid")
    step = bar_seconds // series.interval
    starts, rets, sess = [], [], []
    logp = np.log(series.mid)
    for s, sl in series.sessions():
        lp = logp[sl][::step]
        t = series.times[sl][::step]
        if len(lp) < 2:
            continue
        starts.append(t[:-1])
        rets.append(np.diff(lp))
        sess.append(np.full(len(lp) - 1, s))
    if not rets:
        return ReturnSeries(series.asset_id, np.array([], "datetime64[ns]"), np.array([]), bar_seconds, np.array([], np.int64))
    return ReturnSeries(series.asset_id, np.concatenate(starts), np.concatenate(rets), bar_seconds, np.concatenate(sess))
