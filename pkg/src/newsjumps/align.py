"""Announcement-to-jump waiting times on a capped trading-time clock."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd

from .calendar import NS_PER_HOUR, NS_PER_SECOND, SessionCalendar
from .jumps import JumpSet

EVENT_COLUMNS = ["asset_id", "time", "class", "source_id"]


@dataclass(frozen=True)
class Announcement:
    asset_id: str
    time: np.datetime64
    label: str = "scheduled"
    source_id: str = ""


def events_frame(events) -> pd.DataFrame:
    """Normalise a list of :class:`Announcement` (or a frame) into an event frame."""
    if isinstance(events, pd.DataFrame):
        df = events.copy()
        for col in ("class", "source_id"):
            if col not in df:
                df[col] = "" if col == "source_id" else "all"
    else:
        events = list(events)
        df = pd.DataFrame(
            {
                "asset_id": [e.asset_id for e in events],
                "time": np.array([e.time for e in events], dtype="datetime64[ns]"),
                "class": [e.label for e in events],
                "source_id": [e.source_id for e in events],
            }
        )
    df["time"] = df["time"].astype("datetime64[ns]")
    df["asset_id"] = df["asset_id"].astype(str)
    return df[EVENT_COLUMNS].sort_values(["asset_id", "time"], kind="mergesort").reset_index(drop=True)


class TradingClock:
    """Maps calendar instants to trading hours for one venue.

    Every non-trading gap (overnight, weekend, holiday) counts for at most one
    bar length. With ``mode="calendar"`` distances are plain elapsed hours.
    """

    def __init__(self, calendar: SessionCalendar, bar_seconds: int, mode: str = "trading"):
        if mode not in ("trading", "calendar"):
            raise ValueError(f"unknown clock mode {mode!r}")
        self.calendar = calendar
        self.bar_seconds = int(bar_seconds)
        self.mode = mode
        self.cap = np.int64(self.bar_seconds * NS_PER_SECOND)
        self.opens = calendar.opens.astype(np.int64)
        self.closes = calendar.closes.astype(np.int64)
        gaps = np.minimum(self.opens[1:] - self.closes[:-1], self.cap)
        lengths = self.closes - self.opens
        self.cum = np.concatenate([[0], np.cumsum(lengths[:-1] + gaps)]).astype(np.int64)

    @property
    def bar_hours(self) -> float:
        return self.bar_seconds / 3600.0

    def _locate(self, t: np.ndarray):
        idx = np.searchsorted(self.opens, t, side="right") - 1
        safe = np.clip(idx, 0, len(self.opens) - 1)
        inside = (idx >= 0) & (t <= self.closes[safe])
        return idx, safe, inside

    def distance_ns(self, frm, to) -> np.ndarray:
        frm = np.asarray(frm).astype("datetime64[ns]").astype(np.int64)
        to = np.asarray(to).astype("datetime64[ns]").astype(np.int64)
        frm, to = np.broadcast_arrays(frm, to)
        if np.any(frm > to):
            raise ValueError("distance requires from <= to")
        if self.mode == "calendar" or len(self.opens) == 0:
            return to - frm
        n = len(self.opens)
        i_f, s_f, in_f = self._locate(frm)
        i_t, s_t, in_t = self._locate(to)

        # origin side: inside a session, or in the gap before session i_f + 1
        nxt = np.clip(i_f + 1, 0, n - 1)
        anchor_f = np.where(in_f, self.cum[s_f] + (frm - self.opens[s_f]), self.cum[nxt])
        part_f = np.where(in_f, 0, np.minimum(self.opens[nxt] - frm, self.cap))

        # target side: inside a session, or in the gap after session i_t
        anchor_t = np.where(
            in_t, self.cum[s_t] + (to - self.opens[s_t]), self.cum[s_t] + (self.closes[s_t] - self.opens[s_t])
        )
        part_t = np.where(in_t, 0, np.minimum(to - self.closes[s_t], self.cap))

        out = anchor_t - anchor_f + part_f + part_t
        same_gap = ~in_f & ~in_t & (i_f == i_t)
        return np.where(same_gap, np.minimum(to - frm, self.cap), out)

    def distance(self, frm, to) -> np.ndarray:
        """Capped trading-time distance in hours."""
        return self.distance_ns(frm, to) / NS_PER_HOUR


def capped_trading_distance(frm, to, clock: TradingClock) -> float:
    return float(clock.distance(frm, to))


def filter_confounded(events, window_hours: float = 6.0) -> pd.DataFrame:
    """Drop every event with another event of the same asset within ``window_hours``."""
    df = events_frame(events)
    if df.empty:
        return df
    win = np.int64(round(window_hours * NS_PER_HOUR))
    t = df["time"].to_numpy().astype(np.int64)
    asset = df["asset_id"].to_numpy()
    same_prev = np.r_[False, asset[1:] == asset[:-1]]
    same_next = np.r_[asset[1:] == asset[:-1], False]
    gap_prev = np.r_[np.iinfo(np.int64).max, np.diff(t)]
    gap_next = np.r_[np.diff(t), np.iinfo(np.int64).max]
    crowded = (same_prev & (gap_prev <= win)) | (same_next & (gap_next <= win))
    return df[~crowded].reset_index(drop=True)


def match_forward(times, jumps: JumpSet) -> np.ndarray:
    """Index of the earliest jump interval ending after each time, -1 if none."""
    t = np.asarray(times, dtype="datetime64[ns]")
    idx = np.searchsorted(jumps.ends, t, side="right")
    return np.where(idx < len(jumps), idx, -1)


def match_backward(times, jumps: JumpSet) -> np.ndarray:
    """Index of the latest jump interval ending no later than each time, -1 if none."""
    t = np.asarray(times, dtype="datetime64[ns]")
    return np.searchsorted(jumps.ends, t, side="right") - 1


def forward_hours(times, jumps: JumpSet, clock: TradingClock) -> tuple[np.ndarray, np.ndarray]:
    """Forward waiting times (NaN when censored) and matched jump indices."""
    t = np.asarray(times, dtype="datetime64[ns]")
    idx = match_forward(t, jumps)
    out = np.full(len(t), np.nan)
    ok = idx >= 0
    if ok.any():
        s = jumps.starts[idx[ok]]
        tt = t[ok]
        later = s > tt
        d = np.zeros(len(tt))
        if later.any():
            d[later] = clock.distance(tt[later], s[later])
        out[ok] = d
    return out, idx


def backward_hours(times, jumps: JumpSet, clock: TradingClock) -> tuple[np.ndarray, np.ndarray]:
    """Backward waiting times (NaN when censored) and matched jump indices."""
    t = np.asarray(times, dtype="datetime64[ns]")
    idx = match_backward(t, jumps)
    out = np.full(len(t), np.nan)
    ok = idx >= 0
    if ok.any():
        out[ok] = clock.distance(jumps.ends[idx[ok]], t[ok])
    return out, idx


@dataclass(frozen=True)
class WaitingTime:
    event: Announcement
    direction: str
    hours: float | None
    jump: int | None

    @property
    def censored(self) -> bool:
        return self.jump is None


def forward_distance(event: Announcement, jumps: JumpSet, clock: TradingClock) -> WaitingTime:
    d, idx = forward_hours([event.time], jumps, clock)
    if idx[0] < 0:
        return WaitingTime(event, "forward", None, None)
    return WaitingTime(event, "forward", float(d[0]), int(idx[0]))


def backward_distance(event: Announcement, jumps: JumpSet, clock: TradingClock) -> WaitingTime:
    d, idx = backward_hours([event.time], jumps, clock)
    if idx[0] < 0:
        return WaitingTime(event, "backward", None, None)
    return WaitingTime(event, "backward", float(d[0]), int(idx[0]))


def nearest_jump_sizes(event: Announcement, jumps: JumpSet) -> tuple[float | None, float | None]:
    f = int(match_forward([event.time], jumps)[0])
    b = int(match_backward([event.time], jumps)[0])
    return (
        float(jumps.statistic[f]) if f >= 0 else None,
        float(jumps.statistic[b]) if b >= 0 else None,
    )


def waiting_times(events, jumpsets: dict[str, JumpSet], clock: TradingClock) -> pd.DataFrame:
    """Forward and backward waiting times for every event, one row per direction.

    Events whose asset has no jump set are treated as censored both ways.
    """
    df = events_frame(events)
    parts = []
    for asset, grp in df.groupby("asset_id", sort=True):
        jumps = jumpsets.get(asset) or JumpSet.empty(asset)
        t = grp["time"].to_numpy()
        for direction, fn in (("forward", forward_hours), ("backward", backward_hours)):
            hours, idx = fn(t, jumps, clock)
            size = np.where(idx >= 0, jumps.statistic[np.clip(idx, 0, max(len(jumps) - 1, 0))] if len(jumps) else np.nan, np.nan)
            parts.append(
                pd.DataFrame(
                    {
                        "asset_id": asset,
                        "event_time": t,
                        "class": grp["class"].to_numpy(),
                        "direction": direction,
                        "hours": hours,
                        "matched_L": size,
                        "censored": idx < 0,
                    }
                )
            )
    if not parts:
        return pd.DataFrame(columns=["asset_id", "event_time", "class", "direction", "hours", "matched_L", "censored"])
    out = pd.concat(parts, ignore_index=True)
    return out.sort_values(["direction", "asset_id", "event_time"], kind="mergesort", ascending=[False, True, True]).reset_index(drop=True)
