"""Regular price grids and intraday return series."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .calendar import NS_PER_SECOND, SessionCalendar


@dataclass
class QuoteSeries:
    """Mid-prices on a regular intraday grid.

    ``session`` holds, for every grid point, the index of its session in
    ``calendar.dates``.
    """

    asset_id: str
    interval: int
    times: np.ndarray
    mid: np.ndarray
    session: np.ndarray
    calendar: SessionCalendar

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype="datetime64[ns]")
        self.mid = np.asarray(self.mid, dtype=float)
        self.session = np.asarray(self.session, dtype=np.int64)
        if not (len(self.times) == len(self.mid) == len(self.session)):
            raise ValueError("times, mid and session must have equal length")
        if np.any(self.mid <= 0):
            raise ValueError("mid-prices must be strictly positive")

    def __len__(self):
        return len(self.times)

    def sessions(self):
        """Yield ``(session_index, slice)`` for each session present."""
        if len(self.session) == 0:
            return
        breaks = np.flatnonzero(np.diff(self.session)) + 1
        starts = np.concatenate([[0], breaks])
        stops = np.concatenate([breaks, [len(self.session)]])
        for a, b in zip(starts, stops):
            yield int(self.session[a]), slice(int(a), int(b))


@dataclass
class ReturnSeries:
    """Intraday log-returns; ``starts[k]`` is the beginning of bar ``k``.

    Bars never straddle a session boundary, so ``ends - starts`` equals
    ``bar_seconds`` everywhere.
    """

    asset_id: str
    starts: np.ndarray
    returns: np.ndarray
    bar_seconds: int
    session: np.ndarray

    def __post_init__(self):
        self.starts = np.asarray(self.starts, dtype="datetime64[ns]")
        self.returns = np.asarray(self.returns, dtype=float)
        self.session = np.asarray(self.session, dtype=np.int64)
        if not (len(self.starts) == len(self.returns) == len(self.session)):
            raise ValueError("starts, returns and session must have equal length")

    def __len__(self):
        return len(self.returns)

    @property
    def ends(self) -> np.ndarray:
        return self.starts + np.timedelta64(self.bar_seconds * NS_PER_SECOND, "ns")

    @property
    def bar_minutes(self) -> float:
        return self.bar_seconds / 60.0

    @property
    def n_days(self) -> int:
        return len(np.unique(self.session))
