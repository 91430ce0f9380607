"""Venue session calendars.

All timestamps inside the package are naive venue-local wall-clock times held
as ``datetime64[ns]``; timezone-aware input is converted to the venue zone on
the way in (see :func:`to_local_ns`).
"""

from __future__ import annotations

import configparser
import datetime as dt
from dataclasses import dataclass, field
from pathlib import Path
from zoneinfo import ZoneInfo

import numpy as np
import pandas as pd

NS_PER_SECOND = 1_000_000_000
NS_PER_HOUR = 3600 * NS_PER_SECOND
NS_PER_DAY = 24 * NS_PER_HOUR


class CalendarError(ValueError):
    """Raised for inconsistent calendar definitions or lookups."""


def _parse_clock(value: str | dt.time) -> dt.time:
    if isinstance(value, dt.time):
        return value
    return dt.time.fromisoformat(value.strip())


def _seconds(t: dt.time) -> int:
    return t.hour * 3600 + t.minute * 60 + t.second


@dataclass(frozen=True)
class SessionCalendar:
    """Regular trading sessions of one venue.

    ``halts`` maps an asset id to a sequence of ``(start, end)`` local
    timestamps during which that asset did not trade.
    """

    venue: str
    open: dt.time
    close: dt.time
    dates: tuple[dt.date, ...]
    timezone: str = "UTC"
    halts: dict[str, tuple[tuple[np.datetime64, np.datetime64], ...]] = field(
        default_factory=dict
    )

    def __post_init__(self):
        if not _seconds(self.open) < _seconds(self.close):
            raise CalendarError(f"open {self.open} must precede close {self.close}")
        dates = tuple(sorted(set(self.dates)))
        object.__setattr__(self, "dates", dates)
        halts = {}
        for asset, intervals in self.halts.items():
            clean = []
            for start, end in intervals:
                start, end = np.datetime64(start, "ns"), np.datetime64(end, "ns")
                if end <= start:
                    raise CalendarError(f"empty halt interval for {asset}: {start}..{end}")
                idx = self.session_of(start)
                if idx < 0 or end > self.closes[idx]:
                    raise CalendarError(f"halt {start}..{end} for {asset} is outside session hours")
                clean.append((start, end))
            halts[asset] = tuple(sorted(clean))
        object.__setattr__(self, "halts", halts)

    @property
    def open_seconds(self) -> int:
        return _seconds(self.open)

    @property
    def close_seconds(self) -> int:
        return _seconds(self.close)

    @property
    def session_seconds(self) -> int:
        return self.close_seconds - self.open_seconds

    @property
    def midnights(self) -> np.ndarray:
        return np.array(self.dates, dtype="datetime64[D]").astype("datetime64[ns]")

    @property
    def opens(self) -> np.ndarray:
        return self.midnights + np.timedelta64(self.open_seconds, "s")

    @property
    def closes(self) -> np.ndarray:
        return self.midnights + np.timedelta64(self.close_seconds, "s")

    def session_of(self, times) -> np.ndarray | int:
        """Index of the session containing each time (closed interval), else -1."""
        t = np.asarray(times, dtype="datetime64[ns]")
        opens, closes = self.opens, self.closes
        idx = np.searchsorted(opens, t, side="right") - 1
        safe = np.clip(idx, 0, max(len(closes) - 1, 0))
        inside = (idx >= 0) & (len(closes) > 0)
        if len(closes):
            inside &= t <= closes[safe]
        out = np.where(inside, idx, -1)
        return int(out) if out.ndim == 0 else out

    def day_of(self, times) -> np.ndarray:
        """Index into ``dates`` of each timestamp's calendar date, else -1."""
        days = np.asarray(times, dtype="datetime64[ns]").astype("datetime64[D]")
        known = np.array(self.dates, dtype="datetime64[D]")
        idx = np.searchsorted(known, days)
        safe = np.clip(idx, 0, max(len(known) - 1, 0))
        hit = (idx < len(known)) & (known[safe] == days)
        return np.where(hit, idx, -1)

    def halt_mask(self, asset_id: str, times) -> np.ndarray:
        t = np.asarray(times, dtype="datetime64[ns]")
        mask = np.zeros(t.shape, dtype=bool)
        for start, end in self.halts.get(asset_id, ()):
            mask |= (t >= start) & (t <= end)
        return mask

    def restrict(self, start: dt.date | None = None, end: dt.date | None = None) -> "SessionCalendar":
        dates = [d for d in self.dates if (start is None or d >= start) and (end is None or d <= end)]
        return SessionCalendar(self.venue, self.open, self.close, tuple(dates), self.timezone)


def weekdays(start: dt.date, end: dt.date, holidays=()) -> list[dt.date]:
    holidays = set(holidays)
    out = []
    day = start
    while day <= end:
        if day.weekday() < 5 and day not in holidays:
            out.append(day)
        day += dt.timedelta(days=1)
    return out


def business_days(start: dt.date, count: int) -> list[dt.date]:
    out = []
    day = start
    while len(out) < count:
        if day.weekday() < 5:
            out.append(day)
        day += dt.timedelta(days=1)
    return out


def to_local_ns(values, timezone: str) -> np.ndarray:
    """Parse ISO-8601 strings into naive venue-local ``datetime64[ns]``.

    Offsets present in the input are honoured; naive strings are taken as
    already venue-local.
    """
    series = pd.Series(values, dtype="object")
    if series.empty:
        return np.array([], dtype="datetime64[ns]")
    parsed = pd.to_datetime(series, errors="coerce", utc=False, format="ISO8601")
    if isinstance(parsed.dtype, pd.DatetimeTZDtype):
        parsed = parsed.dt.tz_convert(ZoneInfo(timezone)).dt.tz_localize(None)
    elif parsed.dtype == object:
        # mixed naive / aware input
        parsed = pd.Series(
            [_local(v, timezone) for v in pd.to_datetime(series, errors="coerce", format="ISO8601", utc=False)],
            dtype="datetime64[ns]",
        )
    return parsed.to_numpy(dtype="datetime64[ns]")


def _local(value, timezone):
    if value is None or value is pd.NaT:
        return pd.NaT
    if value.tzinfo is None:
        return value
    return value.tz_convert(ZoneInfo(timezone)).tz_localize(None)


def _split_list(text: str) -> list[str]:
    return [part.strip() for part in text.replace("\n", ",").split(",") if part.strip()]


def load_calendar(path: str | Path) -> SessionCalendar:
    """Read a calendar config file.

    Example::

        [calendar]
        venue = XCSE
        timezone = Europe/Copenhagen
        open = 09:00
        close = 17:00
        start = 2006-01-02
        end = 2009-12-31
        holidays = 2006-04-13, 2006-04-14

        [halts]
        NOVO = 2006-03-01T10:00/2006-03-01T11:00

    An explicit ``dates`` list replaces the ``start``/``end`` weekday range.
    """
    parser = configparser.ConfigParser()
    parser.optionxform = str
    with open(path) as fh:
        parser.read_file(fh)
    if "calendar" not in parser:
        raise CalendarError(f"{path}: missing [calendar] section")
    sec = parser["calendar"]
    try:
        open_t = _parse_clock(sec["open"])
        close_t = _parse_clock(sec["close"])
    except KeyError as exc:
        raise CalendarError(f"{path}: missing key {exc}") from None
    holidays = [dt.date.fromisoformat(d) for d in _split_list(sec.get("holidays", ""))]
    if "dates" in sec:
        dates = [dt.date.fromisoformat(d) for d in _split_list(sec["dates"])]
        dates = [d for d in dates if d not in set(holidays)]
    elif "start" in sec and "end" in sec:
        dates = weekdays(dt.date.fromisoformat(sec["start"]), dt.date.fromisoformat(sec["end"]), holidays)
    else:
        raise CalendarError(f"{path}: need either 'dates' or 'start' and 'end'")
    halts: dict[str, list] = {}
    if "halts" in parser:
        for asset, spec in parser["halts"].items():
            for item in _split_list(spec):
                start, _, end = item.partition("/")
                halts.setdefault(asset, []).append((np.datetime64(start.strip(), "ns"), np.datetime64(end.strip(), "ns")))
    return SessionCalendar(
        venue=sec.get("venue", "VENUE"),
        open=open_t,
        close=close_t,
        dates=tuple(dates),
        timezone=sec.get("timezone", "UTC"),
        halts={k: tuple(v) for k, v in halts.items()},
    )


def write_calendar(calendar: SessionCalendar, path: str | Path) -> None:
    parser = configparser.ConfigParser()
    parser.optionxform = str
    parser["calendar"] = {
        "venue": calendar.venue,
        "timezone": calendar.timezone,
        "open": calendar.open.strftime("%H:%M:%S"),
        "close": calendar.close.strftime("%H:%M:%S"),
        "dates": ", ".join(d.isoformat() for d in calendar.dates),
    }
    if calendar.halts:
        parser["halts"] = {
            asset: ", ".join(f"{np.datetime_as_string(s, 's')}/{np.datetime_as_string(e, 's')}" for s, e in ivs)
            for asset, ivs in calendar.halts.items()
        }
    with open(path, "w") as fh:
        parser.write(fh)
