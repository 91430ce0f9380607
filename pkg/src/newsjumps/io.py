"""CSV readers and writers for the pipeline's file formats."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pandas as pd

from .align import events_frame
from .calendar import to_local_ns
from .errors import ConfigError
from .jumps import JumpSet
from .series import ReturnSeries


def _fmt(times, unit: str = "s") -> np.ndarray:
    return np.datetime_as_string(np.asarray(times, dtype="datetime64[ns]"), unit=unit)


def read_announcements(path, timezone: str = "UTC") -> pd.DataFrame:
    """Announcement CSV: ``asset_id, timestamp, class, source_id`` (``#`` lines ignored)."""
    raw = pd.read_csv(path, dtype=str, comment="#", keep_default_na=False)
    raw.columns = [c.strip() for c in raw.columns]
    missing = {"asset_id", "timestamp"} - set(raw.columns)
    if missing:
        raise ConfigError(f"{path}: announcement file lacks columns {sorted(missing)}")
    times = to_local_ns(raw["timestamp"].str.strip(), timezone)
    if np.isnat(times).any():
        bad = int(np.isnat(times).sum())
        raise ConfigError(f"{path}: {bad} announcement timestamps do not parse")
    df = pd.DataFrame(
        {
            "asset_id": raw["asset_id"].str.strip(),
            "time": times,
            "class": raw["class"].str.strip() if "class" in raw else "all",
            "source_id": raw["source_id"] if "source_id" in raw else "",
        }
    )
    return events_frame(df)


def write_announcements(events: pd.DataFrame, path) -> None:
    df = events_frame(events)
    out = pd.DataFrame(
        {"asset_id": df["asset_id"], "timestamp": _fmt(df["time"], "ms"), "class": df["class"], "source_id": df["source_id"]}
    )
    out.to_csv(path, index=False)


def write_returns(series: list[ReturnSeries], path) -> None:
    parts = [
        pd.DataFrame(
            {
                "asset_id": rs.asset_id,
                "bar_start": _fmt(rs.starts),
                "bar_seconds": rs.bar_seconds,
                "session": rs.session,
                "log_return": rs.returns,
            }
        )
        for rs in series
    ]
    cols = ["asset_id", "bar_start", "bar_seconds", "session", "log_return"]
    (pd.concat(parts, ignore_index=True) if parts else pd.DataFrame(columns=cols)).to_csv(path, index=False)


def read_returns(path) -> dict[str, ReturnSeries]:
    df = pd.read_csv(path, dtype={"asset_id": str})
    out = {}
    for asset, grp in df.groupby("asset_id", sort=True):
        bar = int(grp["bar_seconds"].iloc[0])
        out[asset] = ReturnSeries(
            asset,
            grp["bar_start"].to_numpy(dtype="datetime64[ns]"),
            grp["log_return"].to_numpy(dtype=float),
            bar,
            grp["session"].to_numpy(dtype=np.int64),
        )
    return out


JUMP_COLUMNS = ["asset_id", "interval_start", "interval_end", "L", "sign", "sigma_hat"]


def write_jumps(jumpsets: dict[str, JumpSet], path) -> None:
    parts = [
        pd.DataFrame(
            {
                "asset_id": asset,
                "interval_start": _fmt(js.starts),
                "interval_end": _fmt(js.ends),
                "L": js.statistic,
                "sign": js.sign,
                "sigma_hat": js.sigma,
            }
        )
        for asset, js in sorted(jumpsets.items())
    ]
    (pd.concat(parts, ignore_index=True) if parts else pd.DataFrame(columns=JUMP_COLUMNS)).to_csv(path, index=False)


def read_jumps(path) -> dict[str, JumpSet]:
    df = pd.read_csv(path, dtype={"asset_id": str})
    out = {}
    for asset, grp in df.groupby("asset_id", sort=True):
        out[asset] = JumpSet(
            asset,
            grp["interval_start"].to_numpy(dtype="datetime64[ns]"),
            grp["interval_end"].to_numpy(dtype="datetime64[ns]"),
            grp["L"].to_numpy(dtype=float),
            grp["sign"].to_numpy(dtype=np.int64),
            grp["sigma_hat"].to_numpy(dtype=float),
        )
    return out


def write_waiting_times(frame: pd.DataFrame, path) -> None:
    out = frame.copy()
    out["event_time"] = _fmt(out["event_time"], "ms")
    out.to_csv(path, index=False)


def ensure_dir(path) -> Path:
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p
