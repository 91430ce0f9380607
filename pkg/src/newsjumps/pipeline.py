"""End-to-end orchestration: ingest -> detect -> align -> reference -> test -> report."""

from __future__ import annotations

import configparser
import hashlib
import json
import logging
import os
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np
import pandas as pd

from . import __version__
from .align import TradingClock, backward_hours, events_frame, filter_confounded, forward_hours, waiting_times
from .calendar import NS_PER_DAY, SessionCalendar, load_calendar
from .errors import ConfigError
from .ingest import TickFormat, clean_ticks, log_returns, parse_ticks, resample, sort_ticks
from .io import (
    ensure_dir,
    read_announcements,
    read_jumps,
    read_returns,
    write_jumps,
    write_returns,
    write_waiting_times,
)
from .jumps import SIGNATURE_FREQUENCIES, DetectionConfig, JumpSet, detect_jumps, signature_curves
from .reference import (
    SEED_DERIVATION,
    child_seed,
    fit_distributions,
    generate_reference_sample,
    write_reference_sample,
)
from .stats import bootstrap_counts, welch_u

log = logging.getLogger(__name__)

STAGES = ("ingest", "detect", "align", "reference", "test", "report")
EXIT_CODES = {"config": 2, "ingest": 3, "detect": 4, "align": 5, "reference": 6, "test": 7, "report": 8, "synth": 9}

DECISIONS = [
    "grid points before a session's first quote take that first quote",
    "overnight returns excluded; bipower window runs over consecutive intraday returns",
    "threshold sample size n = testable bars per asset",
    "non-trading gaps capped at one bar; an endpoint inside a gap contributes min(part, bar)",
    "confounding window measured in calendar hours, symmetric",
    "censored waiting times excluded from tests",
    "reference days drawn uniformly from the asset's own trading days; intraday draws on the full day",
    "kde=auto keeps exact clock times when there are at most two distinct arrival times or each recurs twice on average",
    "bootstrap ties count toward both tails",
    "Welch U: Welch t-test on pooled mid-ranks",
]


class StageError(RuntimeError):
    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.code = EXIT_CODES.get(stage, 1)
        self.cause = cause


@dataclass
class RunConfig:
    ticks: list[Path]
    announcements: Path
    calendar: Path
    out: Path = Path("out")
    tick_format: TickFormat = field(default_factory=TickFormat)
    announcement_timezone: str | None = None
    grid_seconds: int = 10
    bar_minutes: float = 15.0
    alpha: float = 0.01
    window: int = 156
    kde: str = "auto"
    pooling: str = "asset"
    confound_hours: float = 6.0
    clock: str = "trading"
    ensemble: int | None = None
    bootstrap: int = 10_000
    seed: int = 20060102
    workers: int = 0
    write_ensemble: bool = False

    @property
    def bar_seconds(self) -> int:
        return int(round(self.bar_minutes * 60))

    @property
    def detection(self) -> DetectionConfig:
        return DetectionConfig(self.alpha, self.window, self.bar_minutes)

    def validate(self) -> None:
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.window < 3:
            raise ConfigError("window must be at least 3")
        if self.bar_seconds % self.grid_seconds:
            raise ConfigError("bar length must be a multiple of the grid interval")
        if self.kde not in ("auto", "kde", "atoms"):
            raise ConfigError(f"kde must be auto, kde or atoms, got {self.kde!r}")
        if self.pooling not in ("asset", "pooled"):
            raise ConfigError(f"pooling must be asset or pooled, got {self.pooling!r}")
        if self.clock not in ("trading", "calendar"):
            raise ConfigError(f"clock must be trading or calendar, got {self.clock!r}")
        if self.bootstrap < 100:
            raise ConfigError("bootstrap needs at least 100 reference sets")
        if self.ensemble is not None and self.ensemble < 1:
            raise ConfigError("ensemble must be positive")
        for p in [*self.ticks, self.announcements, self.calendar]:
            if not Path(p).is_file():
                raise ConfigError(f"missing input file {p}")
        with open(self.announcements) as fh:
            rows = [line for line in fh if line.strip() and not line.startswith("#")]
        if len(rows) < 2:
            raise ConfigError(f"announcement file {self.announcements} has no events")

    def as_dict(self) -> dict:
        d = asdict(self)
        d["ticks"] = [str(p) for p in self.ticks]
        for key in ("announcements", "calendar", "out"):
            d[key] = str(d[key])
        return d


def load_config(path, overrides: dict | None = None) -> RunConfig:
    """Read an INI run configuration; relative paths resolve against its folder."""
    path = Path(path)
    parser = configparser.ConfigParser(inline_comment_prefixes=(";",))
    parser.optionxform = str
    if not path.is_file():
        raise ConfigError(f"config file {path} not found")
    parser.read(path)
    base = path.parent

    def get(section, key, default=None):
        return parser.get(section, key, fallback=default) if parser.has_section(section) else default

    def resolve(p):
        p = Path(p.strip())
        return p if p.is_absolute() else base / p

    ticks = get("data", "ticks")
    ann = get("data", "announcements")
    cal = get("data", "calendar")
    if not ticks or not ann or not cal:
        raise ConfigError("[data] needs ticks, announcements and calendar")
    fmt = TickFormat(
        timestamp=get("format", "timestamp", "timestamp"),
        bid=get("format", "bid", "bid"),
        ask=get("format", "ask", "ask"),
        asset=get("format", "asset", "asset_id") or None,
        asset_id=get("format", "asset_id"),
        delimiter=get("format", "delimiter", ","),
        timezone=get("format", "timezone", "UTC"),
    )
    ensemble = get("reference", "ensemble", "")
    cfg = RunConfig(
        ticks=[resolve(p) for p in ticks.split(",") if p.strip()],
        announcements=resolve(ann),
        calendar=resolve(cal),
        out=resolve(get("run", "out", "out")),
        tick_format=fmt,
        announcement_timezone=get("data", "announcement_timezone"),
        grid_seconds=int(get("detect", "grid_seconds", 10)),
        bar_minutes=float(get("detect", "bar_minutes", 15)),
        alpha=float(get("detect", "alpha", 0.01)),
        window=int(get("detect", "window", 156)),
        kde=get("reference", "kde", "auto"),
        pooling=get("reference", "pooling", "asset"),
        ensemble=int(ensemble) if ensemble else None,
        bootstrap=int(get("reference", "bootstrap", 10_000)),
        seed=int(get("reference", "seed", 20060102)),
        confound_hours=float(get("align", "confound_hours", 6)),
        clock=get("align", "clock", "trading"),
        workers=int(get("run", "workers", 0)),
        write_ensemble=get("run", "write_ensemble", "false").lower() in ("1", "true", "yes"),
    )
    if overrides:
        clean = {k: v for k, v in overrides.items() if v is not None}
        if "out" in clean:
            clean["out"] = Path(clean["out"])
        cfg = replace(cfg, **clean)
    return cfg


def write_config(cfg: RunConfig, path) -> None:
    parser = configparser.ConfigParser()
    parser.optionxform = str
    parser["data"] = {
        "ticks": ", ".join(str(p) for p in cfg.ticks),
        "announcements": str(cfg.announcements),
        "calendar": str(cfg.calendar),
    }
    f = cfg.tick_format
    parser["format"] = {"timestamp": f.timestamp, "bid": f.bid, "ask": f.ask, "asset": f.asset or "", "delimiter": f.delimiter, "timezone": f.timezone}
    parser["detect"] = {"grid_seconds": str(cfg.grid_seconds), "bar_minutes": str(cfg.bar_minutes), "alpha": str(cfg.alpha), "window": str(cfg.window)}
    parser["reference"] = {
        "kde": cfg.kde,
        "pooling": cfg.pooling,
        "ensemble": "" if cfg.ensemble is None else str(cfg.ensemble),
        "bootstrap": str(cfg.bootstrap),
        "seed": str(cfg.seed),
    }
    parser["align"] = {"confound_hours": str(cfg.confound_hours), "clock": cfg.clock}
    parser["run"] = {"out": str(cfg.out), "workers": str(cfg.workers)}
    with open(path, "w") as fh:
        parser.write(fh)


# ---------------------------------------------------------------------------
# analysis core (in memory)


def trading_days_from_returns(returns: dict, calendar: SessionCalendar) -> dict[str, np.ndarray]:
    dates = np.array(calendar.dates, dtype="datetime64[D]")
    return {a: dates[np.unique(rs.session)] for a, rs in returns.items()}


def reference_distances(
    counts: dict[str, int],
    trading_days: dict[str, np.ndarray],
    dists: dict,
    jumpsets: dict[str, JumpSet],
    clock: TradingClock,
    copies: range,
    base_seed: int,
) -> pd.DataFrame:
    """Waiting times and nearest-jump sizes for a run of reference copies."""
    times: dict[str, list] = {a: [] for a in counts}
    ids: dict[str, list] = {a: [] for a in counts}
    for m in copies:
        sample = generate_reference_sample(counts, trading_days, dists, child_seed(base_seed, m))
        for asset, t in sample.times.items():
            times[asset].append(t)
            ids[asset].append(np.full(len(t), m, dtype=np.int64))
    parts = []
    for asset in sorted(counts):
        if not times[asset]:
            continue
        t = np.concatenate(times[asset])
        js = jumpsets.get(asset) or JumpSet.empty(asset)
        fwd, fi = forward_hours(t, js, clock)
        bwd, bi = backward_hours(t, js, clock)
        size = js.statistic if len(js) else np.array([np.nan])
        parts.append(
            pd.DataFrame(
                {
                    "copy": np.concatenate(ids[asset]),
                    "asset_id": asset,
                    "forward": fwd,
                    "backward": bwd,
                    "forward_L": np.where(fi >= 0, size[np.clip(fi, 0, len(size) - 1)], np.nan),
                    "backward_L": np.where(bi >= 0, size[np.clip(bi, 0, len(size) - 1)], np.nan),
                }
            )
        )
    if not parts:
        return pd.DataFrame(columns=["copy", "asset_id", "forward", "backward", "forward_L", "backward_L"])
    return pd.concat(parts, ignore_index=True)


def bootstrap_statistics(counts, trading_days, dists, jumpsets, clock, B: int, base_seed: int, chunk: int = 500) -> pd.DataFrame:
    """Per reference set: median and mean forward/backward waiting time."""
    frames = []
    for lo in range(0, B, chunk):
        ref = reference_distances(counts, trading_days, dists, jumpsets, clock, range(lo, min(B, lo + chunk)), base_seed)
        g = ref.groupby("copy")[["forward", "backward"]]
        stats = pd.concat([g.median().add_suffix("_median"), g.mean().add_suffix("_mean")], axis=1)
        frames.append(stats.reindex(range(lo, min(B, lo + chunk))))
    return pd.concat(frames)


@dataclass
class EventAnalysis:
    waiting: pd.DataFrame
    reference: pd.DataFrame
    boot: pd.DataFrame
    rows: list[dict]
    size_rows: list[dict]
    seeds: dict


def _finite(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return x[np.isfinite(x)]


def _welch(x, y) -> tuple[float, float, bool]:
    x, y = _finite(x), _finite(y)
    if len(x) < 2 or len(y) < 2:
        return float("nan"), float("nan"), True
    r = welch_u(x, y)
    return r.p_left, r.p_right, r.degenerate


def analyze_events(
    events: pd.DataFrame,
    jumpsets: dict[str, JumpSet],
    trading_days: dict[str, np.ndarray],
    clock: TradingClock,
    *,
    kde: str = "auto",
    pooling: str = "asset",
    copies: int | None = None,
    bootstrap: int = 10_000,
    seed: int = 0,
    label: str = "all",
) -> EventAnalysis:
    """Empirical vs reference waiting times and jump sizes for one event set.

    The Welch ensemble has ``copies`` reference samples (default: the number
    of events, so the reference holds n**2 draws); the bootstrap uses
    ``bootstrap`` reference sets of the empirical size.
    """
    events = events_frame(events)
    events = events[events["asset_id"].isin(list(trading_days))]
    n = len(events)
    if n == 0:
        raise ConfigError(f"no events with price data in set {label!r}")
    counts = events.groupby("asset_id").size().to_dict()
    dists = fit_distributions(events, kde, pooling)
    copies = n if copies is None else copies
    welch_seed, boot_seed = child_seed(seed, 0), child_seed(seed, 1)

    emp = waiting_times(events, jumpsets, clock)
    ref = reference_distances(counts, trading_days, dists, jumpsets, clock, range(copies), welch_seed)
    boot = bootstrap_statistics(counts, trading_days, dists, jumpsets, clock, bootstrap, boot_seed)

    rows, size_rows = [], []
    for direction in ("forward", "backward"):
        e = emp[emp["direction"] == direction]
        d = _finite(e["hours"])
        r = _finite(ref[direction])
        size_e = _finite(e["matched_L"])
        size_r = _finite(ref[f"{direction}_L"])
        med_e = float(np.median(d)) if len(d) else float("nan")
        mean_e = float(np.mean(d)) if len(d) else float("nan")
        bm_l, bm_r = bootstrap_counts(med_e, boot[f"{direction}_median"])
        ba_l, ba_r = bootstrap_counts(mean_e, boot[f"{direction}_mean"])
        w_l, w_r, flagged = _welch(d, r)
        rows.append(
            {
                "class": label,
                "direction": direction,
                "n_events": n,
                "n_censored": int(e["censored"].sum()),
                "median_d": med_e,
                "median_ref": float(np.median(r)) if len(r) else float("nan"),
                "boot_median_p_left": bm_l,
                "boot_median_p_right": bm_r,
                "mean_d": mean_e,
                "mean_ref": float(np.mean(r)) if len(r) else float("nan"),
                "boot_mean_p_left": ba_l,
                "boot_mean_p_right": ba_r,
                "welch_p_left": w_l,
                "welch_p_right": w_r,
                "n_reference": len(r),
                "ensemble_copies": copies,
                "bootstrap_sets": bootstrap,
                "degenerate": flagged,
            }
        )
        s_l, s_r, s_flag = _welch(size_e, size_r)
        size_rows.append(
            {
                "class": label,
                "direction": direction,
                "n": len(size_e),
                "mean_L": float(np.mean(size_e)) if len(size_e) else float("nan"),
                "mean_ref_L": float(np.mean(size_r)) if len(size_r) else float("nan"),
                "median_L": float(np.median(size_e)) if len(size_e) else float("nan"),
                "median_ref_L": float(np.median(size_r)) if len(size_r) else float("nan"),
                "welch_p_left": s_l,
                "welch_p_right": s_r,
                "n_reference": len(size_r),
                "degenerate": s_flag,
            }
        )
    seeds = {"set_seed": seed, "welch_base_seed": welch_seed, "bootstrap_base_seed": boot_seed, "copies": copies, "bootstrap": bootstrap}
    return EventAnalysis(emp, ref, boot, rows, size_rows, seeds)


def set_seed(base_seed: int, subset: str, label: str) -> int:
    return child_seed(base_seed, zlib.crc32(f"{subset}/{label}".encode()))


def summarize_jump_seasonality(jumpsets: dict[str, JumpSet] | JumpSet, calendar: SessionCalendar, bucket_minutes: int = 30) -> pd.DataFrame:
    """Counts and shares of detected jumps per half-hour of the session."""
    if isinstance(jumpsets, JumpSet):
        jumpsets = {jumpsets.asset_id: jumpsets}
    starts = np.concatenate([js.starts for js in jumpsets.values()]) if jumpsets else np.array([], "datetime64[ns]")
    if len(starts) == 0:
        raise ValueError("no jumps to summarise")
    secs = (starts.astype(np.int64) % NS_PER_DAY) // 1_000_000_000 - calendar.open_seconds
    width = bucket_minutes * 60
    n_buckets = -(-calendar.session_seconds // width)
    bucket = np.clip(secs // width, 0, n_buckets - 1)
    counts = np.bincount(bucket, minlength=n_buckets)

    def clock(s):
        s = calendar.open_seconds + s
        return f"{s // 3600:02d}:{s % 3600 // 60:02d}"

    return pd.DataFrame(
        {
            "bucket_start": [clock(i * width) for i in range(n_buckets)],
            "bucket_end": [clock(min((i + 1) * width, calendar.session_seconds)) for i in range(n_buckets)],
            "count": counts,
            "share": counts / counts.sum(),
        }
    )


# ---------------------------------------------------------------------------
# stages (file based)


def _workers(cfg: RunConfig) -> int:
    return cfg.workers if cfg.workers > 0 else (os.cpu_count() or 1)


def _map(cfg: RunConfig, fn, items):
    items = list(items)
    if _workers(cfg) == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=_workers(cfg)) as pool:
        return list(pool.map(fn, items))


def stage_ingest(cfg: RunConfig, calendar: SessionCalendar) -> dict:
    out = ensure_dir(cfg.out)
    frames, reports = [], []
    for path in cfg.ticks:
        ticks, rep = parse_ticks(path, cfg.tick_format)
        frames.append(ticks)
        reports.append((path, rep))
    ticks = sort_ticks(pd.concat(frames, ignore_index=True))

    def per_asset(item):
        asset, grp = item
        cleaned = clean_ticks(grp, calendar)
        qs = resample(cleaned, cfg.grid_seconds, calendar)
        return asset, cleaned.attrs["dropped"], len(grp), qs

    results = _map(cfg, per_asset, list(ticks.groupby("asset", sort=True)))
    series = [qs for *_, qs in results if len(qs)]
    returns = [log_returns(qs, cfg.bar_seconds) for qs in series]
    write_returns(returns, out / "returns.csv")
    freqs = [f for f in SIGNATURE_FREQUENCIES if f % cfg.grid_seconds == 0] or [cfg.bar_seconds]
    if series:
        signature_curves(series, freqs).to_csv(out / "signature.csv", index=False)

    counts = {"parsed_rows": sum(r.rows for _, r in reports), "rejected_rows": sum(r.rejected for _, r in reports), "assets": {}}
    with open(out / "ingest_log.txt", "w") as fh:
        for path, rep in reports:
            fh.write(f"# {Path(path).name}: {rep.rows} rows, {rep.rejected} rejected\n")
            for line, reason in rep.reasons:
                fh.write(f"{Path(path).name}:{line}\t{reason}\n")
        for asset, dropped, n_in, qs in results:
            fh.write(f"{asset}\tticks={n_in}\t" + "\t".join(f"{k}={v}" for k, v in dropped.items()) + f"\tgrid_points={len(qs)}\n")
            counts["assets"][asset] = {"ticks": n_in, "dropped": dropped, "grid_points": len(qs)}
    return counts


def stage_detect(cfg: RunConfig) -> dict:
    out = Path(cfg.out)
    returns = read_returns(out / "returns.csv")
    detection = cfg.detection
    results = _map(cfg, lambda rs: detect_jumps(rs, detection), [returns[a] for a in sorted(returns)])
    jumpsets = {js.asset_id: js for js in results}
    write_jumps(jumpsets, out / "jumps.csv")
    return {a: {"bars": len(returns[a]), "tested": js.n_tested, "threshold": js.threshold, "jumps": len(js)} for a, js in jumpsets.items()}


def _event_sets(cfg: RunConfig, events: pd.DataFrame) -> dict[str, pd.DataFrame]:
    sets = {"all": events}
    if cfg.confound_hours > 0:
        sets["filtered"] = filter_confounded(events, cfg.confound_hours)
    return sets


def _load_events(cfg: RunConfig, calendar: SessionCalendar) -> pd.DataFrame:
    return read_announcements(cfg.announcements, cfg.announcement_timezone or calendar.timezone)


def stage_align(cfg: RunConfig, calendar: SessionCalendar) -> dict:
    out = Path(cfg.out)
    jumpsets = read_jumps(out / "jumps.csv")
    clock = TradingClock(calendar, cfg.bar_seconds, cfg.clock)
    events = _load_events(cfg, calendar)
    info = {}
    for subset, ev in _event_sets(cfg, events).items():
        wt = waiting_times(ev, jumpsets, clock)
        name = "waiting_times.csv" if subset == "all" else f"waiting_times_{subset}.csv"
        write_waiting_times(wt, out / name)
        info[subset] = {
            "events": len(ev),
            "censored_forward": int(wt[(wt.direction == "forward")]["censored"].sum()),
            "censored_backward": int(wt[(wt.direction == "backward")]["censored"].sum()),
        }
    info["dropped_confounded"] = len(events) - info.get("filtered", {"events": len(events)})["events"]
    return info


def _classes(ev: pd.DataFrame) -> list[str]:
    return sorted(ev["class"].unique())


def stage_reference(cfg: RunConfig, calendar: SessionCalendar) -> dict:
    out = Path(cfg.out)
    returns = read_returns(out / "returns.csv")
    days = trading_days_from_returns(returns, calendar)
    events = _load_events(cfg, calendar)
    meta = {"derivation": SEED_DERIVATION, "base_seed": cfg.seed, "sets": []}
    ensure_dir(out / "reference")
    for subset, ev in _event_sets(cfg, events).items():
        for label in _classes(ev):
            sub = ev[(ev["class"] == label) & ev["asset_id"].isin(list(days))]
            if sub.empty:
                continue
            counts = sub.groupby("asset_id").size().to_dict()
            dists = fit_distributions(sub, cfg.kde, cfg.pooling)
            s = set_seed(cfg.seed, subset, label)
            welch_seed = child_seed(s, 0)
            copies = cfg.ensemble or len(sub)
            first = generate_reference_sample(counts, days, dists, child_seed(welch_seed, 0))
            safe = "".join(ch if ch.isalnum() else "_" for ch in label)
            write_reference_sample(first, out / "reference" / f"{subset}_{safe}.csv", label, 0, welch_seed)
            if cfg.write_ensemble:
                for m in range(1, copies):
                    smp = generate_reference_sample(counts, days, dists, child_seed(welch_seed, m))
                    write_reference_sample(smp, out / "reference" / f"{subset}_{safe}_{m}.csv", label, m, welch_seed)
            meta["sets"].append(
                {
                    "subset": subset,
                    "class": label,
                    "counts": {k: int(v) for k, v in sorted(counts.items())},
                    "set_seed": s,
                    "welch_base_seed": welch_seed,
                    "bootstrap_base_seed": child_seed(s, 1),
                    "ensemble_copies": copies,
                    "bootstrap_sets": cfg.bootstrap,
                    "distribution": {
                        a: {"mode": d.mode, "bandwidth": d.bandwidth, "atoms": None if d.atoms is None else len(d.atoms)}
                        for a, d in sorted(dists.items())
                    },
                }
            )
    with open(out / "reference_meta.json", "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
    return {"sets": len(meta["sets"])}


def stage_test(cfg: RunConfig, calendar: SessionCalendar) -> dict:
    out = Path(cfg.out)
    returns = read_returns(out / "returns.csv")
    days = trading_days_from_returns(returns, calendar)
    jumpsets = read_jumps(out / "jumps.csv")
    clock = TradingClock(calendar, cfg.bar_seconds, cfg.clock)
    events = _load_events(cfg, calendar)
    rows, size_rows, info = [], [], {"no_price_data": int((~events["asset_id"].isin(list(days))).sum())}
    for subset, ev in _event_sets(cfg, events).items():
        for label in _classes(ev):
            sub = ev[(ev["class"] == label) & ev["asset_id"].isin(list(days))]
            if sub.empty:
                continue
            res = analyze_events(
                sub, jumpsets, days, clock, kde=cfg.kde, pooling=cfg.pooling, copies=cfg.ensemble,
                bootstrap=cfg.bootstrap, seed=set_seed(cfg.seed, subset, label), label=label,
            )
            for r in res.rows:
                rows.append({"subset": subset, "venue": calendar.venue, **r})
            for r in res.size_rows:
                size_rows.append({"subset": subset, "venue": calendar.venue, **r})
    pd.DataFrame(rows).to_csv(out / "results_waiting.csv", index=False)
    pd.DataFrame(size_rows).to_csv(out / "results_sizes.csv", index=False)
    info["result_rows"] = len(rows)
    return info


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def stage_report(cfg: RunConfig, calendar: SessionCalendar, counts: dict | None = None) -> dict:
    out = Path(cfg.out)
    jumpsets = read_jumps(out / "jumps.csv")
    if any(len(js) for js in jumpsets.values()):
        summarize_jump_seasonality(jumpsets, calendar).to_csv(out / "jump_seasonality.csv", index=False)
    outputs = {
        str(p.relative_to(out)): _sha256(p)
        for p in sorted(out.rglob("*"))
        if p.is_file() and p.name != "manifest.json"
    }
    manifest = {
        "package": "newsjumps",
        "version": __version__,
        "config": cfg.as_dict(),
        "seed_derivation": SEED_DERIVATION,
        "decisions": DECISIONS,
        "counts": counts or {},
        "outputs": outputs,
    }
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True, default=str)
    return {"outputs": len(outputs)}


def run_pipeline(cfg: RunConfig, stages=STAGES) -> dict:
    """Run the given stages in order; failures raise :class:`StageError`."""
    try:
        cfg.validate()
        calendar = load_calendar(cfg.calendar)
    except Exception as exc:  # noqa: BLE001
        raise StageError("config", exc) from exc
    ensure_dir(cfg.out)
    counts = {}
    runners = {
        "ingest": lambda: stage_ingest(cfg, calendar),
        "detect": lambda: stage_detect(cfg),
        "align": lambda: stage_align(cfg, calendar),
        "reference": lambda: stage_reference(cfg, calendar),
        "test": lambda: stage_test(cfg, calendar),
        "report": lambda: stage_report(cfg, calendar, counts),
    }
    for stage in stages:
        log.info("running stage %s", stage)
        try:
            counts[stage] = runners[stage]()
        except Exception as exc:  # noqa: BLE001
            raise StageError(stage, exc) from exc
    return counts
