"""Command-line entry point: ``newsjumps <stage> --config run.ini``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import pandas as pd

from .calendar import write_calendar
from .errors import ConfigError
from .io import ensure_dir, write_announcements
from .ingest import TickFormat
from .pipeline import EXIT_CODES, STAGES, RunConfig, StageError, load_config, run_pipeline, write_config
from .reference import IntradayDistribution, child_seed
from .synth import AnnouncementSpec, JumpDiffusionParams, path_to_ticks, simulate_path, synthetic_calendar

log = logging.getLogger("newsjumps")

# clock times of the synthetic releases (one pre-open, two in session)
SYNTH_RELEASE_TIMES = ("08:30", "10:00", "14:00")


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", required=True, help="INI run configuration")
    p.add_argument("--seed", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--bar-minutes", type=float, dest="bar_minutes")
    p.add_argument("--kde", choices=["auto", "atoms"])
    p.add_argument("--ensemble", type=int, help="reference copies for the Welch test (default: number of events)")
    p.add_argument("--bootstrap", type=int, help="reference sets for bootstrap p-values")
    p.add_argument("--out", help="output directory")
    p.add_argument("--workers", type=int, help="threads for per-asset work (default: all cores)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="newsjumps", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in (*STAGES, "all"):
        _add_run_flags(sub.add_parser(name, help=f"run the {name} stage" if name != "all" else "run every stage"))

    s = sub.add_parser("synth", help="write a synthetic tick/announcement data set with a run config")
    s.add_argument("--out", required=True)
    s.add_argument("--seed", type=int, default=7)
    s.add_argument("--assets", type=int, default=2)
    s.add_argument("--days", type=int, default=250)
    s.add_argument("--bars-per-day", type=int, default=34, dest="bars_per_day")
    s.add_argument("--bar-minutes", type=float, default=15.0, dest="bar_minutes")
    s.add_argument("--announcements", type=int, default=60, help="announcements per asset")
    s.add_argument("--trigger-prob", type=float, default=0.8, dest="trigger_prob")
    s.add_argument("--lag", type=int, default=1, help="bars between release and triggered jump")
    s.add_argument("--jump-intensity", type=float, default=0.12, dest="jump_intensity", help="baseline jumps per day")
    s.add_argument("--jump-size", type=float, default=8.0, dest="jump_size", help="jump size in bar standard deviations")
    s.add_argument("--bootstrap", type=int, default=10_000)
    return parser


def write_synthetic_dataset(
    out,
    seed: int = 7,
    assets: int = 2,
    days: int = 250,
    bars_per_day: int = 34,
    bar_seconds: int = 900,
    announcements: int = 60,
    trigger_prob: float = 0.8,
    lag: int = 1,
    jump_intensity: float = 0.12,
    jump_size: float = 8.0,
    bootstrap: int = 10_000,
    release_times=SYNTH_RELEASE_TIMES,
) -> Path:
    """Simulate prices and releases for a few assets and write a runnable data set.

    Returns the path of the generated ``config.ini``.
    """
    out = ensure_dir(out)
    cal = synthetic_calendar(days, bars_per_day, bar_seconds)
    fracs = [(int(h) * 3600 + int(m) * 60) / 86400 for h, m in (t.split(":") for t in release_times)]
    spec = AnnouncementSpec(
        count=announcements,
        intraday=IntradayDistribution.from_atoms(fracs),
        trigger_prob=trigger_prob,
        lag_probs=tuple(float(k == lag) for k in range(lag + 1)),
    )
    params = JumpDiffusionParams(jump_intensity=jump_intensity, jump_mean=jump_size, jump_std=0.0, jump_random_sign=True, announcements=spec)
    ticks, events = [], []
    for i in range(assets):
        asset = f"SYN{i + 1}"
        path = simulate_path(params, days, bars_per_day, child_seed(seed, i), bar_seconds, asset, cal)
        ticks.append(path_to_ticks(path))
        events.append(path.announcements)
    pd.concat(ticks, ignore_index=True).to_csv(out / "ticks.csv", index=False)
    write_announcements(pd.concat(events, ignore_index=True), out / "announcements.csv")
    write_calendar(cal, out / "calendar.ini")
    cfg = RunConfig(
        ticks=[Path("ticks.csv")],
        announcements=Path("announcements.csv"),
        calendar=Path("calendar.ini"),
        out=Path("results"),
        tick_format=TickFormat(),
        grid_seconds=bar_seconds,
        bar_minutes=bar_seconds / 60,
        bootstrap=bootstrap,
        seed=seed,
    )
    write_config(cfg, out / "config.ini")
    return out / "config.ini"


def _overrides(args) -> dict:
    keys = ("seed", "alpha", "bar_minutes", "kde", "ensemble", "bootstrap", "out", "workers")
    return {k: getattr(args, k) for k in keys if getattr(args, k, None) is not None}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    if args.command == "synth":
        try:
            cfg_path = write_synthetic_dataset(
                args.out, args.seed, args.assets, args.days, args.bars_per_day, int(round(args.bar_minutes * 60)),
                args.announcements, args.trigger_prob, args.lag, args.jump_intensity, args.jump_size, args.bootstrap,
            )
        except Exception as exc:  # noqa: BLE001
            print(f"newsjumps: synth failed: {exc}", file=sys.stderr)
            return EXIT_CODES["synth"]
        print(cfg_path)
        return 0
    try:
        cfg = load_config(args.config, _overrides(args))
    except (ConfigError, ValueError, TypeError) as exc:
        print(f"newsjumps: config error: {exc}", file=sys.stderr)
        return EXIT_CODES["config"]
    stages = STAGES if args.command == "all" else (args.command,)
    try:
        run_pipeline(cfg, stages)
    except StageError as exc:
        print(f"newsjumps: {exc}", file=sys.stderr)
        return exc.code
    print(cfg.out)
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
