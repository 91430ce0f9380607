import datetime as dt
import json

import numpy as np
import pandas as pd
import pytest

from newsjumps.align import TradingClock
from newsjumps.calendar import SessionCalendar
from newsjumps.cli import main, write_synthetic_dataset
from newsjumps.errors import ConfigError
from newsjumps.ingest import log_returns
from newsjumps.io import read_jumps
from newsjumps.jumps import JumpSet, detect_jumps
from newsjumps.pipeline import (
    EXIT_CODES,
    StageError,
    analyze_events,
    load_config,
    run_pipeline,
    summarize_jump_seasonality,
)
from newsjumps.reference import IntradayDistribution
from newsjumps.synth import AnnouncementSpec, JumpDiffusionParams, simulate_path


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    root = tmp_path_factory.mktemp("syn")
    cfg = write_synthetic_dataset(root, seed=3, assets=2, days=120, announcements=40, bootstrap=300)
    return cfg


def test_all_stage_outputs(dataset, tmp_path):
    out = tmp_path / "run"
    assert main(["all", "--config", str(dataset), "--out", str(out)]) == 0
    for name in ("returns.csv", "signature.csv", "ingest_log.txt", "jumps.csv", "waiting_times.csv", "waiting_times_filtered.csv",
                 "reference_meta.json", "results_waiting.csv", "results_sizes.csv", "jump_seasonality.csv", "manifest.json"):
        assert (out / name).is_file(), name
    res = pd.read_csv(out / "results_waiting.csv")
    assert set(res.direction) == {"forward", "backward"} and set(res.subset) == {"all", "filtered"}
    for col in ("median_d", "median_ref", "boot_median_p_left", "boot_median_p_right", "mean_d", "mean_ref", "welch_p_left", "welch_p_right"):
        assert col in res.columns
    assert res.filter(like="_p_").apply(lambda c: c.between(0, 1)).all().all()
    sizes = pd.read_csv(out / "results_sizes.csv")
    assert {"mean_L", "mean_ref_L", "welch_p_right"} <= set(sizes.columns)
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["seed"] == 3 and "splitmix64" in manifest["seed_derivation"]
    assert "jumps.csv" in manifest["outputs"] and manifest["decisions"]
    # every announcement row is accounted for
    n_events = len(pd.read_csv(dataset.parent / "announcements.csv"))
    wt = pd.read_csv(out / "waiting_times.csv")
    assert len(wt) == 2 * n_events
    assert res[res.subset == "all"].n_events.sum() == 2 * n_events
    counts = manifest["counts"]["ingest"]["assets"]
    assert set(counts) == {"SYN1", "SYN2"} and all("dropped" in v for v in counts.values())


def _jump_count(config_path, alpha, out):
    c = load_config(config_path, {"alpha": alpha, "out": str(out)})
    run_pipeline(c, ("ingest", "detect"))
    return sum(len(js) for js in read_jumps(c.out / "jumps.csv").values())


def test_alpha_monotone(dataset, tmp_path):
    assert load_config(dataset).alpha == 0.01
    assert _jump_count(dataset, 0.05, tmp_path / "a") >= _jump_count(dataset, 0.01, tmp_path / "b")
    # with jumps near the threshold the larger level finds strictly more
    marginal = write_synthetic_dataset(tmp_path / "m", seed=4, days=120, jump_size=5.5)
    assert _jump_count(marginal, 0.05, tmp_path / "c") > _jump_count(marginal, 0.01, tmp_path / "d")


def test_empty_announcements_rejected_before_compute(dataset, tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text("asset_id,timestamp,class,source_id\n")
    cfg = load_config(dataset, {"out": str(tmp_path / "never")})
    cfg.announcements = empty
    with pytest.raises(StageError) as info:
        run_pipeline(cfg)
    assert info.value.stage == "config" and isinstance(info.value.cause, ConfigError)
    assert not (tmp_path / "never").exists()


def test_cli_exit_codes(dataset, tmp_path):
    assert main(["all", "--config", str(tmp_path / "missing.ini")]) == EXIT_CODES["config"]
    assert main(["all", "--config", str(dataset), "--alpha", "1.5", "--out", str(tmp_path / "x")]) == EXIT_CODES["config"]
    # detect before ingest has no returns to read
    assert main(["detect", "--config", str(dataset), "--out", str(tmp_path / "fresh")]) == EXIT_CODES["detect"]
    codes = [EXIT_CODES[s] for s in ("config", "ingest", "detect", "align", "reference", "test", "report", "synth")]
    assert len(set(codes)) == len(codes) and 0 not in codes


def test_stage_by_stage_equals_all(dataset, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    main(["all", "--config", str(dataset), "--out", str(a), "--bootstrap", "200"])
    for stage in ("ingest", "detect", "align", "reference", "test"):
        assert main([stage, "--config", str(dataset), "--out", str(b), "--bootstrap", "200"]) == 0
    for name in ("jumps.csv", "waiting_times.csv", "results_waiting.csv", "results_sizes.csv", "reference_meta.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_worker_count_does_not_change_results(dataset, tmp_path):
    a, b = tmp_path / "w1", tmp_path / "w4"
    main(["all", "--config", str(dataset), "--out", str(a), "--bootstrap", "200", "--workers", "1"])
    main(["all", "--config", str(dataset), "--out", str(b), "--bootstrap", "200", "--workers", "4"])
    files = sorted(p.relative_to(a) for p in a.rglob("*") if p.is_file() and p.name != "manifest.json")
    assert len(files) >= 10
    assert all((a / f).read_bytes() == (b / f).read_bytes() for f in files)


def test_kde_flag_switches_mode(dataset, tmp_path):
    out = tmp_path / "k"
    main(["all", "--config", str(dataset), "--out", str(out), "--kde", "atoms", "--bootstrap", "200", "--ensemble", "5"])
    meta = json.loads((out / "reference_meta.json").read_text())
    assert all(d["mode"] == "atoms" for s in meta["sets"] for d in s["distribution"].values())
    assert all(s["ensemble_copies"] == 5 for s in meta["sets"])


def test_manifest_rebuild_is_identical(dataset, tmp_path):
    out = tmp_path / "r"
    main(["all", "--config", str(dataset), "--out", str(out), "--bootstrap", "200"])
    first = (out / "manifest.json").read_bytes()
    main(["report", "--config", str(dataset), "--out", str(out), "--bootstrap", "200"])
    # counts are only gathered by 'all'; outputs and their hashes must agree
    a = json.loads(first)["outputs"]
    b = json.loads((out / "manifest.json").read_text())["outputs"]
    assert a == b


# -- seasonality summary -----------------------------------------------------

CAL = SessionCalendar("X", dt.time(9, 30), dt.time(16, 0), tuple(dt.date(2024, 1, 1) + dt.timedelta(days=i) for i in range(30)))


def _js(starts):
    s = np.sort(np.asarray(starts, dtype="datetime64[ns]"))
    return JumpSet("A", s, s + np.timedelta64(900, "s"), np.full(len(s), 7.0), np.ones(len(s), np.int64), np.ones(len(s)))


def test_all_jumps_at_open():
    tab = summarize_jump_seasonality(_js(CAL.opens[:10]), CAL)
    assert tab.share.iloc[0] == 1.0 and len(tab) == 13
    assert tab.bucket_start.iloc[0] == "09:30" and tab.bucket_end.iloc[-1] == "16:00"


def test_open_clustered_jumps_share():
    p = JumpDiffusionParams(jump_intensity=0.2, jump_open_share=0.89)
    path = simulate_path(p, 3000, 26, seed=9)
    cal = path.calendar
    tab = summarize_jump_seasonality(_js(path.jump_starts), cal)
    assert tab.share.iloc[0] == pytest.approx(0.89, abs=0.03)


def test_uniform_jumps_flat():
    rng = np.random.default_rng(1)
    bars = rng.integers(0, 26, 5000)
    days = rng.integers(0, 30, 5000)
    starts = np.unique(CAL.opens[days] + bars * np.timedelta64(900, "s"))
    tab = summarize_jump_seasonality(_js(starts), CAL)
    assert tab.share.max() / tab.share.min() < 1.3


def test_empty_jumps_raise():
    with pytest.raises(ValueError):
        summarize_jump_seasonality(_js([]), CAL)


# -- analysis core -----------------------------------------------------------


@pytest.mark.parametrize("lag", [1, 2, 3])
def test_forward_median_equals_lag_bars(lag):
    spec = AnnouncementSpec(count=300, trigger_prob=1.0, lag_probs=tuple(float(k == lag) for k in range(lag + 1)),
                            intraday=IntradayDistribution.from_atoms([10 / 24, 13 / 24]))
    path = simulate_path(JumpDiffusionParams(announcements=spec, jump_mean=10, jump_std=0, jump_random_sign=True), 400, 34, seed=lag)
    rs = log_returns(path.series, 900)
    js = {"SYN": detect_jumps(rs)}
    clock = TradingClock(path.calendar, 900)
    days = {"SYN": np.array(path.calendar.dates, dtype="datetime64[D]")}
    res = analyze_events(path.announcements, js, days, clock, copies=20, bootstrap=200, seed=1)
    fwd = res.rows[0]
    assert fwd["direction"] == "forward" and fwd["median_d"] == lag * 0.25
    assert fwd["welch_p_left"] < 1e-6 and fwd["boot_median_p_left"] == 0.0
