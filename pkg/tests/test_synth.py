import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from newsjumps.ingest import log_returns
from newsjumps.jumps import DetectionConfig
from newsjumps.reference import IntradayDistribution
from newsjumps.synth import (
    AnnouncementSpec,
    JumpDiffusionParams,
    StochasticVol,
    evaluate_detector,
    path_to_ticks,
    simulate_path,
)


def test_pure_diffusion_variance():
    p = JumpDiffusionParams(sigma=0.25)
    path = simulate_path(p, 400, 34, seed=1)
    r = log_returns(path.series, 900).returns
    dt_year = 1 / (252 * 34)
    assert r.var() == pytest.approx(0.25**2 * dt_year, rel=0.03)
    assert len(path.jump_starts) == 0


def test_expected_jump_count_at_low_rate():
    counts = [len(simulate_path(JumpDiffusionParams(jump_intensity=0.12), 977, 34, seed=s).jump_starts) for s in range(30)]
    # Poisson(117.24) averaged over 30 paths: sd of the mean is about 2
    assert np.mean(counts) == pytest.approx(0.12 * 977, abs=6)


def test_forced_trigger_colocates():
    spec = AnnouncementSpec(count=50, trigger_prob=1.0, lag_probs=(1.0,), intraday=IntradayDistribution.from_atoms([10.25 / 24]))
    path = simulate_path(JumpDiffusionParams(announcements=spec, jump_mean=8, jump_std=0), 200, 34, seed=2)
    assert path.triggered.all()
    ends = path.jump_starts + np.timedelta64(900, "s")
    for t in path.announcements["time"].to_numpy():
        assert np.any((path.jump_starts <= t) & (ends > t))


def test_lag_shifts_by_bars():
    spec = AnnouncementSpec(count=30, trigger_prob=1.0, lag_probs=(0.0, 0.0, 1.0), intraday=IntradayDistribution.from_atoms([11 / 24]))
    path = simulate_path(JumpDiffusionParams(announcements=spec), 100, 34, seed=3)
    for t in path.announcements["time"].to_numpy():
        assert np.any(path.jump_starts == t + np.timedelta64(1800, "s"))


def test_open_clustering_share():
    # sparse enough that two jumps rarely share one of the two opening bars
    p = JumpDiffusionParams(jump_intensity=0.2, jump_open_share=0.89)
    path = simulate_path(p, 3000, 34, seed=4)
    tod = (path.jump_starts - path.jump_starts.astype("datetime64[D]")).astype("timedelta64[m]").astype(int)
    share = np.mean(tod < 9 * 60 + 30)
    assert share == pytest.approx(0.89, abs=0.03)


def test_stochastic_vol_runs():
    p = JumpDiffusionParams(stochastic_vol=StochasticVol(v0=0.09))
    path = simulate_path(p, 50, 34, seed=5)
    assert (path.series.mid > 0).all()


def test_parameter_validation():
    with pytest.raises(ValueError):
        JumpDiffusionParams(sigma=0)
    with pytest.raises(ValueError):
        JumpDiffusionParams(jump_intensity=-1)
    with pytest.raises(ValueError):
        AnnouncementSpec(trigger_prob=1.5)
    with pytest.raises(ValueError):
        simulate_path(JumpDiffusionParams(), 0, 34, seed=0)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**63), st.floats(0.0, 2.0), st.floats(0.0, 1.0))
def test_seed_determinism_and_grid(seed, lam, trig):
    spec = AnnouncementSpec(count=10, trigger_prob=trig)
    p = JumpDiffusionParams(jump_intensity=lam, announcements=spec, noise_std=0.01)
    a = simulate_path(p, 8, 34, seed)
    b = simulate_path(p, 8, 34, seed)
    assert np.array_equal(a.series.mid, b.series.mid) and np.array_equal(a.jump_starts, b.jump_starts)
    assert (a.series.mid > 0).all()
    assert np.isin(a.jump_starts, a.series.times).all()


def test_ticks_layout():
    path = simulate_path(JumpDiffusionParams(), 2, 34, seed=6)
    ticks = path_to_ticks(path)
    assert list(ticks.columns) == ["asset_id", "timestamp", "bid", "ask"]
    assert len(ticks) == 2 * 35 and (ticks.ask > ticks.bid).all()


def test_evaluate_detector_no_jumps_and_alpha_zero():
    path = simulate_path(JumpDiffusionParams(jump_intensity=0.5, jump_mean=10, jump_std=0, jump_random_sign=True), 300, 34, seed=7)
    ev = evaluate_detector(path, DetectionConfig(alpha=0.0))
    assert ev.n_detected == 0 and ev.tpr == 0.0
    ev = evaluate_detector(path, DetectionConfig())
    assert ev.tpr > 0.9 and ev.days == 300
    assert math.isfinite(ev.size)
