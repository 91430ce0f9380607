import math
import warnings

import numpy as np
import pandas as pd
import pytest
import scipy.integrate
import scipy.stats
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from newsjumps.errors import DataError
from newsjumps.kde import DegenerateSampleError, MIN_BANDWIDTH, grid_density, kde_bandwidth, reflect_unit, silverman_bandwidth
from newsjumps.reference import (
    IntradayDistribution,
    child_seed,
    day_fraction,
    fit_distributions,
    fit_intraday_distribution,
    generate_reference_ensemble,
    generate_reference_sample,
    splitmix64,
    write_reference_sample,
)


def events_at(times, asset="A"):
    return pd.DataFrame({"asset_id": asset, "time": np.array(times, dtype="datetime64[ns]"), "class": "x", "source_id": ""})


def piecewise_linear_integral(dist: IntradayDistribution) -> float:
    """Exact integral of the linear-interpolated density via 2-point Gauss per piece."""
    g = len(dist.density)
    knots = np.r_[0.0, (np.arange(g) + 0.5) / g, 1.0]
    a, b = knots[:-1], knots[1:]
    mid, half = (a + b) / 2, (b - a) / 2
    node = half / math.sqrt(3)
    return float(np.sum(half * (dist.pdf(mid - node) + dist.pdf(mid + node))))


# -- KDE ---------------------------------------------------------------------


def test_bimodal_bandwidth_below_silverman():
    rng = np.random.default_rng(0)
    x = np.r_[rng.normal(0.3, 0.01, 300), rng.normal(0.7, 0.01, 300)]
    h = kde_bandwidth(x)
    assert h < silverman_bandwidth(x)


def test_uniform_density_roughly_flat():
    rng = np.random.default_rng(1)
    x = rng.uniform(size=1000)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        dist = IntradayDistribution.from_kde(x)
    g = len(dist.density)
    inner = dist.density[int(0.05 * g) : int(0.95 * g)]
    assert inner.max() / inner.min() < 2


def test_density_integrates_to_one():
    rng = np.random.default_rng(2)
    x = np.clip(np.r_[rng.normal(0.4, 0.05, 300), rng.uniform(0, 1, 200)], 0, 1)
    dist = IntradayDistribution.from_kde(x)
    assert abs(piecewise_linear_integral(dist) - 1) < 1e-6
    assert (dist.density >= 0).all()
    # adaptive quadrature on the interpolated density
    quad = sum(scipy.integrate.quad(dist.pdf, lo, lo + 1 / 64, limit=400)[0] for lo in np.arange(64) / 64)
    assert abs(quad - 1) < 1e-6


def test_grid_density_matches_reflected_kernel_sum():
    rng = np.random.default_rng(3)
    x = rng.uniform(0, 1, 40)
    h = 0.05
    dens = grid_density(x, h, grid_size=2**12)
    centres = (np.arange(2**12) + 0.5) / 2**12
    for j in (0, 100, 2047, 4095):
        # binning moves each sample to its bin centre
        xb = (np.minimum((x * 2**12).astype(int), 2**12 - 1) + 0.5) / 2**12
        assert dens[j] == pytest.approx(oracles.reflected_kde(centres[j], xb, h), rel=1e-9)


def test_sampler_follows_fitted_density():
    rng = np.random.default_rng(4)
    x = np.clip(rng.normal(0.1, 0.08, 400), 0, 1)  # mass near the reflecting end
    dist = IntradayDistribution.from_kde(x)
    draws = dist.sample(np.random.default_rng(5), 20_000)
    assert draws.min() >= 0 and draws.max() <= 1
    g = len(dist.density)
    cdf_grid = np.r_[0, np.cumsum(dist.density) / g]
    cdf = lambda q: np.interp(q, np.arange(g + 1) / g, cdf_grid)  # noqa: E731
    assert scipy.stats.kstest(draws, cdf).pvalue > 0.01


@pytest.mark.parametrize(
    "x",
    [
        np.r_[np.full(500, 0.3), np.full(500, 0.35)],
        np.array([0.2, 0.8]),
        np.array([0.0, 1.0, 1.0, 0.0]),
        np.r_[np.full(99, 0.5), 0.5 + 1e-12],
        np.random.default_rng(6).uniform(size=100_000),
        np.random.default_rng(7).beta(0.3, 0.3, 100_000),
    ],
    ids=["two-values", "two-points", "endpoints", "near-identical", "uniform-1e5", "u-shaped-1e5"],
)
def test_bandwidth_never_crashes(x):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        h = kde_bandwidth(x)
        dist = IntradayDistribution.from_kde(x, h)
    assert np.isfinite(h) and h >= MIN_BANDWIDTH
    assert abs(piecewise_linear_integral(dist) - 1) < 1e-6


def test_identical_samples_are_degenerate():
    with pytest.raises(DegenerateSampleError):
        kde_bandwidth(np.full(10, 0.4))


def test_fallback_warns():
    x = np.random.default_rng(1).uniform(size=1000)
    with pytest.warns(RuntimeWarning, match="Silverman"):
        kde_bandwidth(x)


@given(st.lists(st.floats(-5, 5), min_size=1, max_size=50))
def test_reflect_unit_range(v):
    y = reflect_unit(np.array(v))
    assert ((y >= 0) & (y <= 1)).all()
    inside = (np.array(v) >= 0) & (np.array(v) <= 1)
    assert np.allclose(y[inside], np.array(v)[inside])


# -- intraday distributions --------------------------------------------------


def test_single_atom_at_0830():
    times = [np.datetime64(f"2006-01-{d:02d}T08:30") for d in range(2, 12)]
    dist = fit_intraday_distribution(events_at(times), "auto")
    assert dist.mode == "atoms"
    assert dist.atoms.tolist() == [8.5 / 24] and dist.weights.tolist() == [1.0]


def test_two_equal_atoms():
    times = [np.datetime64("2006-01-02T08:30"), np.datetime64("2006-01-03T10:00")] * 3
    dist = fit_intraday_distribution(events_at(times), "atoms")
    assert dist.weights.tolist() == [0.5, 0.5]


def test_auto_mode_choice():
    rng = np.random.default_rng(8)
    t = np.datetime64("2006-01-02", "ns") + rng.integers(0, 86400, 500) * np.timedelta64(1, "s") + np.arange(500) * np.timedelta64(1, "D")
    assert fit_intraday_distribution(events_at(t), "auto").mode == "kde"
    fixed = np.datetime64("2006-01-02T08:30", "ns") + np.arange(40) % 3 * np.timedelta64(90, "m") + np.arange(40) * np.timedelta64(1, "D")
    assert fit_intraday_distribution(events_at(fixed), "auto").mode == "atoms"


def test_kde_mode_500_irregular_integrates():
    rng = np.random.default_rng(9)
    t = np.datetime64("2006-01-02", "ns") + (rng.beta(2, 5, 500) * 86400e9).astype(np.int64).astype("timedelta64[ns]")
    dist = fit_intraday_distribution(events_at(t), "kde")
    assert dist.mode == "kde" and abs(piecewise_linear_integral(dist) - 1) < 1e-6
    assert dist.mass() == pytest.approx(1.0, abs=1e-12)


def test_zero_events_fail():
    with pytest.raises(DataError):
        fit_intraday_distribution(events_at([]))


def test_pooled_vs_asset():
    a = events_at([np.datetime64("2006-01-02T08:30")] * 3, "A")
    b = events_at([np.datetime64("2006-01-02T14:00")] * 3, "B")
    both = pd.concat([a, b])
    per = fit_distributions(both, "auto", "asset")
    pooled = fit_distributions(both, "auto", "pooled")
    assert per["A"].atoms.tolist() == [8.5 / 24] and per["B"].atoms.tolist() == [14 / 24]
    assert pooled["A"] is pooled["B"] and pooled["A"].weights.tolist() == [0.5, 0.5]


# -- reference samples -------------------------------------------------------

ATOM_0830 = IntradayDistribution.from_atoms([8.5 / 24])


def test_zero_count_asset():
    days = {"A": np.array(["2006-01-02"], dtype="datetime64[D]")}
    s = generate_reference_sample({"A": 0}, days, {"A": ATOM_0830}, 1)
    assert len(s.times["A"]) == 0 and s.day_counts["A"].sum() == 0


def test_single_day():
    days = {"A": np.array(["2006-01-02"], dtype="datetime64[D]")}
    s = generate_reference_sample({"A": 5}, days, {"A": ATOM_0830}, 1)
    assert (s.times["A"] == np.datetime64("2006-01-02T08:30", "ns")).all()
    assert s.day_counts["A"].tolist() == [5]


def test_day_assignment_uniform_chi_square():
    days = {"A": np.arange(np.datetime64("2006-01-02"), np.datetime64("2006-01-02") + 977)}
    s = generate_reference_sample({"A": 1000}, days, {"A": ATOM_0830}, 2024)
    t = s.times["A"]
    assert ((t.astype(np.int64) % 86_400_000_000_000) == int(8.5 * 3600e9)).all()
    # bin days into 10 groups so expected counts are large enough
    groups = np.bincount(np.arange(977) * 10 // 977, weights=s.day_counts["A"], minlength=10)
    expected = np.bincount(np.arange(977) * 10 // 977, minlength=10) * 1000 / 977
    assert scipy.stats.chisquare(groups, expected).pvalue > 0.05


def test_no_trading_days_fails():
    with pytest.raises(DataError):
        generate_reference_sample({"A": 2}, {"A": np.array([], "datetime64[D]")}, {"A": ATOM_0830}, 0)


@settings(max_examples=40, deadline=None)
@given(st.dictionaries(st.sampled_from(["A", "B", "C", "D"]), st.integers(0, 40), min_size=1), st.integers(0, 2**63))
def test_counts_preserved_and_deterministic(counts, seed):
    base = np.datetime64("2006-01-02")
    days = {a: base + np.arange(3 + i * 5) for i, a in enumerate(sorted(counts))}
    dists = {a: IntradayDistribution.from_atoms([0.1, 0.6]) for a in counts}
    s1 = generate_reference_sample(counts, days, dists, seed)
    s2 = generate_reference_sample(counts, days, dists, seed)
    for a, n in counts.items():
        assert len(s1.times[a]) == n and s1.day_counts[a].sum() == n
        assert np.array_equal(s1.times[a], s2.times[a])
        frac = day_fraction(s1.times[a])
        assert ((frac >= 0) & (frac <= 1)).all()
        assert np.isin(s1.times[a].astype("datetime64[D]"), days[a]).all()


def test_ensemble_rules():
    days = {"A": np.arange(np.datetime64("2006-01-02"), np.datetime64("2006-02-02"))}
    dists = {"A": IntradayDistribution.from_atoms([0.4, 0.5])}
    one = generate_reference_ensemble({"A": 10}, days, dists, 1, 99)
    direct = generate_reference_sample({"A": 10}, days, dists, child_seed(99, 0))
    assert np.array_equal(one[0].times["A"], direct.times["A"])
    ens = generate_reference_ensemble({"A": 10}, days, dists, 100, 99)
    again = generate_reference_ensemble({"A": 10}, days, dists, 100, 99)
    assert sum(s.count() for s in ens) == 1000
    assert all(np.array_equal(a.times["A"], b.times["A"]) for a, b in zip(ens, again))
    # copies are independent of how many are requested
    assert np.array_equal(generate_reference_ensemble({"A": 10}, days, dists, 5, 99)[4].times["A"], ens[4].times["A"])


def test_ensemble_marginal_converges():
    rng = np.random.default_rng(10)
    frac = np.clip(rng.normal(0.45, 0.1, 300), 0, 1)
    dist = IntradayDistribution.from_kde(frac)
    days = {"A": np.arange(np.datetime64("2006-01-02"), np.datetime64("2006-03-02"))}
    g = len(dist.density)
    cdf_grid = np.r_[0, np.cumsum(dist.density) / g]
    cdf = lambda q: np.interp(q, np.arange(g + 1) / g, cdf_grid)  # noqa: E731
    dists = []
    for copies in (2, 20, 200):
        ens = generate_reference_ensemble({"A": 50}, days, {"A": dist}, copies, 5)
        draws = day_fraction(np.concatenate([s.times["A"] for s in ens]))
        dists.append(scipy.stats.kstest(draws, cdf).statistic)
    assert dists[0] > dists[2] and dists[2] < 0.02


def test_seed_derivation_known_values():
    # splitmix64 reference outputs for state 0 (first draw of the published generator)
    assert splitmix64(0) == 0xE220A8397B1DCDAF
    assert child_seed(1, 2) != child_seed(2, 1)


def test_write_reference_sample(tmp_path):
    days = {"A": np.array(["2006-01-02"], dtype="datetime64[D]")}
    s = generate_reference_sample({"A": 2}, days, {"A": ATOM_0830}, 7)
    write_reference_sample(s, tmp_path / "r.csv", "scheduled", 3, 42)
    text = (tmp_path / "r.csv").read_text()
    assert "# base_seed=42" in text and "# copy=3" in text and "derivation=" in text
    body = pd.read_csv(tmp_path / "r.csv", comment="#")
    assert list(body.columns) == ["asset_id", "timestamp", "class", "source_id"] and len(body) == 2
