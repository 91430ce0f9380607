"""Rank-based Welch tests and bootstrap p-values against reference ensembles."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

_FPMIN = 1e-300


class BootstrapError(RuntimeError):
    def __init__(self, message: str, completed: int, requested: int):
        super().__init__(f"{message} (after {completed} of {requested} reference sets)")
        self.completed = completed
        self.requested = requested


@dataclass(frozen=True)
class TestResult:
    statistic: str
    empirical: float
    reference: float
    p_left: float
    p_right: float
    n_empirical: int
    n_reference: int
    method: str
    flagged: bool = False


@dataclass(frozen=True)
class WelchU:
    t: float
    df: float
    p_left: float
    p_right: float
    mean_rank_x: float
    mean_rank_y: float
    degenerate: bool = False


def midranks(values) -> np.ndarray:
    """1-based ranks with ties sharing the average of their positions."""
    v = np.asarray(values, dtype=float)
    n = len(v)
    order = np.argsort(v, kind="mergesort")
    sv = v[order]
    ranks = np.empty(n)
    start = np.r_[0, np.flatnonzero(sv[1:] != sv[:-1]) + 1]
    stop = np.r_[start[1:], n]
    avg = (start + stop + 1) / 2.0  # mean of positions start+1 .. stop
    ranks[order] = np.repeat(avg, stop - start)
    return ranks


def _log_gamma_ratio_half(a: float) -> float:
    """log(Gamma(a + 1/2) / Gamma(a)), accurate for large ``a``."""
    if a < 200:
        return math.lgamma(a + 0.5) - math.lgamma(a)
    x = 1.0 / a
    return 0.5 * math.log(a) - x / 8 + x**3 / 192 + x**5 / 640 - 17 * x**7 / 14336


def _betacf(a: float, b: float, x: float, maxit: int = 100_000, eps: float = 1e-16) -> float:
    """Continued fraction for the regularised incomplete beta (modified Lentz)."""
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    d = 1.0 / (d if abs(d) > _FPMIN else _FPMIN)
    h = d
    for m in range(1, maxit + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > _FPMIN else _FPMIN)
        c = 1.0 + aa / c
        c = c if abs(c) > _FPMIN else _FPMIN
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > _FPMIN else _FPMIN)
        c = 1.0 + aa / c
        c = c if abs(c) > _FPMIN else _FPMIN
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < eps:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def _student_tail(t: float, df: float) -> float:
    """P(T > |t|) for Student's t with ``df`` degrees of freedom."""
    if math.isinf(t):
        return 0.0
    t2 = t * t
    x = df / (df + t2)  # I_x(df/2, 1/2) / 2 is the tail
    xc = t2 / (df + t2)
    a, b = df / 2.0, 0.5
    if x <= 0.0:
        return 0.0
    if xc <= 0.0:
        return 0.5
    # log B(a, b) with b = 1/2: lgamma(a) + lgamma(1/2) - lgamma(a + 1/2)
    log_beta = 0.5 * math.log(math.pi) - _log_gamma_ratio_half(a)
    log_x = -math.log1p(t2 / df)
    log_xc = math.log(t2) - math.log(df + t2)
    front = math.exp(a * log_x + b * log_xc - log_beta)
    if x < (a + 1.0) / (a + b + 2.0):
        ib = front * _betacf(a, b, x) / a
    else:
        ib = 1.0 - front * _betacf(b, a, xc) / b
    return 0.5 * ib


def student_t_cdf(t: float, df: float) -> float:
    tail = _student_tail(t, df)
    return tail if t < 0 else 1.0 - tail


def welch_u(x, y) -> WelchU:
    """Welch's unequal-variance t-test on the mid-ranks of the pooled sample.

    The left tail is the alternative that ``x`` ranks lower than ``y``.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    nx, ny = len(x), len(y)
    if nx < 2 or ny < 2:
        raise ValueError("each sample needs at least two observations")
    ranks = midranks(np.concatenate([x, y]))
    rx, ry = ranks[:nx], ranks[nx:]
    mx, my = rx.mean(), ry.mean()
    vx = rx.var(ddof=1) / nx
    vy = ry.var(ddof=1) / ny
    se2 = vx + vy
    if se2 == 0.0:
        if mx == my:
            return WelchU(0.0, math.nan, 0.5, 0.5, mx, my, degenerate=True)
        t = math.copysign(math.inf, mx - my)
        return WelchU(t, math.nan, float(t > 0), float(t < 0), mx, my)
    t = (mx - my) / math.sqrt(se2)
    df = se2**2 / (vx**2 / (nx - 1) + vy**2 / (ny - 1))
    tail = _student_tail(t, df)
    if t < 0:
        p_left, p_right = tail, 1.0 - tail
    else:
        p_left, p_right = 1.0 - tail, tail
    return WelchU(t, df, p_left, p_right, mx, my)


def welch_u_test(x, y, tail: str = "left") -> float:
    res = welch_u(x, y)
    if tail == "left":
        return res.p_left
    if tail == "right":
        return res.p_right
    raise ValueError(f"tail must be 'left' or 'right', got {tail!r}")


def jump_size_test(empirical, reference, tail: str = "right") -> float:
    """Welch U-test on absolute normalised jump sizes."""
    return welch_u_test(np.abs(empirical), np.abs(reference), tail)


STATISTICS: dict[str, Callable[[np.ndarray], float]] = {"median": np.median, "mean": np.mean}


def bootstrap_counts(empirical_stat: float, reference_stats) -> tuple[float, float]:
    """Left and right p-values; ties with the empirical value count for both tails."""
    ref = np.asarray(reference_stats, dtype=float)
    ref = ref[np.isfinite(ref)]
    if len(ref) == 0:
        return math.nan, math.nan
    return float(np.sum(ref <= empirical_stat) / len(ref)), float(np.sum(ref >= empirical_stat) / len(ref))


def bootstrap_reference_stats(generator: Callable[[int], np.ndarray], statistic: str = "median", B: int = 10_000) -> np.ndarray:
    if B < 100:
        raise ValueError("use at least 100 bootstrap reference sets")
    fn = STATISTICS[statistic]
    out = np.empty(B)
    for b in range(B):
        try:
            sample = np.asarray(generator(b), dtype=float)
        except Exception as exc:  # noqa: BLE001 - reported with progress
            raise BootstrapError(f"reference generator failed: {exc}", b, B) from exc
        sample = sample[np.isfinite(sample)]
        out[b] = fn(sample) if len(sample) else math.nan
    return out


def bootstrap_pvalue(empirical, generator: Callable[[int], np.ndarray], statistic: str = "median", B: int = 10_000, tail: str = "left") -> float:
    """Share of reference statistics at or beyond the empirical one.

    ``generator(b)`` returns the ``b``-th reference data set, of the same size
    as ``empirical``.
    """
    res = bootstrap_test(empirical, generator, statistic, B)
    return res.p_left if tail == "left" else res.p_right


def bootstrap_test(empirical, generator: Callable[[int], np.ndarray], statistic: str = "median", B: int = 10_000) -> TestResult:
    emp = np.asarray(empirical, dtype=float)
    emp = emp[np.isfinite(emp)]
    fn = STATISTICS[statistic]
    stat = float(fn(emp))
    ref = bootstrap_reference_stats(generator, statistic, B)
    p_left, p_right = bootstrap_counts(stat, ref)
    return TestResult(statistic, stat, float(np.nanmedian(ref)), p_left, p_right, len(emp), B, "bootstrap")


def welch_test_result(x, y, statistic: str = "mean") -> TestResult:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    res = welch_u(x, y)
    fn = STATISTICS[statistic]
    return TestResult(statistic, float(fn(x)), float(fn(y)), res.p_left, res.p_right, len(x), len(y), "welch-u", res.degenerate)
