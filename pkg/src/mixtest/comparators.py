"""Baseline homogeneity tests: modified LRTs and the plain LRT.

All three maximize over the full parameter set (alpha free) with multi-start
EM. Starts are quantile splits of the sorted sample at a few alpha values;
the null point is always a candidate, so every statistic is >= 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels, limit_dist
from .core import Sample
from .emdriver import Regime, accelerated_fit, as_array, hard_split, run_kernel

START_ALPHAS = (0.1, 0.3, 0.5)
TOL = 1e-8  # per observation
MAX_ITER = 5000

MLRT_EQUAL = Regime(equal=True, sigma_coef=0.0, alpha_kind=kernels.ALPHA_MLRT)
MLRT_UNEQUAL = Regime(equal=False, sigma_coef=0.25, alpha_kind=kernels.ALPHA_EMTEST)
LRT_EQUAL = Regime(equal=True, sigma_coef=0.0, alpha_kind=kernels.ALPHA_NONE)


@dataclass(frozen=True)
class CriticalValueTable:
    method: str
    n: int
    values: dict  # level -> critical value
    reps: int
    seed: int

    def __post_init__(self):
        levels = sorted(self.values)
        vals = [self.values[lv] for lv in levels]
        if any(b > a for a, b in zip(vals, vals[1:])):
            raise ValueError("critical values must be nonincreasing in level")

    def as_dict(self) -> dict:
        return {
            "method": self.method,
            "n": self.n,
            "reps": self.reps,
            "seed": self.seed,
            "values": {str(k): v for k, v in sorted(self.values.items())},
        }


def golden_section(f, lo: float, hi: float, tol: float = 1e-10, maxiter: int = 500) -> float:
    """Maximize a unimodal ``f`` on ``[lo, hi]``."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(maxiter):
        if b - a <= tol:
            break
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def sup_fit(sample: Sample, regime: Regime, extra_starts=(), *, tol=TOL, max_iter=MAX_ITER):
    """Best free-alpha EM fit over the start set; returns ``(fit, null_objective)``.

    ``extra_starts`` are ``(alpha, theta1, theta2, sigma1, sigma2)`` tuples.
    """
    x = as_array(sample)
    xs = np.sort(x)
    n, sn2, mean = sample.n, sample.var_n, sample.mean
    null = run_kernel(x, sn2, regime, 0.5, mean, mean, sn2, sn2,
                      update_alpha=False, max_iter=0, tol=0.0)
    starts = []
    for a0 in START_ALPHAS:
        k = min(max(int(round(a0 * n)), 1), n - 1)
        for low in (True, False):
            starts.append((a0,) + hard_split(xs, k, low, sn2, regime))
    for a0, t1, t2, s1, s2 in extra_starts:
        starts.append((a0, t1, t2, s1 * s1, s2 * s2))
    best = null
    for a0, t1, t2, v1, v2 in starts:
        fit = accelerated_fit(x, sn2, regime, a0, t1, t2, v1, v2,
                              update_alpha=True, max_iter=max_iter, tol=tol * n)
        if fit.obj > best.obj:
            best = fit
    return best, null.obj


def mlrt_equal(sample: Sample, extra_starts=()) -> float:
    """Common-variance MLRT: fit with the log(4a(1-a)) penalty, report the plain LR."""
    fit, l0 = sup_fit(sample, MLRT_EQUAL, extra_starts)
    l_alt = fit.obj - kernels.alpha_penalty(fit.alpha, kernels.ALPHA_MLRT)
    return 2.0 * (l_alt - l0)


def mlrt_unequal(sample: Sample, extra_starts=()) -> float:
    """Free-variance MLRT: twice the gap between the penalized sup and null."""
    fit, pl0 = sup_fit(sample, MLRT_UNEQUAL, extra_starts)
    return 2.0 * (fit.obj - pl0)


def lrt_equal(sample: Sample, extra_starts=()) -> float:
    fit, l0 = sup_fit(sample, LRT_EQUAL, extra_starts)
    return 2.0 * (fit.obj - l0)


def reference_pvalues(statistic: float, dfs=(2,)) -> dict:
    """Chi-square tail probabilities used as report annotations."""
    return {f"chi2_{df}": limit_dist.chi2_sf(statistic, df) for df in dfs}


def simulate_critical_values(method: str, n: int, reps: int, seed: int, *,
                             levels=(0.10, 0.05, 0.01), config=None, workers=None,
                             min_reps: int = 1000) -> CriticalValueTable:
    """Empirical null quantiles (type-7) of ``method`` at sample size ``n``."""
    from .sim import simulate_null_statistics

    if reps < min_reps:
        raise ValueError(f"reps must be >= {min_reps}, got {reps}")
    stats = simulate_null_statistics(method, n, reps, seed, config=config, workers=workers)
    values = {float(lv): float(np.quantile(stats, 1.0 - lv)) for lv in levels}
    return CriticalValueTable(method, n, values, reps, seed)
