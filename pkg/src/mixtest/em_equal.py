"""EM-test for homogeneity when both components share one variance."""

from __future__ import annotations

import math

import numpy as np

from . import limit_dist
from .core import MixtureParams, PenaltySpec, Sample, modified_log_likelihood
from .emdriver import (
    EQUAL,
    EMTestConfig,
    EMTestResult,
    NullFit,
    Weights,
    maximize_fixed_alpha,
    run_em_test,
)

__all__ = [
    "fit_null",
    "inner_maximize_fixed_alpha",
    "e_step",
    "m_step_alpha",
    "m_step_components",
    "em_test",
    "equal_pvalue_function",
]


def fit_null(sample: Sample) -> NullFit:
    """Penalized null fit; the penalty peaks at s_n^2 so this is (mean, s_n)."""
    sigma0 = sample.sd_n
    p = MixtureParams(0.5, sample.mean, sample.mean, sigma0, equal_variance=True)
    return NullFit(sample.mean, sigma0, modified_log_likelihood(sample, p, PenaltySpec.equal(sample)))


def inner_maximize_fixed_alpha(sample: Sample, alpha_j: float,
                               config: EMTestConfig | None = None) -> MixtureParams:
    """Maximize the penalized likelihood over (theta1, theta2, sigma) at fixed alpha.

    Runs frozen-alpha EM from each seed and keeps the best. If nothing beats
    the null seed the null-equivalent parameters come back.
    """
    config = config or EMTestConfig()
    return maximize_fixed_alpha(sample, alpha_j, config, EQUAL).params(True)


def e_step(sample: Sample, params: MixtureParams) -> Weights:
    """Posterior probability that each observation came from component 2."""
    x = sample.values
    z1 = (x - params.theta1) / params.sigma1
    z2 = (x - params.theta2) / params.sigma2
    a = math.log1p(-params.alpha) - math.log(params.sigma1) - 0.5 * z1 * z1
    b = math.log(params.alpha) - math.log(params.sigma2) - 0.5 * z2 * z2
    m = np.maximum(a, b)
    lse = m + np.log(np.exp(a - m) + np.exp(b - m))
    w = np.clip(np.exp(b - lse), 0.0, 1.0)
    return Weights(w, float(w.sum()))


def m_step_alpha(sum_w: float, n: int) -> float:
    """Argmax over (0, 0.5] of (n - W) log(1 - a) + W log a + log(2a)."""
    if not 0.0 <= sum_w <= n:
        raise ValueError(f"sum_w must lie in [0, n], got {sum_w}")
    return min((sum_w + 1.0) / (n + 1.0), 0.5)


def _weighted_means(x, w, previous):
    n1 = float((1.0 - w).sum())
    n2 = float(w.sum())
    t1 = float(((1.0 - w) * x).sum() / n1) if n1 > 0.0 else previous[0]
    t2 = float((w * x).sum() / n2) if n2 > 0.0 else previous[1]
    return n1, n2, t1, t2


def m_step_components(sample: Sample, weights: Weights, spec: PenaltySpec,
                      previous: tuple[float, float] | None = None):
    """Closed-form ``(theta1, theta2, sigma)`` update.

    sigma^2 = (SS + 2 c s_n^2) / (n + 2 c), SS the within-component weighted
    sum of squares. An empty component keeps its mean from ``previous``.
    """
    x = sample.values
    w = weights.w
    if previous is None:
        previous = (sample.mean, sample.mean)
    n1, n2, t1, t2 = _weighted_means(x, w, previous)
    ss = float(((1.0 - w) * (x - t1) ** 2).sum() + (w * (x - t2) ** 2).sum())
    c2 = 2.0 * spec.sigma_coefficient
    var = (ss + c2 * spec.reference_var) / (sample.n + c2)
    return t1, t2, math.sqrt(var)


def equal_pvalue_function(alphas):
    d = limit_dist.delta(alphas)
    if 0.5 in alphas:
        return lambda t: limit_dist.pvalue_equal(t, d)
    return lambda t: limit_dist.pvalue_shifted(t, d)


def em_test(sample: Sample, config: EMTestConfig | None = None) -> EMTestResult:
    config = config or EMTestConfig()
    return run_em_test(sample, config, EQUAL, equal_pvalue_function(config.alphas))
