"""EM-test for homogeneity when the two components have their own variances.

Same skeleton as :mod:`mixtest.em_equal`; the variance update is per
component and each variance carries a 0.25-weighted penalty.
"""

from __future__ import annotations

import math

from . import limit_dist
from .core import ConfigurationError, MixtureParams, PenaltySpec, Sample, modified_log_likelihood
from .em_equal import _weighted_means, e_step, m_step_alpha
from .emdriver import UNEQUAL, EMTestConfig, EMTestResult, NullFit, Weights, maximize_fixed_alpha, run_em_test

__all__ = [
    "fit_null_u",
    "inner_maximize_fixed_alpha_u",
    "e_step",
    "m_step_alpha",
    "m_step_components_u",
    "em_test_u",
]


def fit_null_u(sample: Sample) -> NullFit:
    sigma0 = sample.sd_n
    p = MixtureParams(0.5, sample.mean, sample.mean, sigma0, sigma0)
    return NullFit(sample.mean, sigma0, modified_log_likelihood(sample, p, PenaltySpec.unequal(sample)))


def inner_maximize_fixed_alpha_u(sample: Sample, alpha_j: float,
                                 config: EMTestConfig | None = None) -> MixtureParams:
    config = config or EMTestConfig()
    return maximize_fixed_alpha(sample, alpha_j, config, UNEQUAL).params(False)


def m_step_components_u(sample: Sample, weights: Weights, spec: PenaltySpec,
                        previous: tuple[float, float, float, float] | None = None):
    """Closed-form ``(theta1, theta2, sigma1, sigma2)`` update.

    sigma_h^2 = (SS_h + 2 c s_n^2) / (n_h + 2 c) with c = 0.25, which keeps
    every variance above 0.5 s_n^2 / (n + 0.5). A component with zero
    weight keeps its ``previous`` mean and standard deviation.
    """
    x = sample.values
    w = weights.w
    if previous is None:
        previous = (sample.mean, sample.mean, sample.sd_n, sample.sd_n)
    n1, n2, t1, t2 = _weighted_means(x, w, previous[:2])
    c2 = 2.0 * spec.sigma_coefficient
    s2 = spec.reference_var
    sig1, sig2 = previous[2], previous[3]
    if n1 > 0.0:
        sig1 = math.sqrt((float(((1.0 - w) * (x - t1) ** 2).sum()) + c2 * s2) / (n1 + c2))
    if n2 > 0.0:
        sig2 = math.sqrt((float((w * (x - t2) ** 2).sum()) + c2 * s2) / (n2 + c2))
    return t1, t2, sig1, sig2


def em_test_u(sample: Sample, config: EMTestConfig | None = None) -> EMTestResult:
    config = config or EMTestConfig()
    if 0.5 not in config.alphas:
        # the chi2_2 limit is only established with 0.5 in the alpha set
        raise ConfigurationError("the free-variance EM-test needs 0.5 in the alpha set")
    return run_em_test(sample, config, UNEQUAL, limit_dist.pvalue_unequal)
