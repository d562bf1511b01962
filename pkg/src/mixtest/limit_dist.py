"""Limiting null laws of the EM-test statistic and the matching p-values.

Common-variance model: ``Pr(EM <= x) -> F(x - delta) * (0.5 + 0.5 F(x))``
with ``F`` the chi-square(1) CDF and ``delta = 2 max_{a != 0.5} p(a)``.
Free-variance model: chi-square(2).

Tail probabilities are computed from complementary functions (``erfc``,
``exp``) rather than ``1 - cdf`` so that small p-values keep their digits.
"""

from __future__ import annotations

import math
from collections.abc import Iterable
from statistics import NormalDist

from .core import DomainError, penalty_alpha


def chi1_cdf(x: float) -> float:
    if x <= 0.0:
        return 0.0
    return math.erf(math.sqrt(0.5 * x))


def chi1_sf(x: float) -> float:
    if x <= 0.0:
        return 1.0
    return math.erfc(math.sqrt(0.5 * x))


def chi2_cdf(x: float) -> float:
    if x <= 0.0:
        return 0.0
    return -math.expm1(-0.5 * x)


def chi2_sf(x: float, df: int = 2) -> float:
    """Upper tail of chi-square with integer ``df`` via the closed-form series.

    Even ``df`` is ``exp(-x/2) sum_{k < df/2} (x/2)^k / k!``; odd ``df`` adds
    half-integer terms to the chi-square(1) tail.
    """
    if df < 1 or int(df) != df:
        raise DomainError(f"df must be a positive integer, got {df}")
    if x <= 0.0:
        return 1.0
    h = 0.5 * x
    if df % 2 == 0:
        term = total = 1.0
        for k in range(1, df // 2):
            term *= h / k
            total += term
        return math.exp(-h) * total
    total = math.erfc(math.sqrt(h))
    # Gamma(k + 1/2) recursion starting from Gamma(3/2) = sqrt(pi)/2
    term = math.sqrt(h) / (0.5 * math.sqrt(math.pi))
    for k in range(1, (df - 1) // 2 + 1):
        if k > 1:
            term *= h / (k - 0.5)
        total += math.exp(-h) * term
    return total


def delta(alphas: Iterable[float]) -> float:
    """Penalty shift ``2 max_{a != 0.5} p(a)``; ``-inf`` when only 0.5 is given."""
    others = [a for a in alphas if a != 0.5]
    if not others:
        return -math.inf
    return 2.0 * max(penalty_alpha(a) for a in others)


def equal_cdf(x: float, delta_: float) -> float:
    shifted = 1.0 if delta_ == -math.inf else chi1_cdf(x - delta_)
    return shifted * (0.5 + 0.5 * chi1_cdf(x))


def pvalue_equal(t: float, delta_: float) -> float:
    """``1 - F(t - delta) {0.5 + 0.5 F(t)}``, evaluated tail-first."""
    if not math.isfinite(t):
        raise DomainError("statistic must be finite")
    if delta_ > 0.0:
        raise DomainError(f"delta must be <= 0, got {delta_}")
    if delta_ == -math.inf:
        return 0.5 * chi1_sf(t)
    head = chi1_cdf(t - delta_)
    return chi1_sf(t - delta_) + head * 0.5 * chi1_sf(t)


def pvalue_shifted(t: float, delta_: float) -> float:
    """P-value under ``chi2_1 + delta`` (alpha sets that exclude 0.5)."""
    if not math.isfinite(t):
        raise DomainError("statistic must be finite")
    return chi1_sf(t - delta_)


def pvalue_unequal(t: float) -> float:
    if not math.isfinite(t):
        raise DomainError("statistic must be finite")
    if t <= 0.0:
        return 1.0
    return math.exp(-0.5 * t)


def quantile_equal(level: float, delta_: float) -> float:
    """Upper-``level`` critical value of the common-variance limit law."""
    from scipy.optimize import brentq

    if not 0.0 < level < 1.0:
        raise DomainError("level must lie in (0, 1)")
    lo = 0.0
    if pvalue_equal(lo, delta_) <= level:
        return 0.0
    hi = 1.0
    while pvalue_equal(hi, delta_) > level:
        hi *= 2.0
    return brentq(lambda t: pvalue_equal(t, delta_) - level, lo, hi, xtol=1e-12)


def quantile_shifted(level: float, delta_: float) -> float:
    """Upper-``level`` point of ``chi2_1 + delta``."""
    if not 0.0 < level < 1.0:
        raise DomainError("level must lie in (0, 1)")
    z = NormalDist().inv_cdf(1.0 - 0.5 * level)
    return z * z + delta_


def quantile_unequal(level: float) -> float:
    if not 0.0 < level <= 1.0:
        raise DomainError("level must lie in (0, 1]")
    return -2.0 * math.log(level)
