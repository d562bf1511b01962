"""Two-component normal mixture log-likelihood and its penalties.

All functions here are pure; arrays are never mutated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)

# sigma below SIGMA_FLOOR * sqrt(s_n^2) is rejected outright
SIGMA_FLOOR = 1e-12


class DomainError(ValueError):
    """An argument lies outside the domain of a density or penalty."""


class ConfigurationError(ValueError):
    """Inconsistent combination of settings (regime, penalty, alpha set...)."""


@dataclass(frozen=True)
class Sample:
    """Observations with cached mean and n-divisor variance.

    Build with :meth:`from_values`; the constructor trusts its arguments.
    """

    values: np.ndarray
    mean: float
    var_n: float

    @classmethod
    def from_values(cls, values) -> "Sample":
        x = np.array(values, dtype=float).ravel()
        if x.size < 2:
            raise DomainError(f"need at least 2 observations, got {x.size}")
        if not np.all(np.isfinite(x)):
            raise DomainError("sample contains non-finite values")
        mean = float(x.mean())
        var_n = float(np.mean((x - mean) ** 2))
        if not var_n > 0.0:
            raise DomainError("sample has zero variance (all values equal)")
        x.setflags(write=False)
        return cls(x, mean, var_n)

    @property
    def n(self) -> int:
        return int(self.values.size)

    @property
    def sd_n(self) -> float:
        return math.sqrt(self.var_n)

    def affine(self, a: float, b: float) -> "Sample":
        return Sample.from_values(a * self.values + b)


@dataclass(frozen=True)
class MixtureParams:
    """``(1 - alpha) N(theta1, sigma1^2) + alpha N(theta2, sigma2^2)``."""

    alpha: float
    theta1: float
    theta2: float
    sigma1: float
    sigma2: float = field(default=float("nan"))
    equal_variance: bool = False

    def __post_init__(self):
        if math.isnan(self.sigma2):
            object.__setattr__(self, "sigma2", self.sigma1)
        if not 0.0 < self.alpha <= 0.5:
            raise DomainError(f"alpha must lie in (0, 0.5], got {self.alpha}")
        if not (self.sigma1 > 0.0 and self.sigma2 > 0.0):
            raise DomainError("component standard deviations must be positive")
        if not all(map(math.isfinite, (self.theta1, self.theta2, self.sigma1, self.sigma2))):
            raise DomainError("non-finite mixture parameter")
        if self.equal_variance and self.sigma1 != self.sigma2:
            raise DomainError("equal_variance requires sigma1 == sigma2")

    @property
    def sigma(self) -> float:
        """Common standard deviation (equal-variance regime)."""
        if not self.equal_variance:
            raise ConfigurationError("sigma is only defined for equal-variance params")
        return self.sigma1

    def as_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "theta1": self.theta1,
            "theta2": self.theta2,
            "sigma1": self.sigma1,
            "sigma2": self.sigma2,
            "equal_variance": self.equal_variance,
        }


@dataclass(frozen=True)
class PenaltySpec:
    """Variance penalty ``-c {s^2/sigma^2 + log(sigma^2/s^2)}``.

    ``sigma_coefficient`` is 1 for the common-variance model and 0.25 (applied
    to each component) when the variances are free.
    """

    sigma_coefficient: float
    reference_var: float

    def __post_init__(self):
        if self.sigma_coefficient not in (1.0, 0.25):
            raise ConfigurationError(
                f"sigma_coefficient must be 1 or 0.25, got {self.sigma_coefficient}"
            )
        if not self.reference_var > 0.0:
            raise DomainError("reference_var must be positive")

    @classmethod
    def equal(cls, sample: Sample) -> "PenaltySpec":
        return cls(1.0, sample.var_n)

    @classmethod
    def unequal(cls, sample: Sample) -> "PenaltySpec":
        return cls(0.25, sample.var_n)


def log_normal_density(x: float, theta: float, sigma: float) -> float:
    """Log of the N(theta, sigma^2) density at ``x``."""
    if not (math.isfinite(x) and math.isfinite(theta) and math.isfinite(sigma)):
        raise DomainError("non-finite argument to log_normal_density")
    if sigma <= 0.0:
        raise DomainError(f"sigma must be positive, got {sigma}")
    z = (x - theta) / sigma
    return -math.log(sigma) - LOG_SQRT_2PI - 0.5 * z * z


def _check_floor(sample: Sample, *sigmas: float) -> None:
    floor = SIGMA_FLOOR * sample.sd_n
    for s in sigmas:
        if s < floor:
            raise DomainError(f"sigma={s:g} is below the floor {floor:g}")


def _component_logs(x: np.ndarray, p: MixtureParams) -> tuple[np.ndarray, np.ndarray]:
    z1 = (x - p.theta1) / p.sigma1
    z2 = (x - p.theta2) / p.sigma2
    a = math.log1p(-p.alpha) - math.log(p.sigma1) - LOG_SQRT_2PI - 0.5 * z1 * z1
    b = math.log(p.alpha) - math.log(p.sigma2) - LOG_SQRT_2PI - 0.5 * z2 * z2
    return a, b


def pointwise_log_density(x: np.ndarray, params: MixtureParams) -> np.ndarray:
    """Per-observation mixture log density, max-shifted so nothing underflows."""
    a, b = _component_logs(np.asarray(x, dtype=float), params)
    m = np.maximum(a, b)
    return m + np.log(np.exp(a - m) + np.exp(b - m))


def log_likelihood(sample: Sample, params: MixtureParams) -> float:
    _check_floor(sample, params.sigma1, params.sigma2)
    return float(np.sum(pointwise_log_density(sample.values, params)))


def penalty_sigma(sigma: float, spec: PenaltySpec) -> float:
    if not sigma > 0.0:
        raise DomainError(f"sigma must be positive, got {sigma}")
    r = spec.reference_var / (sigma * sigma)
    return -spec.sigma_coefficient * (r - math.log(r))


def penalty_alpha(alpha: float) -> float:
    """``log(1 - |1 - 2 alpha|)``; zero at one half, -inf at the ends."""
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    return math.log(1.0 - abs(1.0 - 2.0 * alpha))


def modified_log_likelihood(sample: Sample, params: MixtureParams, spec: PenaltySpec) -> float:
    """Log-likelihood plus the variance penalty (once or per component) and p(alpha)."""
    if params.equal_variance != (spec.sigma_coefficient == 1.0):
        raise ConfigurationError(
            "penalty coefficient 1 goes with equal variances, 0.25 with unequal"
        )
    ll = log_likelihood(sample, params)
    if params.equal_variance:
        pen = penalty_sigma(params.sigma1, spec)
    else:
        pen = penalty_sigma(params.sigma1, spec) + penalty_sigma(params.sigma2, spec)
    return ll + pen + penalty_alpha(params.alpha)
