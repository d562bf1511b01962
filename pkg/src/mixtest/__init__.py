"""EM-test for homogeneity in two-component normal mixtures."""

from .core import (
    ConfigurationError,
    DomainError,
    MixtureParams,
    PenaltySpec,
    Sample,
    log_likelihood,
    log_normal_density,
    modified_log_likelihood,
    penalty_alpha,
    penalty_sigma,
)
from .em_equal import em_test, fit_null
from .em_unequal import em_test_u, fit_null_u
from .emdriver import EMTestConfig, EMTestResult, NullFit
from .kernels import BACKEND

__version__ = "0.1.0"
