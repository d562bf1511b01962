import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from scipy.stats import norm

from mixtest.core import (
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

from oracles import mixture_loglik

finite = st.floats(-1e3, 1e3, allow_nan=False)
positive = st.floats(1e-2, 1e2)


class TestSample:
    def test_mean_and_n_divisor_variance(self):
        s = Sample.from_values([1, 2, 3])
        assert s.n == 3
        assert s.mean == 2.0
        assert s.var_n == pytest.approx(2.0 / 3.0, abs=1e-15)

    @pytest.mark.parametrize("bad", [[1.0], [2.0, 2.0, 2.0], [1.0, float("nan")], []])
    def test_rejects_degenerate(self, bad):
        with pytest.raises(DomainError):
            Sample.from_values(bad)

    def test_values_are_read_only(self):
        s = Sample.from_values([1.0, 2.0])
        with pytest.raises(ValueError):
            s.values[0] = 5.0


class TestMixtureParams:
    def test_equal_variance_fills_sigma2(self):
        p = MixtureParams(0.3, 0.0, 1.0, 2.0, equal_variance=True)
        assert p.sigma2 == 2.0 and p.sigma == 2.0

    @pytest.mark.parametrize("alpha", [0.0, 0.51, -0.1, 1.0])
    def test_alpha_domain(self, alpha):
        with pytest.raises(DomainError):
            MixtureParams(alpha, 0.0, 0.0, 1.0, 1.0)

    def test_equal_flag_needs_equal_sigmas(self):
        with pytest.raises(DomainError):
            MixtureParams(0.3, 0.0, 0.0, 1.0, 2.0, equal_variance=True)

    def test_nonpositive_sigma(self):
        with pytest.raises(DomainError):
            MixtureParams(0.3, 0.0, 0.0, 0.0, 1.0)


class TestLogNormalDensity:
    def test_mode_of_standard_normal(self):
        assert log_normal_density(0.0, 0.0, 1.0) == pytest.approx(-0.9189385, abs=1e-7)

    @given(finite, positive)
    def test_at_mean(self, theta, sigma):
        expected = -math.log(sigma) - 0.5 * math.log(2 * math.pi)
        assert log_normal_density(theta, theta, sigma) == pytest.approx(expected, abs=1e-12)

    def test_against_scipy(self):
        # scipy oracle gives -1.7370857 for (1, 0, 2)
        assert log_normal_density(1.0, 0.0, 2.0) == pytest.approx(norm.logpdf(1.0, 0.0, 2.0), abs=1e-12)
        assert log_normal_density(1.0, 0.0, 2.0) == pytest.approx(-1.7370857, abs=1e-7)

    @pytest.mark.parametrize("args", [(0.0, 0.0, 0.0), (0.0, 0.0, -1.0), (math.inf, 0.0, 1.0),
                                      (0.0, math.nan, 1.0)])
    def test_domain_errors(self, args):
        with pytest.raises(DomainError):
            log_normal_density(*args)


class TestLogLikelihood:
    def test_collapses_to_single_normal(self):
        s = Sample.from_values([0.0, 0.0 + 1e-9])
        p = MixtureParams(0.5, 0.0, 0.0, 1.0, 1.0)
        assert log_likelihood(s, p) == pytest.approx(2 * -0.9189385332046727, abs=1e-12)

    def test_two_point_oracle(self):
        s = Sample.from_values([0.0, 2.0])
        p = MixtureParams(0.3, -1.0, 1.0, 1.0, 1.0)
        manual = sum(math.log(0.7 * norm.pdf(x, -1, 1) + 0.3 * norm.pdf(x, 1, 1)) for x in (0.0, 2.0))
        assert log_likelihood(s, p) == pytest.approx(manual, abs=1e-12)

    @settings(max_examples=50, deadline=None)
    @given(st.lists(finite, min_size=2, max_size=30, unique=True), finite, positive,
           st.floats(0.01, 0.5))
    def test_degenerate_equals_single_normal(self, xs, theta, sigma, alpha):
        assume(np.var(xs) > 1e-12)
        s = Sample.from_values(xs)
        p = MixtureParams(alpha, theta, theta, sigma, sigma)
        single = sum(log_normal_density(x, theta, sigma) for x in xs)
        assert log_likelihood(s, p) == pytest.approx(single, rel=1e-12, abs=1e-9)

    def test_far_tails_stay_finite(self):
        # |x - theta| / sigma = 40 for every component
        s = Sample.from_values([-40.0, 40.0, 0.5])
        p = MixtureParams(0.2, 40.0, -40.0, 1.0, 1.0)
        val = log_likelihood(s, p)
        assert math.isfinite(val)
        assert val == pytest.approx(mixture_loglik(s.values, 0.2, 40.0, -40.0, 1.0, 1.0), rel=1e-12)

    def test_sigma_floor(self):
        s = Sample.from_values([0.0, 1.0])
        with pytest.raises(DomainError):
            log_likelihood(s, MixtureParams(0.5, 0.0, 1.0, 1e-14, 1.0))


class TestPenalties:
    def test_sigma_penalty_at_reference(self):
        assert penalty_sigma(2.0, PenaltySpec(1.0, 4.0)) == pytest.approx(-1.0, abs=1e-15)
        assert penalty_sigma(2.0, PenaltySpec(0.25, 4.0)) == pytest.approx(-0.25, abs=1e-15)

    def test_sigma_penalty_value(self):
        assert penalty_sigma(2.0, PenaltySpec(1.0, 1.0)) == pytest.approx(-1.6362944, abs=1e-7)

    def test_sigma_penalty_max_on_grid(self):
        spec = PenaltySpec(1.0, 2.5)
        grid = np.linspace(0.05, 10.0, 5000)
        vals = np.array([penalty_sigma(s, spec) for s in grid])
        assert vals.max() <= penalty_sigma(math.sqrt(2.5), spec)
        assert grid[vals.argmax()] == pytest.approx(math.sqrt(2.5), abs=2e-3)

    def test_spec_validation(self):
        with pytest.raises(ConfigurationError):
            PenaltySpec(0.5, 1.0)
        with pytest.raises(DomainError):
            PenaltySpec(1.0, 0.0)
        with pytest.raises(DomainError):
            penalty_sigma(0.0, PenaltySpec(1.0, 1.0))

    @pytest.mark.parametrize("alpha, expected", [(0.5, 0.0), (0.3, -0.5108256), (0.1, -1.6094379)])
    def test_alpha_penalty_values(self, alpha, expected):
        assert penalty_alpha(alpha) == pytest.approx(expected, abs=1e-7)

    @given(st.floats(1e-9, 1 - 1e-9))
    def test_alpha_penalty_nonpositive(self, alpha):
        v = penalty_alpha(alpha)
        assert v <= 0.0
        if alpha != 0.5:
            assert v < 0.0

    @pytest.mark.parametrize("alpha", [0.0, 1.0, -0.2, 1.5])
    def test_alpha_penalty_domain(self, alpha):
        with pytest.raises(DomainError):
            penalty_alpha(alpha)


class TestModifiedLogLikelihood:
    def setup_method(self):
        self.sample = Sample.from_values(np.random.default_rng(4).normal(size=40))

    def test_equal_at_null(self):
        s = self.sample
        p = MixtureParams(0.5, s.mean, s.mean, s.sd_n, equal_variance=True)
        l0 = log_likelihood(s, p)
        assert modified_log_likelihood(s, p, PenaltySpec.equal(s)) == pytest.approx(l0 - 1.0, abs=1e-12)

    def test_unequal_at_null(self):
        s = self.sample
        p = MixtureParams(0.5, s.mean, s.mean, s.sd_n, s.sd_n)
        l0 = log_likelihood(s, p)
        assert modified_log_likelihood(s, p, PenaltySpec.unequal(s)) == pytest.approx(l0 - 0.5, abs=1e-12)

    def test_composition_oracle(self):
        rng = np.random.default_rng(9)
        s = self.sample
        sn2 = np.var(s.values)
        for _ in range(20):
            a = rng.uniform(0.01, 0.5)
            t1, t2 = rng.normal(size=2)
            s1, s2 = rng.uniform(0.3, 2.0, size=2)
            want = (mixture_loglik(s.values, a, t1, t2, s1, s2)
                    - 0.25 * (sn2 / s1**2 + np.log(s1**2 / sn2))
                    - 0.25 * (sn2 / s2**2 + np.log(s2**2 / sn2))
                    + np.log(1 - abs(1 - 2 * a)))
            got = modified_log_likelihood(s, MixtureParams(a, t1, t2, s1, s2), PenaltySpec.unequal(s))
            assert got == pytest.approx(want, abs=1e-12)

    def test_regime_mismatch(self):
        s = self.sample
        p = MixtureParams(0.5, 0.0, 0.0, 1.0, 1.0)
        with pytest.raises(ConfigurationError):
            modified_log_likelihood(s, p, PenaltySpec.equal(s))
