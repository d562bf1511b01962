"""Iteration skeleton shared by the common- and free-variance EM-tests.

The regime only decides the variance update and the penalty coefficient;
everything else (starts, the frozen-alpha maximization, the K - 1 EM rounds,
the max over the alpha set) lives here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .core import ConfigurationError, MixtureParams, Sample

DEFAULT_ALPHAS = (0.1, 0.3, 0.5)
REFINED_ALPHAS = (0.01, 0.025, 0.05, 0.1)


@dataclass(frozen=True)
class EMTestConfig:
    """Settings for one EM-test run.

    ``inner_tol`` is a per-observation tolerance: the frozen-alpha EM stops
    once two consecutive accelerated cycles each move the penalized
    log-likelihood by at most ``inner_tol * n``. ``inner_max_iter`` caps the
    number of EM map evaluations per start.
    ``starts`` picks how many of the five seeds are tried (null point,
    lower/upper quantile splits, two jittered splits).
    """

    alphas: tuple[float, ...] = DEFAULT_ALPHAS
    K: int = 2
    inner_tol: float = 1e-8
    inner_max_iter: int = 2000
    starts: int = 5
    seed: int = 0
    require_half: bool = True

    def __post_init__(self):
        alphas = tuple(float(a) for a in self.alphas)
        object.__setattr__(self, "alphas", alphas)
        if not alphas:
            raise ConfigurationError("alpha set is empty")
        if any(not 0.0 < a <= 0.5 for a in alphas):
            raise ConfigurationError(f"initial alphas must lie in (0, 0.5]: {alphas}")
        if len(set(alphas)) != len(alphas):
            raise ConfigurationError(f"duplicate initial alphas: {alphas}")
        if self.require_half and 0.5 not in alphas:
            raise ConfigurationError("the alpha set must contain 0.5")
        if int(self.K) != self.K or self.K < 1:
            raise ConfigurationError(f"K must be a positive integer, got {self.K}")
        if not self.inner_tol > 0.0:
            raise ConfigurationError("inner_tol must be positive")
        if self.inner_max_iter < 1:
            raise ConfigurationError("inner_max_iter must be >= 1")
        if not 1 <= self.starts <= 5:
            raise ConfigurationError("starts must be between 1 and 5")

    @classmethod
    def refined(cls, **kw) -> "EMTestConfig":
        """Small-alpha preset; its limit law is chi2_1 shifted by delta."""
        return cls(alphas=REFINED_ALPHAS, require_half=False, **kw)

    def as_dict(self) -> dict:
        return {
            "alphas": list(self.alphas),
            "K": self.K,
            "inner_tol": self.inner_tol,
            "inner_max_iter": self.inner_max_iter,
            "starts": self.starts,
            "seed": self.seed,
            "require_half": self.require_half,
        }


@dataclass(frozen=True)
class Weights:
    w: np.ndarray
    sum_w: float

    @classmethod
    def from_array(cls, w) -> "Weights":
        w = np.asarray(w, dtype=float)
        if np.any(w < 0.0) or np.any(w > 1.0):
            raise ValueError("weights must lie in [0, 1]")
        return cls(w, float(w.sum()))


@dataclass(frozen=True)
class NullFit:
    theta0: float
    sigma0: float
    pl0: float

    def as_dict(self) -> dict:
        return {"theta0": self.theta0, "sigma0": self.sigma0, "pl0": self.pl0}


@dataclass(frozen=True)
class EMTestResult:
    statistic: float
    m_trajectory: tuple[tuple[float, ...], ...]
    best_alpha_index: int
    fitted: MixtureParams
    null_fit: NullFit
    p_value: float
    alphas: tuple[float, ...]
    equal_variance: bool
    fits: tuple[MixtureParams, ...] = field(default=())

    def as_dict(self) -> dict:
        return {
            "statistic": self.statistic,
            "p_value": self.p_value,
            "equal_variance": self.equal_variance,
            "alphas": list(self.alphas),
            "m_trajectory": [list(t) for t in self.m_trajectory],
            "best_alpha_index": self.best_alpha_index,
            "fitted": self.fitted.as_dict(),
            "null_fit": self.null_fit.as_dict(),
        }


@dataclass(frozen=True)
class Regime:
    equal: bool
    sigma_coef: float
    alpha_kind: int = kernels.ALPHA_EMTEST


EQUAL = Regime(equal=True, sigma_coef=1.0)
UNEQUAL = Regime(equal=False, sigma_coef=0.25)


@dataclass
class Fit:
    """Raw kernel state: variances, not standard deviations."""

    alpha: float
    theta1: float
    theta2: float
    var1: float
    var2: float
    obj: float

    def params(self, equal: bool) -> MixtureParams:
        return MixtureParams(
            self.alpha, self.theta1, self.theta2,
            math.sqrt(self.var1), math.sqrt(self.var2), equal_variance=equal,
        )


def as_array(sample: Sample) -> np.ndarray:
    return np.ascontiguousarray(sample.values, dtype=np.float64)


def run_kernel(x, sn2, regime: Regime, alpha, theta1, theta2, var1, var2, *,
               update_alpha: bool, max_iter: int, tol: float) -> Fit:
    a, t1, t2, v1, v2, obj, _ = kernels.em_fit(
        x, alpha, theta1, theta2, var1, var2, sn2, regime.equal,
        regime.sigma_coef, regime.alpha_kind, update_alpha, max_iter, tol,
    )
    return Fit(a, t1, t2, v1, v2, obj)


def _em_map(x, sn2, regime: Regime, state, update_alpha: bool):
    a, t1, t2, v1, v2, obj, _ = kernels.em_fit(
        x, state[0], state[1], state[2], state[3], state[4], sn2, regime.equal,
        regime.sigma_coef, regime.alpha_kind, update_alpha, 1, 0.0,
    )
    return np.array((a, t1, t2, v1, v2)), obj


def _objective(x, sn2, regime: Regime, state) -> float:
    return kernels.em_fit(
        x, state[0], state[1], state[2], state[3], state[4], sn2, regime.equal,
        regime.sigma_coef, regime.alpha_kind, False, 0, 0.0,
    )[5]


def _admissible(state, regime: Regime) -> bool:
    a, t1, t2, v1, v2 = state
    if not (np.all(np.isfinite(state)) and 0.0 < a <= 0.5 and v1 > 0.0 and v2 > 0.0):
        return False
    return not regime.equal or v1 == v2


def accelerated_fit(x, sn2, regime: Regime, alpha, theta1, theta2, var1, var2, *,
                    update_alpha: bool, max_iter: int, tol: float) -> Fit:
    """EM with SQUAREM extrapolation (Varadhan and Roland, 2008).

    Each cycle takes two EM steps, extrapolates along the squared-iteration
    direction and finishes with one EM step from the extrapolated point. The
    extrapolation is discarded whenever it leaves the parameter space or
    ends below the plain two-step iterate, so the objective never decreases.
    Plain EM slows to a crawl when the two components nearly coincide; this
    keeps the fixed-alpha maximization accurate to well below ``tol`` there.

    ``max_iter`` caps the number of EM map evaluations and iteration stops
    once two consecutive cycles each raise the objective by at most ``tol``.
    """
    p = np.array((alpha, theta1, theta2, var1, var2), dtype=float)
    f0 = _objective(x, sn2, regime, p)
    if max_iter <= 0:
        return Fit(*p.tolist(), f0)
    # the degenerate point is a fixed point of the map
    if theta1 == theta2 and var1 == var2:
        if update_alpha:
            p, f0 = _em_map(x, sn2, regime, p, True)
        return Fit(*p.tolist(), f0)
    evals = 0
    calm = 0
    while evals < max_iter:
        p1, _ = _em_map(x, sn2, regime, p, update_alpha)
        p2, f2 = _em_map(x, sn2, regime, p1, update_alpha)
        evals += 2
        r = p1 - p
        v = p2 - p1 - r
        nv = math.sqrt(float(v @ v))
        step = -math.sqrt(float(r @ r)) / nv if nv > 0.0 else -1.0
        step = min(step, -1.0)
        p3, f3 = p2, f2
        if step < -1.0:
            cand = p - 2.0 * step * r + step * step * v
            if regime.equal:
                cand[4] = cand[3]
            if _admissible(cand, regime) and not (cand[1] == cand[2] and cand[3] == cand[4]):
                q, fq = _em_map(x, sn2, regime, cand, update_alpha)
                evals += 1
                if fq >= f2:
                    p3, f3 = q, fq
        if f3 < f0:  # guards against round-off only
            p3, f3 = p2, f2
        if abs(f3 - f0) <= tol:
            calm += 1
            if calm == 2:
                return Fit(*p3.tolist(), f3)
        else:
            calm = 0
        p, f0 = p3, f3
    return Fit(*p.tolist(), f0)


def hard_split(xs: np.ndarray, k: int, low: bool, sn2: float, regime: Regime):
    """Closed-form M-step with 0/1 weights: component 2 takes ``k`` extremes.

    ``xs`` must be sorted. Returns ``(theta1, theta2, var1, var2)``.
    """
    n = xs.size
    if low:
        g2, g1 = xs[:k], xs[k:]
    else:
        g2, g1 = xs[n - k:], xs[: n - k]
    t1, t2 = float(g1.mean()), float(g2.mean())
    ss1 = float(((g1 - t1) ** 2).sum())
    ss2 = float(((g2 - t2) ** 2).sum())
    c2 = 2.0 * regime.sigma_coef
    floor = kernels._pykernels.VAR_FLOOR * sn2
    if regime.equal:
        v = max((ss1 + ss2 + c2 * sn2) / (n + c2), floor)
        return t1, t2, v, v
    v1 = max((ss1 + c2 * sn2) / (g1.size + c2), floor)
    v2 = max((ss2 + c2 * sn2) / (g2.size + c2), floor)
    return t1, t2, v1, v2


def jitter_signs(seed: int) -> np.ndarray:
    return np.random.default_rng(seed).choice((-1.0, 1.0), size=2)


def start_points(xs_sorted: np.ndarray, mean: float, sn2: float, alpha: float,
                 regime: Regime, starts: int, seed: int):
    """Seeds for the frozen-alpha maximization, in priority order.

    The set is closed under ``x -> a x + b`` for either sign of ``a``: the two
    quantile splits trade places and so do their jittered copies.
    """
    n = xs_sorted.size
    out = [(mean, mean, sn2, sn2)]
    k = min(max(int(round(alpha * n)), 1), n - 1)
    low = hard_split(xs_sorted, k, True, sn2, regime)
    high = hard_split(xs_sorted, k, False, sn2, regime)
    out += [low, high]
    s = math.sqrt(sn2)
    e1, e2 = jitter_signs(seed)
    out.append((low[0] + e1 * s, low[1] + e2 * s, low[2], low[3]))
    out.append((high[0] - e1 * s, high[1] - e2 * s, high[2], high[3]))
    return out[:starts]


def null_objective(x, mean, sn2, regime: Regime) -> float:
    return run_kernel(x, sn2, regime, 0.5, mean, mean, sn2, sn2,
                      update_alpha=False, max_iter=0, tol=0.0).obj


def maximize_fixed_alpha(sample: Sample, alpha: float, config: EMTestConfig,
                         regime: Regime, x=None, xs_sorted=None) -> Fit:
    x = as_array(sample) if x is None else x
    xs = np.sort(x) if xs_sorted is None else xs_sorted
    sn2 = sample.var_n
    tol = config.inner_tol * sample.n
    best = None
    for i, (t1, t2, v1, v2) in enumerate(
            start_points(xs, sample.mean, sn2, alpha, regime, config.starts, config.seed)):
        # the null seed is a fixed point of the frozen-alpha map
        iters = 0 if i == 0 else config.inner_max_iter
        fit = accelerated_fit(x, sn2, regime, alpha, t1, t2, v1, v2,
                              update_alpha=False, max_iter=iters, tol=tol)
        if best is None or fit.obj > best.obj:
            best = fit
    return best


def run_em_test(sample: Sample, config: EMTestConfig, regime: Regime, pvalue):
    """Shared body of ``em_test`` / ``em_test_u``.

    ``pvalue`` maps the statistic to a p-value for the regime's limit law.
    """
    x = as_array(sample)
    xs = np.sort(x)
    sn2 = sample.var_n
    pl0 = null_objective(x, sample.mean, sn2, regime)
    null = NullFit(sample.mean, math.sqrt(sn2), pl0)

    trajectories = []
    finals = []
    for alpha in config.alphas:
        fit = maximize_fixed_alpha(sample, alpha, config, regime, x=x, xs_sorted=xs)
        traj = [2.0 * (fit.obj - pl0)]
        for _ in range(config.K - 1):
            fit = run_kernel(x, sn2, regime, fit.alpha, fit.theta1, fit.theta2,
                             fit.var1, fit.var2, update_alpha=True, max_iter=1, tol=0.0)
            traj.append(2.0 * (fit.obj - pl0))
        trajectories.append(tuple(traj))
        finals.append(fit.params(regime.equal))

    last = [t[-1] for t in trajectories]
    j = int(np.argmax(last))  # first index wins ties
    stat = last[j]
    return EMTestResult(
        statistic=stat,
        m_trajectory=tuple(trajectories),
        best_alpha_index=j,
        fitted=finals[j],
        null_fit=null,
        p_value=pvalue(stat),
        alphas=config.alphas,
        equal_variance=regime.equal,
        fits=tuple(finals),
    )
