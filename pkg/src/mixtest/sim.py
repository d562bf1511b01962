"""Seeded Monte Carlo studies of size and power.

Replicate ``r`` of a study with master seed ``s`` draws from its own Philox
stream keyed by ``(s, purpose, r)``, so results never depend on how the
replicates are spread over worker processes. Normal variates come from the
inverse normal CDF applied to 53-bit uniforms.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtri

from . import comparators, limit_dist
from .core import ConfigurationError, Sample
from .em_equal import em_test, equal_pvalue_function
from .em_unequal import em_test_u
from .emdriver import EMTestConfig

PURPOSE_STUDY = 0
PURPOSE_CRITICAL = 1


@dataclass(frozen=True)
class ModelSpec:
    name: str
    one_minus_alpha: float
    theta1: float
    theta2: float
    sigma1: float
    sigma2: float

    def __post_init__(self):
        if not 0.0 < self.one_minus_alpha < 1.0:
            raise ValueError("one_minus_alpha must lie in (0, 1)")
        if not (self.sigma1 > 0.0 and self.sigma2 > 0.0):
            raise ValueError("component standard deviations must be positive")

    @property
    def alpha(self) -> float:
        return 1.0 - self.one_minus_alpha

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "one_minus_alpha": self.one_minus_alpha,
            "theta1": self.theta1,
            "theta2": self.theta2,
            "sigma1": self.sigma1,
            "sigma2": self.sigma2,
        }


def _registry():
    rows = {
        "I": (0.50, -1.15, 1.20, 1.00, 1.00),
        "II": (0.25, -1.15, 1.15, 1.00, 1.00),
        "III": (0.10, -1.30, 1.30, 1.00, 1.00),
        "IV": (0.05, -1.55, 1.55, 1.00, 1.00),
        "V": (0.50, 0.0, 0.0, 1.20, 0.50),
        "VI": (0.25, 0.0, 0.0, 1.15, 0.50),
        "VII": (0.10, 0.0, 0.0, 1.40, 0.50),
        "VIII": (0.05, 0.0, 0.0, 1.85, 0.50),
        "IX": (0.50, 0.75, -0.75, 1.20, 0.80),
        "X": (0.25, 0.65, -0.65, 1.20, 0.80),
        "XI": (0.10, 0.85, -0.85, 1.20, 0.80),
        "XII": (0.05, 1.15, -1.15, 1.20, 0.80),
    }
    return {k: ModelSpec(k, *v) for k, v in rows.items()}


MODELS = _registry()
NULL_MODEL = ModelSpec("null", 0.5, 0.0, 0.0, 1.0, 1.0)


def get_model(name: str) -> ModelSpec:
    try:
        return MODELS[name.upper()]
    except KeyError:
        raise KeyError(f"unknown model {name!r}; choose from {', '.join(MODELS)}") from None


# -- random streams -------------------------------------------------------

def replicate_stream(seed: int, replicate: int, purpose: int = PURPOSE_STUDY) -> np.random.Generator:
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, purpose, replicate])
    return np.random.Generator(np.random.Philox(ss))


def _uniforms(stream: np.random.Generator, size: int) -> np.ndarray:
    # midpoints of a 2^-53 grid: strictly inside (0, 1)
    k = stream.integers(0, 1 << 53, size=size, dtype=np.int64)
    return (k.astype(np.float64) + 0.5) * (1.0 / (1 << 53))


def draw_sample(spec: ModelSpec, n: int, stream: np.random.Generator) -> Sample:
    if n < 2:
        raise ValueError("n must be >= 2")
    labels = _uniforms(stream, n) < spec.alpha
    z = ndtri(_uniforms(stream, n))
    x = np.where(labels, spec.theta2 + spec.sigma2 * z, spec.theta1 + spec.sigma1 * z)
    return Sample.from_values(x)


# -- methods --------------------------------------------------------------

METHODS = ("em-equal", "em-unequal", "mlrt-equal", "mlrt-unequal", "lrt-equal")


def statistic(method: str, sample: Sample, config: EMTestConfig | None = None) -> float:
    config = config or EMTestConfig()
    if method == "em-equal":
        return em_test(sample, config).statistic
    if method == "em-unequal":
        return em_test_u(sample, config).statistic
    if method == "mlrt-equal":
        return comparators.mlrt_equal(sample)
    if method == "mlrt-unequal":
        return comparators.mlrt_unequal(sample)
    if method == "lrt-equal":
        return comparators.lrt_equal(sample)
    if method == "chi2-2":
        # exact chi2_2 draw: used to check the quantile machinery
        return float(sample.values[0] ** 2 + sample.values[1] ** 2)
    raise ConfigurationError(f"unknown method {method!r}")


def asymptotic_pvalue(method: str, stat: float, config: EMTestConfig | None = None) -> float:
    """P-value from the method's limiting (or reference) law.

    The MLRTs are referred to chi2_2; the LRT has no usable limit law.
    """
    config = config or EMTestConfig()
    if method == "em-equal":
        return equal_pvalue_function(config.alphas)(stat)
    if method in ("em-unequal", "mlrt-equal", "mlrt-unequal", "chi2-2"):
        return limit_dist.pvalue_unequal(stat)
    raise ConfigurationError(f"{method} has no asymptotic law; use simulated critical values")


# -- parallel map ---------------------------------------------------------

def default_workers() -> int:
    env = os.environ.get("MIXTEST_THREADS")
    cpus = os.cpu_count() or 1
    if env:
        return max(1, min(int(env), cpus))
    return cpus


def _chunk(args):
    method, spec, n, seed, purpose, config, lo, hi = args
    out = np.empty(hi - lo)
    for r in range(lo, hi):
        sample = draw_sample(spec, n, replicate_stream(seed, r, purpose))
        out[r - lo] = statistic(method, sample, config)
    return lo, out


def simulate_statistics(method: str, spec: ModelSpec, n: int, reps: int, seed: int, *,
                        purpose: int = PURPOSE_STUDY, config: EMTestConfig | None = None,
                        workers: int | None = None) -> np.ndarray:
    """Statistic of ``method`` on ``reps`` samples of size ``n`` from ``spec``."""
    config = config or EMTestConfig()
    workers = default_workers() if workers is None else max(1, int(workers))
    nchunks = 1 if workers == 1 else workers * 4
    bounds = np.linspace(0, reps, nchunks + 1).astype(int)
    tasks = [(method, spec, n, seed, purpose, config, int(lo), int(hi))
             for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo]
    out = np.empty(reps)
    if workers == 1:
        results = map(_chunk, tasks)
    else:
        pool = ProcessPoolExecutor(max_workers=workers)
        results = pool.map(_chunk, tasks)
    for lo, vals in results:
        out[lo:lo + vals.size] = vals
    if workers != 1:
        pool.shutdown()
    return out


def simulate_null_statistics(method, n, reps, seed, *, config=None, workers=None):
    return simulate_statistics(method, NULL_MODEL, n, reps, seed, purpose=PURPOSE_CRITICAL,
                               config=config, workers=workers)


# -- studies --------------------------------------------------------------

@dataclass(frozen=True)
class SimReport:
    kind: str  # "type1" or "power"
    method: str
    n: int
    reps: int
    seed: int
    model: ModelSpec
    critical_source: str  # "asymptotic" or "simulated"
    rates: dict  # level -> rejection rate
    critical_values: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)

    def __post_init__(self):
        if any(not 0.0 <= r <= 1.0 for r in self.rates.values()):
            raise ValueError("rejection rates must lie in [0, 1]")

    def se(self, level: float) -> float:
        r = self.rates[level]
        return math.sqrt(r * (1.0 - r) / self.reps)

    def as_dict(self) -> dict:
        levels = sorted(self.rates, reverse=True)
        return {
            "kind": self.kind,
            "method": self.method,
            "n": self.n,
            "reps": self.reps,
            "seed": self.seed,
            "model": self.model.as_dict(),
            "critical_source": self.critical_source,
            "config": self.config,
            "levels": [
                {
                    "level": lv,
                    "rate": self.rates[lv],
                    "se": self.se(lv),
                    "critical_value": self.critical_values.get(lv),
                }
                for lv in levels
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SimReport":
        rows = d["levels"]
        crit = {r["level"]: r["critical_value"] for r in rows if r["critical_value"] is not None}
        return cls(
            kind=d["kind"], method=d["method"], n=d["n"], reps=d["reps"], seed=d["seed"],
            model=ModelSpec(**d["model"]), critical_source=d["critical_source"],
            rates={r["level"]: r["rate"] for r in rows}, critical_values=crit,
            config=d.get("config", {}),
        )

    def to_text(self) -> str:
        head = (f"{self.kind} study: {self.method}, model {self.model.name}, n={self.n}, "
                f"reps={self.reps}, seed={self.seed}, critical values {self.critical_source}")
        lines = [head, f"{'level':>8} {'rate(%)':>9} {'se(%)':>7} {'critical':>10}"]
        for lv in sorted(self.rates, reverse=True):
            cv = self.critical_values.get(lv)
            cv_s = f"{cv:10.4f}" if cv is not None else f"{'-':>10}"
            lines.append(f"{100 * lv:7.2f}% {100 * self.rates[lv]:9.2f} "
                         f"{100 * self.se(lv):7.2f} {cv_s}")
        return "\n".join(lines)


def _asymptotic_critical(method: str, level: float, config: EMTestConfig) -> float | None:
    if level >= 1.0:
        return None
    if method == "em-equal":
        if 0.5 not in config.alphas:
            return limit_dist.quantile_shifted(level, limit_dist.delta(config.alphas))
        return limit_dist.quantile_equal(level, limit_dist.delta(config.alphas))
    return limit_dist.quantile_unequal(level)


def type1_study(method: str, n: int, reps: int, levels=(0.10, 0.05, 0.01), seed: int = 0, *,
                config: EMTestConfig | None = None, workers: int | None = None,
                min_reps: int = 1000) -> SimReport:
    """Null rejection rates at the method's asymptotic critical values."""
    config = config or EMTestConfig()
    if reps < min_reps:
        raise ValueError(f"reps must be >= {min_reps}")
    stats = simulate_statistics(method, NULL_MODEL, n, reps, seed, config=config, workers=workers)
    pvals = np.array([asymptotic_pvalue(method, s, config) for s in stats])
    rates = {float(lv): float(np.mean(pvals <= lv)) for lv in levels}
    crit = {float(lv): _asymptotic_critical(method, lv, config) for lv in levels}
    crit = {k: v for k, v in crit.items() if v is not None}
    return SimReport("type1", method, n, reps, seed, NULL_MODEL, "asymptotic", rates, crit,
                     config.as_dict())


def power_study(method: str, spec: ModelSpec, n: int, reps: int, level: float = 0.05,
                critical="simulated", seed: int = 0, *, null_reps: int | None = None,
                config: EMTestConfig | None = None, workers: int | None = None,
                min_reps: int = 1000) -> SimReport:
    """Rejection rate under ``spec``.

    ``critical`` is ``"asymptotic"``, ``"simulated"`` (a null table is built
    from an independent stream family, ``null_reps`` draws) or a ready
    :class:`~mixtest.comparators.CriticalValueTable`.
    """
    config = config or EMTestConfig()
    if reps < min_reps:
        raise ValueError(f"reps must be >= {min_reps}")
    stats = simulate_statistics(method, spec, n, reps, seed, config=config, workers=workers)
    if isinstance(critical, comparators.CriticalValueTable):
        table = critical
        source = "simulated"
    elif critical == "simulated":
        table = comparators.simulate_critical_values(
            method, n, null_reps or reps, seed, levels=(level,), config=config,
            workers=workers, min_reps=min_reps)
        source = "simulated"
    elif critical == "asymptotic":
        table = None
        source = "asymptotic"
    else:
        raise ConfigurationError(f"unknown critical-value source {critical!r}")

    if table is None:
        pvals = np.array([asymptotic_pvalue(method, s, config) for s in stats])
        rate = float(np.mean(pvals <= level))
        cv = _asymptotic_critical(method, level, config)
    else:
        if table.method != method or table.n != n:
            raise ConfigurationError("critical-value table does not match method/n")
        cv = table.values[level]
        rate = float(np.mean(stats > cv))
    crit = {} if cv is None else {float(level): cv}
    return SimReport("power", method, n, reps, seed, spec, source, {float(level): rate}, crit,
                     config.as_dict())
