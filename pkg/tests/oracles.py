"""Independent reference computations for the test suite.

Everything here is written against scipy directly (norm.logpdf, logsumexp,
general-purpose optimizers) and never calls into the package's numerics.
"""

import numpy as np
from scipy import optimize
from scipy.special import logsumexp
from scipy.stats import norm


def mixture_loglik(x, alpha, t1, t2, s1, s2):
    x = np.asarray(x, dtype=float)
    comps = np.vstack([np.log1p(-alpha) + norm.logpdf(x, t1, s1),
                       np.log(alpha) + norm.logpdf(x, t2, s2)])
    return float(logsumexp(comps, axis=0).sum())


def sigma_pen(sigma, sn2, c):
    return -c * (sn2 / sigma**2 + np.log(sigma**2 / sn2))


def alpha_pen(alpha):
    return np.log(1.0 - abs(1.0 - 2.0 * alpha))


def pl_equal(x, alpha, t1, t2, s):
    sn2 = np.var(x)
    return mixture_loglik(x, alpha, t1, t2, s, s) + sigma_pen(s, sn2, 1.0) + alpha_pen(alpha)


def pl_unequal(x, alpha, t1, t2, s1, s2):
    sn2 = np.var(x)
    return (mixture_loglik(x, alpha, t1, t2, s1, s2) + sigma_pen(s1, sn2, 0.25)
            + sigma_pen(s2, sn2, 0.25) + alpha_pen(alpha))


def maximize(f, starts, method="Nelder-Mead"):
    """Maximize ``f`` from each start; polish with BFGS; return (x, fmax)."""
    best = None
    for s in starts:
        r = optimize.minimize(lambda p: -f(p), s, method=method,
                              options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 20000,
                                       "maxfev": 40000})
        r2 = optimize.minimize(lambda p: -f(p), r.x, method="BFGS", options={"gtol": 1e-9})
        cand = r2 if r2.fun <= r.fun else r
        if best is None or cand.fun < best.fun:
            best = cand
    return best.x, -best.fun


def random_starts(rng, x, k, dim_means=2, dim_logsd=1):
    m, s = np.mean(x), np.std(x)
    out = []
    for _ in range(k):
        means = m + s * rng.normal(size=dim_means)
        logsd = np.log(s) + 0.3 * rng.normal(size=dim_logsd)
        out.append(np.concatenate([means, logsd]))
    return out
