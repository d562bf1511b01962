"""Pure-Python/numpy EM kernel; mirrors ``_ckernels.pyx`` step for step."""

import math

import numpy as np

LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
ALPHA_MIN = 1e-12
VAR_FLOOR = 1e-24  # relative to s_n^2
EMPTY = 1e-300

BACKEND = "python"


def alpha_penalty(alpha, kind):
    if kind == 1:
        return math.log(1.0 - abs(1.0 - 2.0 * alpha))
    if kind == 2:
        return math.log(4.0 * alpha * (1.0 - alpha))
    return 0.0


def alpha_update(sum_w, n, kind):
    if kind == 1:
        a = (sum_w + 1.0) / (n + 1.0)
    elif kind == 2:
        a = (sum_w + 1.0) / (n + 2.0)
    else:
        a = sum_w / n
    return min(max(a, ALPHA_MIN), 0.5)


def sigma_penalty(var, sn2, coef):
    if coef == 0.0:
        return 0.0
    r = sn2 / var
    return -coef * (r - math.log(r))


def em_fit(x, alpha, theta1, theta2, var1, var2, sn2, equal, sigma_coef,
           alpha_kind, update_alpha, max_iter, tol):
    """Run EM on the penalized two-component likelihood.

    Performs at most ``max_iter`` E/M rounds, stopping early once the
    objective moves by no more than ``tol`` (``tol <= 0`` runs all rounds).
    Returns ``(alpha, theta1, theta2, var1, var2, objective, rounds)`` where
    the objective is evaluated at the returned parameters.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    floor = VAR_FLOOR * sn2
    prev = 0.0
    it = 0
    while True:
        lv1 = math.log(var1)
        lv2 = math.log(var2)
        a = math.log1p(-alpha) - 0.5 * lv1 - (x - theta1) ** 2 / (2.0 * var1)
        b = math.log(alpha) - 0.5 * lv2 - (x - theta2) ** 2 / (2.0 * var2)
        # one exp serves both the log-sum and the posterior weight
        upper = b >= a
        e = np.exp(-np.abs(a - b))
        lse = np.where(upper, b, a) + np.log1p(e)
        degenerate = theta1 == theta2 and var1 == var2
        if degenerate:
            w = np.full(n, alpha)
        else:
            w = np.where(upper, 1.0 / (1.0 + e), e / (1.0 + e))
        obj = float(lse.sum()) - n * LOG_SQRT_2PI
        if equal:
            obj += sigma_penalty(var1, sn2, sigma_coef)
        else:
            obj += sigma_penalty(var1, sn2, sigma_coef) + sigma_penalty(var2, sn2, sigma_coef)
        obj += alpha_penalty(alpha, alpha_kind)

        if it == max_iter or (tol > 0.0 and it > 0 and abs(obj - prev) <= tol):
            return alpha, theta1, theta2, var1, var2, obj, it
        prev = obj
        it += 1

        w1 = 1.0 - w
        n2 = float(w.sum())
        n1 = float(w1.sum())
        if update_alpha:
            alpha = alpha_update(n2, n, alpha_kind)
        if degenerate:
            continue
        if n1 > EMPTY:
            theta1 = float((w1 * x).sum()) / n1
        if n2 > EMPTY:
            theta2 = float((w * x).sum()) / n2
        ss1 = float((w1 * (x - theta1) ** 2).sum())
        ss2 = float((w * (x - theta2) ** 2).sum())
        if equal:
            var1 = max((ss1 + ss2 + 2.0 * sigma_coef * sn2) / (n + 2.0 * sigma_coef), floor)
            var2 = var1
        else:
            if n1 > EMPTY:
                var1 = max((ss1 + 2.0 * sigma_coef * sn2) / (n1 + 2.0 * sigma_coef), floor)
            if n2 > EMPTY:
                var2 = max((ss2 + 2.0 * sigma_coef * sn2) / (n2 + 2.0 * sigma_coef), floor)
