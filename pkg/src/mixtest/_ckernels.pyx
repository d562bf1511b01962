# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled EM kernel; same contract and arithmetic order as ``_pykernels``."""

from libc.math cimport exp, log, log1p, fabs
from libc.stdlib cimport malloc, free

cdef double LOG_SQRT_2PI = 0.91893853320467274178
cdef double ALPHA_MIN = 1e-12
cdef double VAR_FLOOR = 1e-24
cdef double EMPTY = 1e-300
cdef Py_ssize_t BLOCK_MASK = 511  # 2**512 is far below the double range

BACKEND = "cython"


cdef inline double _alpha_penalty(double alpha, int kind) noexcept nogil:
    if kind == 1:
        return log(1.0 - fabs(1.0 - 2.0 * alpha))
    if kind == 2:
        return log(4.0 * alpha * (1.0 - alpha))
    return 0.0


cdef inline double _alpha_update(double sum_w, Py_ssize_t n, int kind) noexcept nogil:
    cdef double a
    if kind == 1:
        a = (sum_w + 1.0) / (n + 1.0)
    elif kind == 2:
        a = (sum_w + 1.0) / (n + 2.0)
    else:
        a = sum_w / n
    if a < ALPHA_MIN:
        a = ALPHA_MIN
    if a > 0.5:
        a = 0.5
    return a


cdef inline double _sigma_penalty(double var, double sn2, double coef) noexcept nogil:
    cdef double r
    if coef == 0.0:
        return 0.0
    r = sn2 / var
    return -coef * (r - log(r))


def alpha_penalty(double alpha, int kind):
    return _alpha_penalty(alpha, kind)


def alpha_update(double sum_w, Py_ssize_t n, int kind):
    return _alpha_update(sum_w, n, kind)


def sigma_penalty(double var, double sn2, double coef):
    return _sigma_penalty(var, sn2, coef)


def em_fit(const double[::1] x, double alpha, double theta1, double theta2,
           double var1, double var2, double sn2, bint equal, double sigma_coef,
           int alpha_kind, bint update_alpha, int max_iter, double tol):
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t i
    cdef int it = 0
    cdef double floor = VAR_FLOOR * sn2
    cdef double prev = 0.0, obj, ll
    cdef double la1, la2, lv1, lv2, inv1, inv2, d, a, b, e, r, wi, prod
    cdef double n1, n2, s1, s2, ss1, ss2, v
    cdef bint degenerate
    cdef double *w = <double *> malloc(n * sizeof(double))
    if w == NULL:
        raise MemoryError()
    try:
        with nogil:
            while True:
                la1 = log1p(-alpha)
                la2 = log(alpha)
                lv1 = log(var1)
                lv2 = log(var2)
                inv1 = 1.0 / (2.0 * var1)
                inv2 = 1.0 / (2.0 * var2)
                degenerate = theta1 == theta2 and var1 == var2
                ll = 0.0
                prod = 1.0
                for i in range(n):
                    d = x[i] - theta1
                    a = la1 - 0.5 * lv1 - d * d * inv1
                    d = x[i] - theta2
                    b = la2 - 0.5 * lv2 - d * d * inv2
                    # one exp serves both the log-sum and the posterior weight
                    if b >= a:
                        e = exp(a - b)
                        ll += b
                        r = 1.0 / (1.0 + e)
                        wi = r
                    else:
                        e = exp(b - a)
                        ll += a
                        r = 1.0 / (1.0 + e)
                        wi = e * r
                    # factors lie in [1, 2]: one log per block instead of per point
                    prod *= 1.0 + e
                    if (i & BLOCK_MASK) == BLOCK_MASK:
                        ll += log(prod)
                        prod = 1.0
                    w[i] = alpha if degenerate else wi
                ll += log(prod)
                obj = ll - n * LOG_SQRT_2PI
                if equal:
                    obj += _sigma_penalty(var1, sn2, sigma_coef)
                else:
                    obj += _sigma_penalty(var1, sn2, sigma_coef) + _sigma_penalty(var2, sn2, sigma_coef)
                obj += _alpha_penalty(alpha, alpha_kind)

                if it == max_iter or (tol > 0.0 and it > 0 and fabs(obj - prev) <= tol):
                    break
                prev = obj
                it += 1

                n1 = 0.0
                n2 = 0.0
                s1 = 0.0
                s2 = 0.0
                for i in range(n):
                    wi = w[i]
                    n2 += wi
                    n1 += 1.0 - wi
                    s2 += wi * x[i]
                    s1 += (1.0 - wi) * x[i]
                if update_alpha:
                    alpha = _alpha_update(n2, n, alpha_kind)
                if degenerate:
                    continue
                if n1 > EMPTY:
                    theta1 = s1 / n1
                if n2 > EMPTY:
                    theta2 = s2 / n2
                ss1 = 0.0
                ss2 = 0.0
                for i in range(n):
                    wi = w[i]
                    d = x[i] - theta1
                    ss1 += (1.0 - wi) * d * d
                    d = x[i] - theta2
                    ss2 += wi * d * d
                if equal:
                    v = (ss1 + ss2 + 2.0 * sigma_coef * sn2) / (n + 2.0 * sigma_coef)
                    var1 = v if v > floor else floor
                    var2 = var1
                else:
                    if n1 > EMPTY:
                        v = (ss1 + 2.0 * sigma_coef * sn2) / (n1 + 2.0 * sigma_coef)
                        var1 = v if v > floor else floor
                    if n2 > EMPTY:
                        v = (ss2 + 2.0 * sigma_coef * sn2) / (n2 + 2.0 * sigma_coef)
                        var2 = v if v > floor else floor
    finally:
        free(w)
    return alpha, theta1, theta2, var1, var2, obj, it
