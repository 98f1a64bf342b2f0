# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled cost kernels.

Same contracts as riskprobe._kernels.pure; the trace functions take 1-D
contiguous float64 arrays, risk_profile takes (n_others, n_steps) blocks.
"""

from libc.math cimport erf, exp, fabs

import numpy as np

BACKEND = "compiled"

cdef double SQRT1_2 = 0.7071067811865476


def survival_trace(double[::1] total_rate, double escape_rate, double ds):
    cdef Py_ssize_t n = total_rate.shape[0]
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] s = out
    cdef Py_ssize_t i
    cdef double hazard = 0.0
    s[0] = 1.0
    for i in range(1, n):
        hazard += 0.5 * ds * (total_rate[i - 1] + total_rate[i] + 2.0 * escape_rate)
        s[i] = exp(-hazard)
    return out


cdef inline double _collision_rate(double gap, double sigma_sq, double tau_hat_inv) nogil:
    if sigma_sq > 0.0:
        return tau_hat_inv * exp(-0.5 * gap * gap / sigma_sq)
    return tau_hat_inv if gap <= 0.0 else 0.0


cdef inline double _phi(double z) nogil:
    return 0.5 * (1.0 + erf(z * SQRT1_2))


def collision_rate_trace(double[::1] gap, double[::1] sigma_sq, double tau_hat_inv):
    cdef Py_ssize_t n = gap.shape[0]
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] r = out
    cdef Py_ssize_t i
    for i in range(n):
        r[i] = _collision_rate(gap[i], sigma_sq[i], tau_hat_inv)
    return out


def curve_rate_trace(double[::1] v, double[::1] kappa, double tau_hat_inv,
                     double a_crit, double sigma_a):
    cdef Py_ssize_t n = v.shape[0]
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] r = out
    cdef Py_ssize_t i
    cdef double a_lat
    for i in range(n):
        a_lat = v[i] * v[i] * fabs(kappa[i])
        r[i] = tau_hat_inv * _phi((a_lat - a_crit) / sigma_a)
    return out


def risk_profile(double[:, ::1] gap, double[:, ::1] sigma_sq, double[:, ::1] damage,
                 double[::1] v, double[::1] kappa,
                 double tau_coll_inv, double tau_curv_inv, double a_crit, double sigma_a,
                 double d_curv, double escape_rate, double ds):
    cdef Py_ssize_t m = gap.shape[0]
    cdef Py_ssize_t n = v.shape[0]
    rate_out = np.empty(n, dtype=np.float64)
    surv_out = np.empty(n, dtype=np.float64)
    cdef double[::1] rate = rate_out
    cdef double[::1] surv = surv_out
    cdef double[::1] weighted = np.empty(n, dtype=np.float64)
    cdef Py_ssize_t i, j
    cdef double acc, dacc, r, a_lat, curve, hazard, risk
    for i in range(n):
        acc = 0.0
        dacc = 0.0
        for j in range(m):
            r = _collision_rate(gap[j, i], sigma_sq[j, i], tau_coll_inv)
            acc += r
            dacc += r * damage[j, i]
        a_lat = v[i] * v[i] * fabs(kappa[i])
        curve = tau_curv_inv * _phi((a_lat - a_crit) / sigma_a)
        rate[i] = acc + curve
        weighted[i] = dacc + curve * d_curv
    hazard = 0.0
    risk = 0.0
    surv[0] = 1.0
    for i in range(1, n):
        hazard += 0.5 * ds * (rate[i - 1] + rate[i] + 2.0 * escape_rate)
        surv[i] = exp(-hazard)
        risk += 0.5 * ds * (weighted[i - 1] * surv[i - 1] + weighted[i] * surv[i])
    return risk, rate_out, surv_out


def weighted_trapezoid(double[::1] values, double[::1] survival, double ds):
    cdef Py_ssize_t n = values.shape[0]
    cdef Py_ssize_t i
    cdef double acc = 0.0
    for i in range(1, n):
        acc += 0.5 * ds * (values[i - 1] * survival[i - 1] + values[i] * survival[i])
    return acc
