# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled scalar kernels: water level scan and weighted-simplex multiplier."""
import numpy as np

cimport cython


def water_level(inv_gains, double total_power):
    cdef double[::1] a = np.sort(np.ascontiguousarray(inv_gains, dtype=np.float64))
    cdef Py_ssize_t n = a.shape[0], j
    cdef double csum = 0.0, mu
    if n == 0:
        if total_power > 0:
            raise ValueError("no channel modes to pour power into")
        return 0.0
    if total_power <= 0:
        return a[0]
    mu = a[0] + total_power
    for j in range(n):
        csum += a[j]
        mu = (total_power + csum) / (j + 1)
        if j + 1 == n or mu <= a[j + 1]:
            break
    return mu


cdef double _resid(const double[::1] x, const double[::1] w, double gamma, double budget) nogil:
    cdef Py_ssize_t i
    cdef double s = 0.0, v
    for i in range(x.shape[0]):
        v = x[i] - gamma * w[i]
        if v > 0:
            s += w[i] * v
    return s - budget


def simplex_gamma(point, weights, double budget, double gamma_tol=1e-12,
                  double resid_tol=1e-10, int max_iter=500):
    cdef double[::1] x = np.ascontiguousarray(point, dtype=np.float64)
    cdef double[::1] w = np.ascontiguousarray(weights, dtype=np.float64)
    cdef Py_ssize_t n = x.shape[0], i
    cdef double lo, hi, ww = 0.0, r, ratio, step, tol, gamma
    cdef int it
    hi = x[0] / w[0]
    lo = hi
    for i in range(n):
        ratio = x[i] / w[i]
        if ratio > hi:
            hi = ratio
        if ratio < lo:
            lo = ratio
        ww += w[i] * w[i]
    lo -= budget / ww
    step = 1.0 if lo > -1.0 and lo < 1.0 else (lo if lo > 0 else -lo)
    while _resid(x, w, lo, budget) < 0:
        lo -= step
        step *= 2.0
    tol = resid_tol * budget
    gamma = 0.5 * (lo + hi)
    for it in range(max_iter):
        gamma = 0.5 * (lo + hi)
        r = _resid(x, w, gamma, budget)
        if (r if r > 0 else -r) <= tol or hi - lo <= gamma_tol:
            break
        if r > 0:
            lo = gamma
        else:
            hi = gamma
    return _polish(x, w, budget, gamma)


cdef double _polish(const double[::1] x, const double[::1] w, double budget, double gamma):
    cdef Py_ssize_t n = x.shape[0], i
    cdef int rnd
    cdef double num, den, cand, r_new, r_old, ref = gamma
    cdef bint same
    for rnd in range(4):
        num = 0.0
        den = 0.0
        for i in range(n):
            if x[i] - ref * w[i] > 0:
                num += w[i] * x[i]
                den += w[i] * w[i]
        if den == 0:
            break
        cand = (num - budget) / den
        same = True
        for i in range(n):
            if (x[i] - cand * w[i] > 0) != (x[i] - ref * w[i] > 0):
                same = False
                break
        if same:
            r_new = _resid(x, w, cand, budget)
            r_old = _resid(x, w, gamma, budget)
            if (r_new if r_new > 0 else -r_new) <= (r_old if r_old > 0 else -r_old):
                gamma = cand
            break
        ref = cand
    return gamma
