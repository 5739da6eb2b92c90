"""Pure-Python versions of the scalar kernels.

Used when the compiled ``_kernels`` extension is not built, or when
``SZFDPC_PURE_PYTHON=1`` is set.
"""
import numpy as np


def water_level(inv_gains, total_power):
    """Water level ``mu`` with ``sum(max(mu - inv_gains, 0)) == total_power``.

    Scans the sorted breakpoints, so the result is exact up to rounding.
    """
    a = np.sort(np.asarray(inv_gains, dtype=float))
    n = a.size
    if n == 0:
        if total_power > 0:
            raise ValueError("no channel modes to pour power into")
        return 0.0
    if total_power <= 0:
        return float(a[0])
    csum = 0.0
    mu = a[0] + total_power
    for j in range(n):
        csum += a[j]
        mu = (total_power + csum) / (j + 1)
        if j + 1 == n or mu <= a[j + 1]:
            break
    return float(mu)


def simplex_gamma(point, weights, budget, gamma_tol=1e-12, resid_tol=1e-10, max_iter=500):
    """Multiplier ``gamma`` solving ``weights @ max(point - gamma*weights, 0) == budget``.

    Bisection on the monotone residual, then a closed-form polish on the
    identified active set.
    """
    x = np.asarray(point, dtype=float)
    w = np.asarray(weights, dtype=float)
    ratios = x / w
    hi = float(ratios.max())
    lo = float(ratios.min()) - budget / float(w @ w)
    step = max(1.0, abs(lo))
    while w @ np.maximum(x - lo * w, 0.0) < budget:
        lo -= step
        step *= 2.0
    tol = resid_tol * budget
    gamma = 0.5 * (lo + hi)
    for _ in range(max_iter):
        gamma = 0.5 * (lo + hi)
        r = w @ np.maximum(x - gamma * w, 0.0) - budget
        if abs(r) <= tol or hi - lo <= gamma_tol:
            break
        if r > 0:
            lo = gamma
        else:
            hi = gamma
    return _polish(x, w, budget, gamma)


def _polish(x, w, budget, gamma, rounds=4):
    """Solve for gamma in closed form on the active set until the set is self-consistent."""
    def resid(g):
        return abs(w @ np.maximum(x - g * w, 0.0) - budget)

    active = x - gamma * w > 0
    for _ in range(rounds):
        if not active.any():
            break
        wa = w[active]
        cand = (wa @ x[active] - budget) / (wa @ wa)
        nxt = x - cand * w > 0
        if np.array_equal(nxt, active):
            if resid(cand) <= resid(gamma):
                gamma = cand
            break
        active = nxt
    return float(gamma)
