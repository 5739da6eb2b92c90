"""Gradient projection over the weighted simplex for the diagonal dual variable.

Minimizes ``f(q) = alpha @ q - sum_k log|V_k^H diag(q) V_k|`` subject to
``weights @ q == budget`` and ``q >= 0``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular

from .errors import DomainError
from .kernels import simplex_gamma

Q_FLOOR = 1e-12


@dataclass
class QSubproblem:
    alpha: np.ndarray
    bases: list[np.ndarray]
    weights: np.ndarray
    budget: float
    _identity: list[bool] = field(init=False, repr=False)

    def __post_init__(self):
        self.alpha = np.asarray(self.alpha, dtype=float)
        self.weights = np.asarray(self.weights, dtype=float)
        if np.any(self.weights <= 0) or self.budget <= 0:
            raise ValueError("weights and budget must be positive")
        n = self.alpha.size
        self._identity = [V.shape == (n, n) and np.allclose(V, np.eye(n), rtol=0, atol=0)
                          for V in self.bases]


@dataclass
class GpReport:
    iterations: int
    final_tau: float
    objective_trace: list[float]
    converged: bool


def _logdet_terms(prob: QSubproblem, q, want_grad):
    qf = np.maximum(q, Q_FLOOR)
    total = 0.0
    grad = np.zeros_like(qf) if want_grad else None
    for V, ident in zip(prob.bases, prob._identity):
        if ident:
            total += float(np.sum(np.log(qf)))
            if want_grad:
                grad += 1.0 / qf
            continue
        A = (V.conj().T * qf) @ V
        try:
            L = np.linalg.cholesky(0.5 * (A + A.conj().T))
        except np.linalg.LinAlgError as exc:
            raise DomainError("V^H diag(q) V is singular") from exc
        total += 2.0 * float(np.sum(np.log(np.diag(L).real)))
        if want_grad:
            X = solve_triangular(L, V.conj().T, lower=True)
            grad += np.sum(np.abs(X) ** 2, axis=0)
    return total, grad


def q_objective(prob: QSubproblem, q):
    logdet, _ = _logdet_terms(prob, np.asarray(q, dtype=float), False)
    return float(prob.alpha @ q) - logdet


def q_gradient(prob: QSubproblem, q):
    """``alpha_i - sum_k [V_k (V_k^H diag(q) V_k)^{-1} V_k^H]_ii``."""
    _, g = _logdet_terms(prob, np.asarray(q, dtype=float), True)
    return prob.alpha - g


def project_weighted_simplex(point, weights, budget):
    """Euclidean projection onto ``{q >= 0 : weights @ q == budget}``."""
    point = np.asarray(point, dtype=float)
    gamma = simplex_gamma(point, weights, float(budget))
    return np.maximum(point - gamma * np.asarray(weights, dtype=float), 0.0)


def gp_solve(prob: QSubproblem, q0, epsilon=1e-6, max_iter=10_000, step=1.0,
             armijo_c=1e-4, backtrack=0.5, scaling=None):
    """Run gradient projection from a feasible ``q0``; returns ``(q, GpReport)``.

    With ``scaling = c`` the iteration runs in coordinates ``x = q / c``, where
    the feasible set is the weighted simplex with weights ``weights * c``.
    """
    c = np.ones_like(prob.weights) if scaling is None else np.asarray(scaling, dtype=float)
    w = prob.weights * c
    q = np.asarray(q0, dtype=float).copy()
    f = q_objective(prob, q)
    trace = [f]
    tau = np.inf
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        g = q_gradient(prob, q)
        x = q / c
        direction = c * project_weighted_simplex(x - step * c * g, w, prob.budget) - q
        slope = float(g @ direction)
        beta = 1.0
        q_new, f_new = q, f
        while beta > 1e-20:
            trial = q + beta * direction
            try:
                f_trial = q_objective(prob, trial)
            except DomainError:
                f_trial = np.inf
            if f_trial <= f + armijo_c * beta * slope:
                q_new, f_new = trial, f_trial
                break
            beta *= backtrack
        tau = abs(float(g @ (q_new - q)))
        q, f = q_new, f_new
        trace.append(f)
        if tau <= epsilon:
            converged = True
            break
    return q, GpReport(it, tau, trace, converged)
