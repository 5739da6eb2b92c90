"""Independent desk-scale verifiers.

``barrier_primal_solve`` attacks the downlink problem directly, without
any duality: it maximizes the SZFDPC sum rate over Hermitian covariances
with log-barriers on positive semidefiniteness and on each antenna's
power limit, following the central path with damped Newton steps.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .effective import EffectiveChannelSet, papc_usage

MAX_N = 12


@dataclass
class OracleResult:
    rate: float
    covs: list[np.ndarray]
    barrier_rounds: int
    kkt_residual: float
    converged: bool = True
    rate_trace: list[float] = field(default_factory=list)
    kkt_trace: list[float] = field(default_factory=list)


def hermitian_basis(d):
    """Frobenius-orthonormal real basis of d x d Hermitian matrices, shape (d*d, d, d)."""
    E = []
    for i in range(d):
        B = np.zeros((d, d), dtype=complex)
        B[i, i] = 1.0
        E.append(B)
    s = 1.0 / np.sqrt(2.0)
    for i in range(d):
        for j in range(i + 1, d):
            B = np.zeros((d, d), dtype=complex)
            B[i, j] = B[j, i] = s
            E.append(B)
            B = np.zeros((d, d), dtype=complex)
            B[i, j], B[j, i] = -1j * s, 1j * s
            E.append(B)
    return np.array(E)


class _BarrierProblem:
    def __init__(self, eff: EffectiveChannelSet, p):
        self.eff = eff
        self.p = np.asarray(p, dtype=float)
        self.basis = [hermitian_basis(V.shape[1]) for V in eff.bases]
        self.sizes = [E.shape[0] for E in self.basis]
        self.offsets = np.concatenate([[0], np.cumsum(self.sizes)])
        # usage_i is linear in the parameters
        self.C = np.hstack([np.einsum("ij,ajk,ik->ia", V, E, V.conj()).real
                            for V, E in zip(eff.bases, self.basis)])
        self.m = sum(V.shape[1] for V in eff.bases) + eff.n_tx

    def covs(self, theta):
        return [np.einsum("a,ajk->jk", theta[o:o + n], E)
                for o, n, E in zip(self.offsets, self.sizes, self.basis)]

    def feasible(self, theta):
        for S in self.covs(theta):
            try:
                np.linalg.cholesky(S)
            except np.linalg.LinAlgError:
                return False
        return bool(np.all(self.p - self.C @ theta > 0))

    def rate(self, theta):
        total = 0.0
        for H, S in zip(self.eff.eff_channels, self.covs(theta)):
            total += np.linalg.slogdet(np.eye(H.shape[0]) + H @ S @ H.conj().T)[1]
        return float(total)

    def derivatives(self, theta, t):
        """Gradient and Hessian of ``t * rate + sum log det S_k + sum log slack_i``."""
        D = theta.size
        grad = np.zeros(D)
        hess = np.zeros((D, D))
        for k, (H, S, E) in enumerate(zip(self.eff.eff_channels, self.covs(theta), self.basis)):
            sl = slice(self.offsets[k], self.offsets[k + 1])
            G = H.conj().T @ np.linalg.solve(np.eye(H.shape[0]) + H @ S @ H.conj().T, H)
            Si = np.linalg.inv(S)
            GE = np.einsum("ij,ajk->aik", G, E)
            SE = np.einsum("ij,ajk->aik", Si, E)
            grad[sl] = t * np.einsum("aii->a", GE).real + np.einsum("aii->a", SE).real
            hess[sl, sl] = -(t * np.einsum("aik,bki->ab", GE, GE).real
                             + np.einsum("aik,bki->ab", SE, SE).real)
        slack = self.p - self.C @ theta
        grad -= self.C.T @ (1.0 / slack)
        hess -= (self.C.T / slack ** 2) @ self.C
        return grad, hess


def barrier_primal_solve(eff: EffectiveChannelSet, p, tol=1e-8, t0=1.0, mu=10.0,
                         t_max=1e8, newton_tol=1e-12, max_newton=200):
    """Maximize the downlink sum rate under per-antenna limits by a log-barrier method.

    The barrier parameter grows from ``t0`` by ``mu`` per round until both
    ``t >= t_max`` and the barrier gap bound ``m / t`` is below ``tol``.
    """
    if eff.n_tx > MAX_N:
        raise ValueError(f"barrier oracle is limited to N <= {MAX_N}")
    prob = _BarrierProblem(eff, p)
    p = prob.p
    K = eff.n_users
    theta = np.zeros(prob.offsets[-1])
    c = 0.5 * p.min() / K
    for k, V in enumerate(eff.bases):
        d = V.shape[1]
        theta[prob.offsets[k]:prob.offsets[k] + d] = c
    t_final = max(t_max, prob.m / tol)

    t = t0
    rounds = 0
    converged = True
    rate_trace, kkt_trace = [], []
    while True:
        rounds += 1
        for _ in range(max_newton):
            grad, hess = prob.derivatives(theta, t)
            step = np.linalg.solve(-hess, grad)
            dec2 = float(grad @ step)
            if dec2 / 2 <= newton_tol:
                break
            lam = np.sqrt(max(dec2, 0.0))
            s = 1.0 if lam < 0.25 else 1.0 / (1.0 + lam)
            while not prob.feasible(theta + s * step):
                s *= 0.5
                if s < 1e-16:
                    break
            theta = theta + s * step
        else:
            converged = False
        grad, _ = prob.derivatives(theta, t)
        rate_trace.append(prob.rate(theta))
        kkt_trace.append(prob.m / t + float(np.linalg.norm(grad)) / t)
        if t >= t_final:
            break
        t = min(t * mu, t_final)
    covs = [0.5 * (S + S.conj().T) for S in prob.covs(theta)]
    return OracleResult(rate_trace[-1], covs, rounds, kkt_trace[-1], converged,
                        rate_trace, kkt_trace)


def brute_force_projection(point, weights, budget):
    """Exact weighted-simplex projection by enumerating every support set."""
    x = np.asarray(point, dtype=float)
    w = np.asarray(weights, dtype=float)
    n = x.size
    if n > MAX_N:
        raise ValueError(f"brute force limited to dimension <= {MAX_N}")
    masks = np.array(list(itertools.product([False, True], repeat=n))[1:])
    wa = masks * w
    gamma = ((wa * x).sum(axis=1) - budget) / (wa * w).sum(axis=1)
    cand = np.where(masks, x - gamma[:, None] * w, 0.0)
    ok = (cand >= -1e-14).all(axis=1)
    cand = np.maximum(cand[ok], 0.0)
    dist = ((cand - x) ** 2).sum(axis=1)
    return cand[np.argmin(dist)]


def fd_gradient(f, x, h=1e-6):
    """Central-difference gradient of a scalar function."""
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (f(x + e) - f(x - e)) / (2 * h)
    return g


def oracle_usage(eff, res: OracleResult):
    return papc_usage(eff, res.covs)
