"""Inner MAC step: sum-power water-filling over whitened parallel channels."""
from __future__ import annotations

import numpy as np
from scipy.linalg import solve_triangular

from .effective import EffectiveChannelSet
from .errors import DegenerateChannelError
from .kernels import water_level

FLOOR_REL = 1e-12
GAIN_TOL = 1e-14


def noise_gram(q, V):
    """``V^H diag(q) V``, floored so that it is positive definite."""
    q = np.asarray(q, dtype=float)
    A = (V.conj().T * q) @ V
    A = 0.5 * (A + A.conj().T)
    d = A.shape[0]
    floor = FLOOR_REL * max(float(np.trace(A).real), 0.0) / d
    if floor == 0.0:
        floor = FLOOR_REL
    if q.min() < floor:
        lam = np.linalg.eigvalsh(A)[0]
        if lam < floor:
            A = A + floor * np.eye(d)
    return A


def whitened_modes(q, eff: EffectiveChannelSet):
    """Per-user ``(logdet A_k, sigma_k, W_k)`` from the SVD of ``L_k^{-1} H_k^H``."""
    out = []
    for Vk, Hk in zip(eff.bases, eff.eff_channels):
        A = noise_gram(q, Vk)
        L = np.linalg.cholesky(A)
        F = solve_triangular(L, Hk.conj().T, lower=True)
        _, s, wh = np.linalg.svd(F, full_matrices=False)
        logdet = 2.0 * float(np.sum(np.log(np.diag(L).real)))
        out.append((logdet, s, wh.conj().T))
    return out


def solve_inner(q, eff: EffectiveChannelSet, total_power):
    """Maximize ``sum_k log|A_k + H_k^H S_k H_k|`` subject to ``sum_k tr S_k = total_power``.

    Returns the uplink covariances (M x M each) and the achieved objective.
    """
    modes = whitened_modes(q, eff)
    gains = np.concatenate([s ** 2 for _, s, _ in modes])
    gmax = gains.max() if gains.size else 0.0
    usable = gains > GAIN_TOL * max(gmax, 1.0)
    if total_power > 0 and not usable.any():
        raise DegenerateChannelError("all effective channel gains vanish")
    mu = water_level(1.0 / gains[usable], total_power) if usable.any() else 0.0

    covs = []
    value = 0.0
    M = eff.eff_channels[0].shape[0]
    for logdet, s, W in modes:
        g = s ** 2
        ok = g > GAIN_TOL * max(gmax, 1.0)
        rho = np.zeros_like(g)
        rho[ok] = np.maximum(mu - 1.0 / g[ok], 0.0)
        S = (W * rho) @ W.conj().T if rho.size else np.zeros((M, M), dtype=complex)
        covs.append(0.5 * (S + S.conj().T))
        value += logdet + float(np.sum(np.log1p(rho * g)))
    return covs, value
