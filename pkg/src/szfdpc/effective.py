"""Successive zero-forcing null-space chain and downlink rate evaluation."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channels import ChannelSet
from .errors import DegenerateChannelError, DimensionError, DomainError

RANK_TOL = 1e-10
PSD_TOL = 1e-8


@dataclass
class EffectiveChannelSet:
    """Per-user null-space bases ``V_k`` (N x d_k) and effective channels ``H_k V_k``."""
    bases: list[np.ndarray]
    eff_channels: list[np.ndarray]

    @property
    def n_users(self):
        return len(self.bases)

    @property
    def n_tx(self):
        return self.bases[0].shape[0]

    @property
    def dims(self):
        return [V.shape[1] for V in self.bases]


def null_space_basis(A, rank_tol=RANK_TOL):
    """Orthonormal basis of the null space of ``A`` (rows x N), full row rank required."""
    A = np.atleast_2d(A)
    n = A.shape[1]
    _, s, vh = np.linalg.svd(A, full_matrices=True)
    rank = int(np.sum(s > rank_tol * s[0])) if s.size and s[0] > 0 else 0
    if rank < A.shape[0]:
        raise DegenerateChannelError(
            f"stacked channel has rank {rank} < {A.shape[0]}; degenerate draw")
    return vh[rank:n].conj().T


def effective_channels(chans: ChannelSet) -> EffectiveChannelSet:
    H = chans.channels
    M, N = H[0].shape
    K = len(H)
    if N <= (K - 1) * M:
        raise DimensionError(f"SZFDPC needs N > (K-1)M, got N={N} M={M} K={K}")
    bases = [np.eye(N, dtype=complex)]
    for k in range(1, K):
        bases.append(null_space_basis(np.vstack(H[:k])))
    return EffectiveChannelSet(bases, [Hk @ Vk for Hk, Vk in zip(H, bases)])


def _check_psd(S, name="covariance"):
    S = np.asarray(S)
    if S.size and np.linalg.eigvalsh(0.5 * (S + S.conj().T)).min() < -PSD_TOL:
        raise DomainError(f"{name} is not positive semidefinite")


def user_rates(eff: EffectiveChannelSet, covs):
    """Per-user rates ``log|I + H S H^H|`` in nats."""
    rates = []
    for Hk, Sk in zip(eff.eff_channels, covs):
        if Sk.shape != (Hk.shape[1], Hk.shape[1]):
            raise DimensionError(f"covariance shape {Sk.shape} does not match d_k={Hk.shape[1]}")
        _check_psd(Sk)
        G = np.eye(Hk.shape[0]) + Hk @ Sk @ Hk.conj().T
        sign, logdet = np.linalg.slogdet(G)
        rates.append(float(logdet))
    return np.array(rates)


def bc_sum_rate(eff: EffectiveChannelSet, covs):
    """Sum of per-user downlink log-det rates (nats)."""
    return float(user_rates(eff, covs).sum())


def papc_usage(eff: EffectiveChannelSet, covs):
    """Power drawn from each transmit antenna, ``sum_k diag(V_k S_k V_k^H)``."""
    usage = np.zeros(eff.n_tx)
    for Vk, Sk in zip(eff.bases, covs):
        if Sk.shape != (Vk.shape[1], Vk.shape[1]):
            raise DimensionError(f"covariance shape {Sk.shape} does not match d_k={Vk.shape[1]}")
        usage += np.einsum("ij,jk,ik->i", Vk, Sk, Vk.conj()).real
    return usage


def full_covariances(eff: EffectiveChannelSet, covs):
    return [Vk @ Sk @ Vk.conj().T for Vk, Sk in zip(eff.bases, covs)]


def zero_interference_residual(chans: ChannelSet, covs_full):
    """Worst normalized leakage ``||H_j S_k H_j^H||_F`` over pairs j < k."""
    H = chans.channels
    worst = 0.0
    for k, Sk in enumerate(covs_full):
        scale = max(float(np.trace(Sk).real), 1.0)
        for j in range(k):
            leak = np.linalg.norm(H[j] @ Sk @ H[j].conj().T)
            worst = max(worst, leak / (np.linalg.norm(H[j]) ** 2 * scale))
    return worst
