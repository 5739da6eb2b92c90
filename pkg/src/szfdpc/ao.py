"""Alternating optimization over the dual MAC and recovery of the downlink solution."""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular

from .channels import ChannelSet, ScenarioConfig
from .effective import (EffectiveChannelSet, bc_sum_rate, effective_channels,
                        full_covariances, papc_usage, user_rates,
                        zero_interference_residual)
from .errors import DomainError
from .gp import QSubproblem, gp_solve
from .waterfill import noise_gram, solve_inner

log = logging.getLogger(__name__)

EIG_FLOOR_REL = 1e-12
SCALE_FLOOR = 1e-12


@dataclass
class BcSolution:
    downlink_covs: list[np.ndarray]
    full_covs: list[np.ndarray]
    sum_rate: float
    papc_slack: np.ndarray
    user_rates: np.ndarray | None = None


@dataclass
class SolveReport:
    outer_iterations: int
    objective_trace: list[float]
    final_tau: float
    wall_time: float
    converged: bool
    minimax_value: float = float("nan")
    q: np.ndarray | None = None
    gp_iterations: list[int] = field(default_factory=list)
    gp_traces: list[list[float]] = field(default_factory=list)
    papc_rescale: float = 1.0
    trace_rows: list[tuple] = field(default_factory=list)


def _phi(q, eff, uplink_covs):
    out = []
    for Vk, Hk, Sk in zip(eff.bases, eff.eff_channels, uplink_covs):
        P = noise_gram(q, Vk) + Hk.conj().T @ Sk @ Hk
        out.append(0.5 * (P + P.conj().T))
    return out


def mac_objective(q, eff: EffectiveChannelSet, uplink_covs):
    """``sum_k log(|A_k + H_k^H S_k H_k| / |A_k|)`` with ``A_k = V_k^H diag(q) V_k``."""
    total = 0.0
    for Vk, Phi in zip(eff.bases, _phi(q, eff, uplink_covs)):
        A = noise_gram(q, Vk)
        total += np.linalg.slogdet(Phi)[1] - np.linalg.slogdet(A)[1]
    return float(total)


def sca_alpha(eff: EffectiveChannelSet, q, uplink_covs):
    """Linearization coefficients ``sum_k diag(V_k Phi_k^{-1} V_k^H)`` at ``q``."""
    alpha = np.zeros(eff.n_tx)
    for Vk, Phi in zip(eff.bases, _phi(q, eff, uplink_covs)):
        try:
            L = np.linalg.cholesky(Phi)
        except np.linalg.LinAlgError as exc:
            raise DomainError("Phi_k is singular") from exc
        X = solve_triangular(L, Vk.conj().T, lower=True)
        alpha += np.sum(np.abs(X) ** 2, axis=0)
    return alpha


def sca_surrogate(eff: EffectiveChannelSet, q_ref, uplink_covs, q):
    """Upper bound on ``sum_k log|V_k^H diag(q) V_k + H_k^H S_k H_k|``, tight at ``q_ref``."""
    base = sum(np.linalg.slogdet(P)[1] for P in _phi(q_ref, eff, uplink_covs))
    return float(base + sca_alpha(eff, q_ref, uplink_covs) @ (np.asarray(q) - q_ref))


def _inv_sqrt(B):
    lam, E = np.linalg.eigh(B)
    lam = np.maximum(lam, EIG_FLOOR_REL * lam[-1])
    return (E / np.sqrt(lam)) @ E.conj().T


def mac_to_bc(eff: EffectiveChannelSet, q, uplink_covs):
    """Map uplink covariances to downlink ones, preserving each user's rate."""
    covs = []
    for Vk, Hk, Sk in zip(eff.bases, eff.eff_channels, uplink_covs):
        Bm = _inv_sqrt(noise_gram(q, Vk))
        U, _, vh = np.linalg.svd(Bm @ Hk.conj().T, full_matrices=False)
        core = vh @ Sk @ vh.conj().T
        T = Bm @ U
        S = T @ core @ T.conj().T
        covs.append(0.5 * (S + S.conj().T))
    return covs


def _recover(eff, q, uplink, p, slack):
    """Downlink covariances for ``q``, scaled down uniformly so that no antenna
    exceeds its limit by more than half of ``slack`` watts."""
    downlink = mac_to_bc(eff, q, uplink)
    usage = papc_usage(eff, downlink)
    scale = 1.0
    cap = p + 0.5 * slack
    if np.any(usage > cap):
        scale = float(np.min(cap / usage))
        downlink = [S * scale for S in downlink]
        usage = usage * scale
    return downlink, usage, scale


def _dual_value(q, eff, P):
    uplink, _ = solve_inner(q, eff, P)
    return mac_objective(q, eff, uplink), uplink


def _extrapolate(q_prev, q, f, uplink, eff, p, P, max_doublings=30):
    """Push along ``q - q_prev`` while the dual objective keeps decreasing."""
    d = q - q_prev
    t = 1.0
    for _ in range(max_doublings):
        trial = q_prev + 2.0 * t * d
        if trial.min() <= 0:
            break
        trial *= P / (p @ trial)
        f_trial, up_trial = _dual_value(trial, eff, P)
        if not f_trial < f:
            break
        t *= 2.0
        q, f, uplink = trial, f_trial, up_trial
    return q, f, uplink


def solve(config: ScenarioConfig, chans: ChannelSet, q0=None, verbose=False):
    """Maximize the SZFDPC sum rate under per-antenna power limits.

    Alternates water-filling over the uplink covariances with a gradient
    projection step on the diagonal dual variable until the dual objective
    changes by at most ``config.tolerance``. With ``config.extrapolate`` each
    dual step is followed by a doubling search along the step direction,
    kept only while the dual objective decreases. If ``config.gap_tolerance`` is
    set, iteration also continues until the recovered downlink solution is
    within that relative duality gap of the dual objective.

    Returns ``(BcSolution, SolveReport)``; ``report.converged`` is False when
    the outer iteration cap was hit.
    """
    t0 = time.perf_counter()
    config.validate()
    chans.check(config)
    eff = effective_channels(chans)
    p = config.per_antenna_power
    P = config.total_power
    eps = config.tolerance
    gap_tol = config.gap_tolerance
    q = np.full(config.n_tx, P / p.sum()) if q0 is None else np.asarray(q0, dtype=float)

    slack = config.papc_tolerance * P
    trace, gp_iters, gp_traces, rows = [], [], [], []
    tau = np.inf
    gap = np.inf
    converged = False
    n = 0
    recovered = None
    f, uplink = _dual_value(q, eff, P)
    for n in range(config.max_outer_iters):
        trace.append(f)
        if n >= 1:
            tau = abs(trace[-1] - trace[-2])
        rows.append((n, f, tau, time.perf_counter() - t0))
        if verbose:
            log.info("iter %d objective %.12g tau %.3e t=%.3fs", *rows[-1])
        if tau <= eps:
            if gap_tol is None:
                converged = True
                break
            recovered = _recover(eff, q, uplink, p, slack)
            gap = (f - bc_sum_rate(eff, recovered[0])) / max(abs(f), 1e-300)
            if gap <= gap_tol:
                converged = True
                break
        alpha = sca_alpha(eff, q, uplink)
        scaling = np.maximum(q, SCALE_FLOOR * q.max()) if config.scaled_gp else None
        q_prev = q
        q, rep = gp_solve(QSubproblem(alpha, eff.bases, p, P), q, eps, scaling=scaling)
        gp_iters.append(rep.iterations)
        gp_traces.append(rep.objective_trace)
        f, uplink = _dual_value(q, eff, P)
        if config.extrapolate:
            q, f, uplink = _extrapolate(q_prev, q, f, uplink, eff, p, P)
        recovered = None

    downlink, usage, scale = recovered or _recover(eff, q, uplink, p, slack)
    rates = user_rates(eff, downlink)
    sol = BcSolution(downlink, full_covariances(eff, downlink), float(rates.sum()),
                     p - usage, rates)
    report = SolveReport(n + 1, trace, float(tau), time.perf_counter() - t0, converged,
                         minimax_value=trace[-1], q=q, gp_iterations=gp_iters,
                         gp_traces=gp_traces, papc_rescale=scale, trace_rows=rows)
    return sol, report


def check_solution(chans: ChannelSet, config: ScenarioConfig, sol: BcSolution):
    """Return ``(papc_violation, zero_interference_residual)``; both should be ~0."""
    viol = float(max(0.0, -sol.papc_slack.min()))
    return viol, zero_interference_residual(chans, sol.full_covs)
