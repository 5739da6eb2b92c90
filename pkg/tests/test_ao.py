import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from szfdpc import (ChannelSet, ScenarioConfig, bc_sum_rate, effective_channels, generate_channels,
                    mac_to_bc, papc_usage, sca_alpha, solve, zero_interference_residual)
from szfdpc.ao import check_solution, mac_objective, sca_surrogate
from szfdpc.effective import user_rates
from szfdpc.oracle import barrier_primal_solve
from szfdpc.waterfill import noise_gram, solve_inner

from conftest import random_psd


def random_feasible_q(rng, p, P):
    q = rng.uniform(0.05, 3.0, p.size)
    return q * P / (p @ q)


def test_alpha_identity_case():
    eff = effective_channels(generate_channels(ScenarioConfig(3, 2, 1, seed=0)))
    alpha = sca_alpha(eff, np.ones(3), [np.zeros((2, 2), complex)])
    assert np.allclose(alpha, 1.0)


@pytest.mark.parametrize("seed", range(5))
def test_surrogate_tight_and_upper_bound(seed):
    rng = np.random.default_rng(seed)
    cfg = ScenarioConfig(6, 2, 2, 1.0, seed=seed)
    eff = effective_channels(generate_channels(cfg))
    p = cfg.per_antenna_power
    q_ref = random_feasible_q(rng, p, 1.0)
    uplink, _ = solve_inner(q_ref, eff, 1.0)

    def true_value(q):
        return sum(np.linalg.slogdet(noise_gram(q, V) + H.conj().T @ S @ H)[1]
                   for V, H, S in zip(eff.bases, eff.eff_channels, uplink))

    assert sca_surrogate(eff, q_ref, uplink, q_ref) == pytest.approx(true_value(q_ref), abs=1e-12)
    for _ in range(100):
        q = random_feasible_q(rng, p, 1.0)
        assert sca_surrogate(eff, q_ref, uplink, q) >= true_value(q) - 1e-12


def test_mac_to_bc_trivial_cases():
    eff = effective_channels(generate_channels(ScenarioConfig(4, 2, 2, seed=1)))
    zero = mac_to_bc(eff, np.ones(4), [np.zeros((2, 2), complex)] * 2)
    assert all(np.allclose(S, 0) for S in zero)
    h, q, s = 0.8 - 0.6j, 0.7, 2.0
    scalar = effective_channels(ChannelSet([np.array([[h]])]))
    S = mac_to_bc(scalar, np.array([q]), [np.array([[s + 0j]])])[0]
    assert S[0, 0].real == pytest.approx(s / q)
    assert np.log(1 + abs(h) ** 2 * S[0, 0].real) == pytest.approx(np.log((q + abs(h) ** 2 * s) / q))


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10**6))
def test_mac_to_bc_preserves_user_rates(seed):
    rng = np.random.default_rng(seed)
    cfg = ScenarioConfig(6, 2, 2, 1.0, seed=seed)
    eff = effective_channels(generate_channels(cfg))
    q = random_feasible_q(rng, cfg.per_antenna_power, 1.0)
    uplink = [random_psd(rng, 2, rng.uniform(0.1, 1.0)) for _ in range(2)]
    down = mac_to_bc(eff, q, uplink)
    mac_terms = [np.linalg.slogdet(noise_gram(q, V) + H.conj().T @ S @ H)[1]
                 - np.linalg.slogdet(noise_gram(q, V))[1]
                 for V, H, S in zip(eff.bases, eff.eff_channels, uplink)]
    assert np.allclose(user_rates(eff, down), mac_terms, atol=1e-8)
    # power is conserved in the q-weighted sense
    assert q @ papc_usage(eff, down) == pytest.approx(sum(np.trace(S).real for S in uplink), rel=1e-9)


@pytest.mark.parametrize("h, P", [(0.3 + 1.1j, 1.0), (2.0 + 0j, 10.0), (-0.2j, 1e4)])
def test_scalar_capacity(h, P):
    cfg = ScenarioConfig(1, 1, 1, P)
    sol, rep = solve(cfg, ChannelSet([np.array([[h]])]))
    assert sol.sum_rate == pytest.approx(np.log(1 + abs(h) ** 2 * P), abs=1e-8)
    assert rep.converged


def test_hand_two_antenna_case():
    cfg = ScenarioConfig(2, 1, 1, 1.0)
    sol, rep = solve(cfg, ChannelSet([np.array([[1.0, 0.0]], complex)]))
    assert sol.sum_rate == pytest.approx(np.log(1.5), abs=1e-6)
    assert sol.papc_slack.min() >= -1e-6


def test_matches_oracle_small():
    cfg = ScenarioConfig(4, 2, 2, 1.0, seed=17)
    chans = generate_channels(cfg)
    sol, rep = solve(cfg, chans)
    ref = barrier_primal_solve(effective_channels(chans), cfg.per_antenna_power)
    assert sol.sum_rate == pytest.approx(ref.rate, rel=1e-3)
    assert rep.minimax_value >= ref.rate - 1e-6


@pytest.mark.parametrize("extrapolate, scaled", [(True, True), (False, True), (False, False)])
def test_variants_agree_on_uniform_limits(extrapolate, scaled):
    cfg = ScenarioConfig(8, 2, 3, 1.0, seed=5, extrapolate=extrapolate, scaled_gp=scaled)
    chans = generate_channels(cfg)
    sol, rep = solve(cfg, chans)
    assert rep.converged
    ref = barrier_primal_solve(effective_channels(chans), cfg.per_antenna_power)
    assert sol.sum_rate == pytest.approx(ref.rate, rel=1e-4)


def test_solution_invariants_and_report():
    cfg = ScenarioConfig(8, 2, 3, 10.0, seed=2)
    chans = generate_channels(cfg)
    sol, rep = solve(cfg, chans)
    eff = effective_channels(chans)
    assert rep.converged and rep.final_tau <= cfg.tolerance
    assert len(rep.objective_trace) == rep.outer_iterations
    assert abs(rep.objective_trace[-1] - rep.objective_trace[-2]) <= cfg.tolerance
    for S in sol.downlink_covs:
        assert np.linalg.eigvalsh(S).min() >= -1e-8
    viol, resid = check_solution(chans, cfg, sol)
    assert viol <= 1e-6 * cfg.total_power and resid <= 1e-8
    assert sol.sum_rate == pytest.approx(bc_sum_rate(eff, sol.downlink_covs))
    assert sol.sum_rate == pytest.approx(rep.minimax_value, rel=1e-4)
    assert zero_interference_residual(chans, sol.full_covs) <= 1e-8
    for trace in rep.gp_traces:
        assert np.all(np.diff(trace) <= 0)


def test_dominates_random_feasible_points():
    rng = np.random.default_rng(8)
    cfg = ScenarioConfig(6, 2, 2, 1.0, seed=8)
    chans = generate_channels(cfg)
    eff = effective_channels(chans)
    sol, _ = solve(cfg, chans)
    p = cfg.per_antenna_power
    for _ in range(100):
        covs = [random_psd(rng, d) for d in eff.dims]
        scale = np.min(p / papc_usage(eff, covs))
        assert bc_sum_rate(eff, [scale * S for S in covs]) <= sol.sum_rate + 1e-9


def test_non_uniform_limits():
    rng = np.random.default_rng(3)
    p = rng.dirichlet(np.ones(6)) * 10.0
    cfg = ScenarioConfig(6, 2, 2, 10.0, per_antenna_power=p, seed=4)
    chans = generate_channels(cfg)
    sol, rep = solve(cfg, chans)
    assert rep.converged
    ref = barrier_primal_solve(effective_channels(chans), p)
    assert sol.sum_rate == pytest.approx(ref.rate, rel=1e-3)
    assert sol.papc_slack.min() >= -1e-6 * 10.0


def test_iteration_cap_flag():
    cfg = ScenarioConfig(8, 2, 2, 1.0, seed=1, max_outer_iters=2)
    sol, rep = solve(cfg, generate_channels(cfg))
    assert not rep.converged
    assert rep.outer_iterations == 2
    assert sol.papc_slack.min() >= -1e-6


def test_without_gap_check_stops_on_tau():
    cfg = ScenarioConfig(8, 2, 2, 1.0, seed=1, gap_tolerance=None)
    sol, rep = solve(cfg, generate_channels(cfg))
    assert rep.converged and rep.final_tau <= 1e-6


def test_mac_objective_at_solution_is_minimax_value():
    cfg = ScenarioConfig(6, 2, 2, 1.0, seed=9)
    chans = generate_channels(cfg)
    eff = effective_channels(chans)
    sol, rep = solve(cfg, chans)
    uplink, _ = solve_inner(rep.q, eff, 1.0)
    assert mac_objective(rep.q, eff, uplink) == pytest.approx(rep.minimax_value, abs=1e-12)
