import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from szfdpc import ScenarioConfig, effective_channels, generate_channels
from szfdpc.gp import QSubproblem, gp_solve, project_weighted_simplex, q_gradient, q_objective
from szfdpc.oracle import brute_force_projection, fd_gradient


def random_problem(seed, N=6, M=2, K=2, alpha_scale=1.0):
    rng = np.random.default_rng(seed)
    eff = effective_channels(generate_channels(ScenarioConfig(N, M, K, seed=seed)))
    p = rng.uniform(0.5, 2.0, N)
    return QSubproblem(alpha_scale * rng.uniform(0.1, 2.0, N), eff.bases, p, float(p.sum())), rng


def test_objective_examples():
    prob = QSubproblem(np.ones(3), [np.eye(3)], np.ones(3), 3.0)
    assert q_objective(prob, np.ones(3)) == pytest.approx(3.0)
    prob = QSubproblem(np.zeros(2), [np.eye(2)], np.ones(2), 2.0)
    assert q_objective(prob, np.full(2, np.e)) == pytest.approx(-2.0)


def test_objective_dual_route():
    prob, rng = random_problem(3, N=4, K=2, M=1)
    q = rng.uniform(0.3, 2.0, 4)
    direct = prob.alpha @ q - sum(
        np.sum(np.log(np.linalg.eigvalsh(V.conj().T @ np.diag(q) @ V))) for V in prob.bases)
    assert q_objective(prob, q) == pytest.approx(direct, abs=1e-10)


def test_gradient_examples():
    prob = QSubproblem(np.ones(3), [np.eye(3)], np.ones(3), 3.0)
    assert np.allclose(q_gradient(prob, np.ones(3)), 0.0, atol=1e-15)
    prob = QSubproblem(np.zeros(2), [np.eye(2)], np.ones(2), 2.0)
    assert np.allclose(q_gradient(prob, np.array([2.0, 4.0])), [-0.5, -0.25])


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10**6))
def test_gradient_matches_finite_differences(seed):
    prob, rng = random_problem(seed, N=6, K=2)
    q = rng.uniform(0.3, 2.0, 6)
    g = q_gradient(prob, q)
    fd = fd_gradient(lambda x: q_objective(prob, x), q, 1e-6)
    assert np.linalg.norm(g - fd) / np.linalg.norm(fd) < 1e-5


def test_gradient_uses_basis_times_inverse_times_basis_h():
    # the other index ordering cannot even be formed for a non-square basis
    prob, rng = random_problem(7, N=5, K=2, M=2)
    V = prob.bases[1]
    q = rng.uniform(0.5, 1.5, 5)
    with pytest.raises(ValueError):
        V.conj().T @ np.linalg.inv(V @ np.diag(q) @ V.conj().T) @ V @ np.ones(5)


def test_projection_examples():
    assert np.allclose(project_weighted_simplex([2.0, 0.0], [1.0, 1.0], 1.0), [1.0, 0.0])
    assert np.allclose(project_weighted_simplex([0.8, 0.4], [1.0, 1.0], 1.0), [0.7, 0.3], atol=1e-12)
    x = np.array([0.2, 0.5, 0.3])
    w = np.array([1.0, 2.0, 0.5])
    budget = float(w @ x)
    assert np.allclose(project_weighted_simplex(x, w, budget), x, atol=1e-14)


@settings(max_examples=200, deadline=None)
@given(st.integers(2, 10), st.integers(0, 10**6))
def test_projection_vs_brute_force(n, seed):
    rng = np.random.default_rng(seed)
    x = rng.normal(0, 2, n)
    w = rng.uniform(0.1, 3.0, n)
    budget = rng.uniform(0.1, 5.0)
    q = project_weighted_simplex(x, w, budget)
    assert np.all(q >= 0)
    assert abs(w @ q - budget) <= 1e-10 * budget
    assert np.allclose(q, brute_force_projection(x, w, budget), atol=1e-8)
    assert np.allclose(project_weighted_simplex(q, w, budget), q, atol=1e-10)


def test_projection_large_offsets():
    x = np.array([1e6, -1e6, 3.0])
    q = project_weighted_simplex(x, np.ones(3), 1.0)
    assert np.allclose(q, [1.0, 0.0, 0.0])


def test_gp_symmetric_optimum():
    N = 5
    prob = QSubproblem(np.zeros(N), [np.eye(N)], np.ones(N), float(N))
    q0 = np.linspace(0.2, 1.8, N)
    q, rep = gp_solve(prob, q0, 1e-10)
    assert rep.converged
    assert np.allclose(q, 1.0, atol=1e-4)


def test_gp_matches_grid_search():
    prob = QSubproblem(np.array([1.0, 2.0]), [np.eye(2)], np.ones(2), 1.0)
    q, rep = gp_solve(prob, np.array([0.5, 0.5]), 1e-12)
    t = np.arange(1, 10**6) * 1e-6
    f = t + 2 * (1 - t) - np.log(t) - np.log(1 - t)
    best = t[np.argmin(f)]
    assert abs(q[0] - best) <= 2e-6
    assert q_objective(prob, q) <= f.min() + 1e-12


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10**6))
def test_gp_descent_and_feasibility(seed):
    prob, rng = random_problem(seed, N=6, K=3, M=1)
    q0 = np.full(6, prob.budget / prob.weights.sum())
    q, rep = gp_solve(prob, q0, 1e-8)
    trace = np.array(rep.objective_trace)
    assert np.all(np.diff(trace) <= 0)
    assert trace[-1] <= q_objective(prob, q0)
    assert abs(prob.weights @ q - prob.budget) <= 1e-8 * prob.budget
    assert q.min() >= -1e-12
    assert rep.final_tau <= 1e-8


def test_gp_iteration_cap():
    prob, _ = random_problem(1, N=6, K=2)
    q0 = np.full(6, prob.budget / prob.weights.sum())
    q, rep = gp_solve(prob, q0, 1e-30, max_iter=3)
    assert not rep.converged and rep.iterations == 3
    assert q_objective(prob, q) <= q_objective(prob, q0)
