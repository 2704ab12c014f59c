import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.optimize import linprog

from wcmdp.instances import build_example
from wcmdp.model import FiniteNRule, ModelSpec
from wcmdp.relax import (constraint_values, lp_matrices, policy_from_relaxation,
                         solve_fluid_relaxation, uniform_policy)
from test_simplex import brute_force_vertices

# g_r values from HiGHS on the same LP data (computed independently of the simplex)
HIGHS_G_R = {"taxi": 0.8938460063740, "nonindexable": 0.3437381537302,
             "attractor_fail": 0.1237925858259, "two_state_toy": 0.5}


def highs_g_r(spec):
    c, A_eq, b_eq, A_ub, b_ub = lp_matrices(spec)
    res = linprog(-c, A_eq=A_eq, b_eq=b_eq, A_ub=A_ub if len(b_ub) else None,
                  b_ub=b_ub if len(b_ub) else None, bounds=(0, None), method="highs")
    return -res.fun


@pytest.mark.parametrize("name", sorted(HIGHS_G_R))
def test_matches_highs(name):
    spec = build_example(name)
    sol = solve_fluid_relaxation(spec)
    assert sol.optimal
    assert sol.g_r == pytest.approx(HIGHS_G_R[name], abs=1e-9)
    assert sol.g_r == pytest.approx(highs_g_r(spec), abs=1e-9)


@pytest.mark.parametrize("name", sorted(HIGHS_G_R))
def test_solution_invariants(name):
    spec = build_example(name)
    sol = solve_fluid_relaxation(spec)
    y = sol.y_star
    assert y.min() >= 0
    assert abs(y.sum() - 1) <= 1e-8
    assert np.abs(np.einsum("ia,aij->j", y, spec.transitions) - y.sum(axis=1)).max() <= 1e-8
    eq, ineq = constraint_values(y, spec)
    assert np.abs(eq - spec.d).max(initial=0) <= 1e-8
    assert np.all(ineq <= spec.f + 1e-8)
    assert sol.g_r == pytest.approx(float(np.sum(y * spec.rewards.T)), abs=1e-9)
    assert np.array_equal(sol.x_star, y.sum(axis=1))
    assert set(sol.support) == set(np.flatnonzero(sol.x_star > 1e-9))


def test_two_state_toy_by_vertex_enumeration():
    spec = build_example("two_state_toy")
    c, A_eq, b_eq, _, _ = lp_matrices(spec)
    best, x = brute_force_vertices(c, A_eq, b_eq)
    sol = solve_fluid_relaxation(spec)
    assert best == pytest.approx(0.5)
    assert sol.g_r == pytest.approx(0.5)
    assert sol.y_star[1, 1] == pytest.approx(0.5)


def test_deterministic(taxi):
    a, b = solve_fluid_relaxation(taxi), solve_fluid_relaxation(taxi)
    assert np.array_equal(a.y_star, b.y_star)


@given(st.integers(0, 2**32 - 1), st.sampled_from(["taxi", "nonindexable", "attractor_fail"]))
def test_permutation_invariance(seed, name):
    spec = build_example(name)
    perm = np.random.default_rng(seed).permutation(spec.num_states)
    P = spec.transitions[:, perm][:, :, perm]
    permuted = ModelSpec.create(P, spec.rewards[:, perm],
                                spec.C[:, perm] if spec.num_eq else None, spec.d if spec.num_eq else None,
                                spec.E[:, perm] if spec.num_ineq else None,
                                spec.f if spec.num_ineq else None, spec.finite_n_rule)
    assert solve_fluid_relaxation(permuted).g_r == pytest.approx(
        solve_fluid_relaxation(spec).g_r, abs=1e-9)


def test_taxi_constraint_activity(taxi_sol):
    y = taxi_sol.y_star
    assert y[:, 1].sum() + y[:, 2].sum() == pytest.approx(0.9, abs=1e-6)
    assert y[:, 2].sum() < 0.7
    assert taxi_sol.ineq_slack[1] == pytest.approx(0, abs=1e-9)


def test_taxi_mu_charges_in_state_zero(taxi_sol):
    mu = policy_from_relaxation(taxi_sol)
    assert mu[0, 2] == 1.0


def test_infeasible_relaxation():
    C = np.ones((1, 2, 1))
    spec = ModelSpec.create(np.stack([np.eye(2)]), np.zeros((1, 2)), C=C, d=[2.0])
    sol = solve_fluid_relaxation(spec)
    assert not sol.optimal
    assert sol.status == "infeasible"
    assert sol.to_dict() == {"status": "infeasible"}


def test_policy_from_relaxation_rows():
    spec = ModelSpec.create(np.stack([np.eye(3)] * 2), [[1.0, 0, 0], [1.0, 0, 0]])
    sol = solve_fluid_relaxation(spec)
    mu = policy_from_relaxation(sol)
    assert sol.support == (0,)
    assert np.allclose(mu[1:], 0.5)
    assert np.allclose(mu.sum(axis=1), 1)


def test_proportional_y_gives_uniform_mu():
    from wcmdp.relax import RelaxationSolution
    x = np.array([0.2, 0.8])
    sol = RelaxationSolution("optimal", y_star=np.outer(x, [0.5, 0.5]), g_r=0.0, x_star=x, support=(0, 1))
    assert np.allclose(policy_from_relaxation(sol), 0.5)


@pytest.mark.parametrize("A", [1, 2, 3])
def test_uniform_policy(A):
    spec = ModelSpec.create(np.stack([np.eye(2)] * A), np.zeros((A, 2)))
    assert np.allclose(uniform_policy(spec), 1 / A)


def test_bandit_rule_kept(nonindexable):
    assert nonindexable.finite_n_rule is FiniteNRule.BANDIT_FLOOR
