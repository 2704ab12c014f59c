import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.optimize import linprog

from wcmdp.simplex import INFEASIBLE, OPTIMAL, UNBOUNDED, simplex_max


def test_small_lp():
    # max 3x + 2y s.t. x + y <= 4, x + 3y <= 6
    res = simplex_max(np.array([3.0, 2.0]), A_ub=np.array([[1.0, 1], [1, 3]]), b_ub=np.array([4.0, 6]))
    assert res.status == OPTIMAL
    assert res.value == pytest.approx(12.0)
    assert np.allclose(res.x, [4, 0])


def test_beale_cycling_example_terminates():
    # a textbook LP on which the largest-coefficient rule cycles
    c = np.array([0.75, -150, 0.02, -6])
    A = np.array([[0.25, -60, -0.04, 9], [0.5, -90, -0.02, 3], [0, 0, 1, 0]])
    b = np.array([0.0, 0, 1])
    res = simplex_max(c, A_ub=A, b_ub=b)
    assert res.status == OPTIMAL
    assert res.value == pytest.approx(0.05)


def test_infeasible_and_unbounded():
    res = simplex_max(np.array([1.0]), A_eq=np.array([[1.0]]), b_eq=np.array([-1.0]))
    assert res.status == INFEASIBLE
    res = simplex_max(np.array([1.0, 0]), A_ub=np.array([[-1.0, 1]]), b_ub=np.array([1.0]))
    assert res.status == UNBOUNDED


def test_redundant_equalities():
    A = np.array([[1.0, 1, 1], [2, 2, 2], [1, 0, 0]])
    res = simplex_max(np.array([1.0, 2, 3]), A_eq=A, b_eq=np.array([1.0, 2, 0.25]))
    assert res.status == OPTIMAL
    assert res.value == pytest.approx(0.25 + 3 * 0.75)


def brute_force_vertices(c, A_eq, b_eq):
    """Best basic feasible solution of max c x, A x = b, x >= 0 by enumerating bases."""
    m, k = A_eq.shape
    rank = np.linalg.matrix_rank(A_eq)
    best = None
    for cols in itertools.combinations(range(k), rank):
        B = A_eq[:, cols]
        if np.linalg.matrix_rank(B) < rank:
            continue
        xb, *_ = np.linalg.lstsq(B, b_eq, rcond=None)
        x = np.zeros(k)
        x[list(cols)] = xb
        if np.any(x < -1e-12) or np.abs(A_eq @ x - b_eq).max() > 1e-9:
            continue
        if best is None or c @ x > best[0] + 1e-12:
            best = (c @ x, x)
    return best


@given(st.integers(0, 2**32 - 1))
def test_agrees_with_highs_on_random_lps(seed):
    rng = np.random.default_rng(seed)
    k = rng.integers(2, 7)
    m_eq, m_ub = rng.integers(0, 3), rng.integers(1, 4)
    c = rng.normal(size=k)
    A_eq = rng.normal(size=(m_eq, k))
    b_eq = A_eq @ rng.random(k) if rng.random() < 0.8 else rng.normal(size=m_eq)
    A_ub = rng.normal(size=(m_ub, k))
    b_ub = rng.normal(size=m_ub) + 1.0
    # bound the region so HiGHS and we only disagree on infeasibility
    A_ub = np.vstack([A_ub, np.ones(k)])
    b_ub = np.append(b_ub, 10.0)
    res = simplex_max(c, A_eq if m_eq else None, b_eq if m_eq else None, A_ub, b_ub)
    ref = linprog(-c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq if m_eq else None,
                  b_eq=b_eq if m_eq else None, bounds=(0, None), method="highs")
    if ref.status == 2:
        assert res.status == INFEASIBLE
    else:
        assert ref.status == 0
        assert res.status == OPTIMAL
        assert res.value == pytest.approx(-ref.fun, abs=1e-7)
        assert np.all(res.x >= -1e-9)
        assert np.all(A_ub @ res.x <= b_ub + 1e-7)


def test_brute_force_oracle_on_degenerate_lp():
    rng = np.random.default_rng(3)
    A = np.vstack([rng.integers(0, 3, size=(2, 6)).astype(float), np.ones(6)])
    b = A @ np.array([0.5, 0.5, 0, 0, 0, 0])  # degenerate vertex
    c = rng.normal(size=6)
    ref = brute_force_vertices(c, A, b)
    res = simplex_max(c, A_eq=A, b_eq=b)
    assert res.value == pytest.approx(ref[0], abs=1e-9)
