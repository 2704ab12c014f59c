"""Fluid relaxation: the linear program over state-action frequencies."""

from dataclasses import dataclass

import numpy as np

from .model import ModelSpec
from .simplex import INFEASIBLE, OPTIMAL, simplex_max

SUPPORT_TOL = 1e-9
FEASIBILITY_TOL = 1e-8


class InfeasibleError(RuntimeError):
    """The constraint set of the relaxation (or of a finite-n problem) is empty."""


@dataclass(frozen=True)
class RelaxationSolution:
    status: str
    y_star: np.ndarray | None = None  # (S, A)
    g_r: float | None = None
    x_star: np.ndarray | None = None
    support: tuple = ()
    eq_residual: np.ndarray | None = None  # y C - d, per equality constraint
    ineq_slack: np.ndarray | None = None  # f - y E, per inequality constraint
    iterations: int = 0

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL

    def to_dict(self):
        if not self.optimal:
            return {"status": self.status}
        return {
            "status": self.status,
            "g_r": self.g_r,
            "y_star": self.y_star.tolist(),
            "x_star": self.x_star.tolist(),
            "support": list(self.support),
            "eq_residual": self.eq_residual.tolist(),
            "ineq_slack": self.ineq_slack.tolist(),
        }


def constraint_values(y, spec: ModelSpec):
    """Return ``(sum_a y(a) C(a), sum_a y(a) E(a))`` for an (S, A) array ``y``."""
    eq = np.einsum("ia,aik->k", y, spec.C)
    ineq = np.einsum("ia,aik->k", y, spec.E)
    return eq, ineq


def lp_matrices(spec: ModelSpec):
    """Build ``(c, A_eq, b_eq, A_ub, b_ub)`` for variables ``y`` flattened as (S, A)."""
    S, A = spec.num_states, spec.num_actions
    P = spec.transitions
    # flow[i, a, j] = p(j | i, a) - [i == j]
    flow = np.transpose(P, (1, 0, 2)) - np.eye(S)[:, None, :]
    balance = flow.reshape(S * A, S).T[:-1]  # one balance row is implied by the others
    eq_rows = np.transpose(spec.C, (1, 0, 2)).reshape(S * A, -1).T
    total = np.ones((1, S * A))
    A_eq = np.vstack([balance, eq_rows, total])
    b_eq = np.concatenate([np.zeros(S - 1), spec.d, [1.0]])
    A_ub = np.transpose(spec.E, (1, 0, 2)).reshape(S * A, -1).T
    b_ub = np.array(spec.f, dtype=float)
    c = spec.rewards.T.ravel()
    return c, A_eq, b_eq, A_ub, b_ub


def solve_fluid_relaxation(spec: ModelSpec) -> RelaxationSolution:
    """Solve the fluid relaxation of ``spec`` to a vertex optimum."""
    S, A = spec.num_states, spec.num_actions
    c, A_eq, b_eq, A_ub, b_ub = lp_matrices(spec)
    res = simplex_max(c, A_eq, b_eq, A_ub, b_ub)
    if res.status != OPTIMAL:
        # Y is compact, so the only failure mode is an empty feasible set
        return RelaxationSolution(status=INFEASIBLE, iterations=res.iterations)
    y = res.x.reshape(S, A)
    y[y < 1e-14] = 0.0
    x = y.sum(axis=1)
    eq, ineq = constraint_values(y, spec)
    sol = RelaxationSolution(
        status=OPTIMAL,
        y_star=y,
        g_r=float(np.sum(y * spec.rewards.T)),
        x_star=x,
        support=tuple(int(i) for i in np.flatnonzero(x > SUPPORT_TOL)),
        eq_residual=eq - spec.d,
        ineq_slack=spec.f - ineq,
        iterations=res.iterations,
    )
    _assert_feasible(sol, spec)
    return sol


def _assert_feasible(sol, spec):
    y = sol.y_star
    balance = np.einsum("ia,aij->j", y, spec.transitions) - sol.x_star
    worst = max(
        np.abs(balance).max(initial=0.0),
        np.abs(sol.eq_residual).max(initial=0.0),
        -sol.ineq_slack.min(initial=0.0),
        abs(y.sum() - 1.0),
        -y.min(),
    )
    if worst > FEASIBILITY_TOL:
        raise RuntimeError(f"relaxation solution violates its constraints by {worst:.3g}")


def policy_from_relaxation(sol: RelaxationSolution) -> np.ndarray:
    """Single-process policy ``mu(a|i) = y*(i,a) / x*(i)``, uniform off the support."""
    y, x = sol.y_star, sol.x_star
    S, A = y.shape
    mu = np.full((S, A), 1.0 / A)
    support = list(sol.support)
    mu[support] = y[support] / x[support, None]
    return mu


def uniform_policy(spec: ModelSpec) -> np.ndarray:
    """The policy that picks every action with the same probability in every state."""
    A = spec.num_actions
    return np.full((spec.num_states, A), 1.0 / A)
