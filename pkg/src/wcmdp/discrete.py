"""Rounding fluid controls to finite-n discrete controls."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import ModelSpec
from .validation import check_lattice

FLOOR_NUDGE = 1e-9  # keeps floor(2.9999999999) from becoming 2
CERT_TOL = 1e-9


@dataclass(frozen=True)
class DiscreteAssignment:
    """How many of ``n`` processes in each state take each action."""

    counts: np.ndarray  # (S, A) nonnegative integers
    n: int

    @property
    def y(self):
        return self.counts / self.n

    @property
    def x_counts(self):
        return self.counts.sum(axis=1)


def _floor(v):
    return np.floor(v + FLOOR_NUDGE).astype(np.int64)


def _is_integral(v):
    return np.abs(v - np.rint(v)) <= FLOOR_NUDGE


def round_inequality(y_fluid, x, n: int) -> DiscreteAssignment:
    """Floor every action except 0 and give the remainder to action 0.

    Moving weight to the resource-free action keeps nonnegative inequality
    constraints satisfied. The sup-norm gap to ``y_fluid`` is at most ``|A|/n``.
    """
    x_counts = check_lattice(x, n)
    scaled = n * np.asarray(y_fluid, dtype=float)
    counts = np.empty(scaled.shape, dtype=np.int64)
    counts[:, 1:] = _floor(scaled[:, 1:])
    counts[:, 0] = x_counts - counts[:, 1:].sum(axis=1)
    if np.any(counts[:, 0] < 0):
        raise ValueError("y_fluid puts more than x(i) on the active actions")
    return DiscreteAssignment(counts, n)


def round_bandit(y_fluid, x, n: int, d: float) -> DiscreteAssignment:
    """Floor the active column, then add one activation per fractional state in
    increasing state order until exactly ``floor(d n)`` arms are active.
    """
    x_counts = check_lattice(x, n)
    budget = int(np.floor(d * n + FLOOR_NUDGE))
    scaled = n * np.asarray(y_fluid, dtype=float)[:, 1]
    active = _floor(scaled)
    fractional = ~_is_integral(scaled)
    remaining = budget - int(active.sum())
    for i in np.flatnonzero(fractional):
        if remaining <= 0:
            break
        active[i] += 1
        remaining -= 1
    if remaining != 0 or np.any(active > x_counts) or np.any(active < 0):
        raise ValueError(f"cannot place exactly {budget} activations for this x and y_fluid")
    counts = np.stack([x_counts - active, active], axis=1)
    return DiscreteAssignment(counts, n)


@dataclass
class Certificate:
    feasible: bool
    gap: float | None
    violations: list = field(default_factory=list)

    def to_dict(self):
        return {"feasible": self.feasible, "gap": self.gap, "violations": list(self.violations)}


def certify(assignment: DiscreteAssignment, spec: ModelSpec, n: int | None = None,
            x=None, y_fluid=None) -> Certificate:
    """Independently re-check that an assignment is a valid finite-n control value."""
    n = assignment.n if n is None else n
    counts = np.asarray(assignment.counts)
    bad = []
    S, A = spec.num_states, spec.num_actions
    if counts.shape != (S, A):
        return Certificate(False, None, [f"counts shape {counts.shape} is not ({S}, {A})"])
    if np.any(counts != np.rint(counts)):
        bad.append("counts are not integers")
    for i, a in zip(*np.nonzero(counts < 0)):
        bad.append(f"negative count at state {i}, action {a}: {counts[i, a]}")
    if counts.sum() != n:
        bad.append(f"counts sum to {counts.sum()}, expected {n}")
    if x is not None:
        expected = np.rint(n * np.asarray(x, dtype=float))
        for i in np.flatnonzero(counts.sum(axis=1) != expected):
            bad.append(f"state {i}: {counts[i].sum()} processes assigned, {int(expected[i])} present")
    C_n, d_n, E_n, f_n = spec.constraints_at(n)
    y = counts / n
    eq = np.einsum("ia,aik->k", y, C_n) - d_n
    for k in np.flatnonzero(np.abs(eq) > CERT_TOL):
        bad.append(f"equality constraint {k} off by {eq[k]:.3g}")
    ineq = np.einsum("ia,aik->k", y, E_n) - f_n
    for k in np.flatnonzero(ineq > CERT_TOL):
        bad.append(f"inequality constraint {k} exceeded by {ineq[k]:.3g}")
    gap = None
    if y_fluid is not None:
        gap = float(np.abs(np.asarray(y_fluid) - y).max())
    return Certificate(not bad, gap, bad)
