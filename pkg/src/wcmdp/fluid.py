"""Fluid controls: alignment coefficient, composite control and fluid trajectories.

All measures are plain numpy arrays: occupancy measures ``x`` have shape (S,),
state-action measures ``y`` have shape (S, A) with ``y[i, a]``, and
single-process policies ``pi`` have shape (S, A) with ``pi[i, a] = pi(a | i)``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .model import (ModelSpec, bandit_assumption_violations,
                    inequality_assumption_violations)
from .validation import check_policy

BETA_ONE_TOL = 1e-12
FEASIBILITY_TOL = 1e-10


class AssumptionError(ValueError):
    """The model does not have the constraint structure a construction needs."""


class PsiVariant(str, enum.Enum):
    INEQUALITY = "inequality"
    BANDIT = "bandit"
    CUSTOM = "custom"


def beta(x, x_star, support) -> float:
    """Largest ``lam`` in [0, 1] with ``lam * x_star <= x`` componentwise."""
    support = list(support)
    if not support:
        raise ValueError("support must be nonempty")
    x = np.asarray(x, dtype=float)
    ratio = np.min(x[support] / x_star[support])
    return float(min(max(ratio, 0.0), 1.0))


def residual(x, x_star, support, beta_value=None):
    """Normalized remainder ``(x - beta x_star) / (1 - beta)``, a point of X."""
    b = beta(x, x_star, support) if beta_value is None else beta_value
    if b >= 1.0 - BETA_ONE_TOL:
        raise ValueError("x coincides with x_star; the residual is undefined there")
    z = (np.asarray(x, dtype=float) - b * x_star) / (1.0 - b)
    # the argmin coordinate can come out as -1e-17
    return np.maximum(z, 0.0)


def apply_L(y, spec: ModelSpec):
    """One-step state distribution ``sum_a y(a) P(a)``."""
    return np.einsum("ia,aij->j", y, spec.transitions)


def psi_pure(x, pi):
    """Fluid control purely based on ``pi``: route ``x(i) pi(a|i)`` to ``(i, a)``."""
    return np.asarray(x, dtype=float)[:, None] * pi


def make_psi_inequality(spec: ModelSpec, pi):
    """Auxiliary control for resource-allocation inequality constraints.

    Mixes the policy ``pi`` with the do-nothing action 0 so that the
    inequality constraints hold for every ``x``. Returns ``(psi, gamma)``.
    """
    problems = inequality_assumption_violations(spec)
    if problems:
        raise AssumptionError("inequality construction needs: " + "; ".join(problems))
    pi = check_policy(pi, (spec.num_states, spec.num_actions))
    E, f = spec.E, spec.f
    nz = np.nonzero(E)
    ratios = f[nz[2]] / E[nz]
    gamma = float(min(1.0, ratios.min(initial=1.0)))

    def psi(x):
        y = gamma * psi_pure(x, pi)
        y[:, 0] += (1.0 - gamma) * np.asarray(x, dtype=float)
        return y

    return psi, gamma


def make_psi_bandit(spec: ModelSpec, pi):
    """Auxiliary control for a restless bandit with an exact budget ``d``."""
    problems = bandit_assumption_violations(spec)
    if problems:
        raise AssumptionError("bandit construction needs: " + "; ".join(problems))
    pi = check_policy(pi, (spec.num_states, 2))
    d = float(spec.d[0])
    active = pi[:, 1]
    weight = 1.0 - d * active  # strictly positive because d < 1

    def psi(x):
        x = np.asarray(x, dtype=float)
        scale = (d - d * (x @ active)) / ((1.0 - d) * (x @ weight))
        aux1 = scale * x * weight
        y = np.empty((x.size, 2))
        y[:, 1] = d * x * active + (1.0 - d) * aux1
        y[:, 0] = x - y[:, 1]
        return y

    return psi


def constraint_violation(y, spec: ModelSpec, x=None) -> float:
    """Largest violation of the limiting constraints (and consistency with ``x``)."""
    eq = np.einsum("ia,aik->k", y, spec.C) - spec.d
    ineq = np.einsum("ia,aik->k", y, spec.E) - spec.f
    worst = max(np.abs(eq).max(initial=0.0), ineq.max(initial=0.0), -y.min())
    if x is not None:
        worst = max(worst, np.abs(y.sum(axis=1) - x).max())
    return float(worst)


@dataclass(frozen=True)
class FluidControlSpec:
    """Everything needed to assemble the composite fluid control."""

    model: ModelSpec
    y_star: np.ndarray
    x_star: np.ndarray
    support: tuple
    pi: np.ndarray
    variant: PsiVariant
    psi: Callable = field(repr=False)
    gamma: float | None = None

    @classmethod
    def build(cls, model: ModelSpec, relaxation, pi, variant=None, psi=None):
        """Pick (or check) the auxiliary control matching the model's constraints."""
        if variant is None:
            if psi is not None:
                variant = PsiVariant.CUSTOM
            elif not bandit_assumption_violations(model):
                variant = PsiVariant.BANDIT
            elif not inequality_assumption_violations(model):
                variant = PsiVariant.INEQUALITY
            else:
                raise AssumptionError(
                    "model is neither a restless bandit nor of inequality type; "
                    "supply a custom psi")
        variant = PsiVariant(variant)
        gamma = None
        if variant is PsiVariant.INEQUALITY:
            psi, gamma = make_psi_inequality(model, pi)
        elif variant is PsiVariant.BANDIT:
            psi = make_psi_bandit(model, pi)
            gamma = float(model.d[0])
        elif psi is None:
            raise ValueError("custom variant requires a psi callable")
        return cls(model, relaxation.y_star, relaxation.x_star, tuple(relaxation.support),
                   np.asarray(pi, dtype=float), variant, psi, gamma)


def compose_phi(fc: FluidControlSpec):
    """Composite control ``beta(x) y* + (1 - beta(x)) psi(residual(x))``.

    It keeps the part of ``x`` aligned with ``x*`` on the optimal actions and
    lets the auxiliary control steer the rest.
    """
    y_star, x_star, support, psi = fc.y_star, fc.x_star, fc.support, fc.psi
    model = fc.model
    custom = fc.variant is PsiVariant.CUSTOM

    def phi(x):
        x = np.asarray(x, dtype=float)
        b = beta(x, x_star, support)
        if b >= 1.0 - BETA_ONE_TOL:
            return y_star.copy()
        z = residual(x, x_star, support, b)
        aux = psi(z)
        if custom:
            err = constraint_violation(aux, model, z)
            if err > FEASIBILITY_TOL:
                raise AssumptionError(f"custom psi output violates the constraints by {err:.3g}")
        return b * y_star + (1.0 - b) * aux

    return phi


@dataclass
class FluidTrajectory:
    x_seq: np.ndarray  # (horizon + 1, S)
    y_seq: np.ndarray  # (horizon, S, A)
    horizon: int

    def rewards(self, spec: ModelSpec):
        return np.einsum("tia,ai->t", self.y_seq, spec.rewards)


def fluid_trajectory(phi, x0, horizon: int, spec: ModelSpec) -> FluidTrajectory:
    """Iterate ``y(t) = phi(x(t))`` and ``x(t+1) = L(y(t))`` for ``horizon`` steps."""
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    S, A = spec.num_states, spec.num_actions
    xs = np.empty((horizon + 1, S))
    ys = np.empty((horizon, S, A))
    xs[0] = x0
    for t in range(horizon):
        ys[t] = phi(xs[t])
        xs[t + 1] = apply_L(ys[t], spec)
    return FluidTrajectory(xs, ys, horizon)


@dataclass
class Convergence:
    converged: bool
    steps: int | None  # first t with ||x(t) - x*||_inf < tol
    beta_monotone: bool
    max_beta_drop: float
    final_distance: float


def converge(phi, x0, spec: ModelSpec, x_star, support, tol=1e-8, max_steps=10_000):
    """Run the fluid dynamics until ``x(t)`` is within ``tol`` of ``x_star``.

    Also tracks whether ``beta(x(t))`` is nondecreasing (within 1e-12).
    """
    x = np.asarray(x0, dtype=float)
    b_prev = beta(x, x_star, support)
    worst_drop = 0.0
    for t in range(max_steps + 1):
        dist = float(np.abs(x - x_star).max())
        if dist < tol:
            return Convergence(True, t, worst_drop <= 1e-12, worst_drop, dist)
        if t == max_steps:
            break
        x = apply_L(phi(x), spec)
        b = beta(x, x_star, support)
        worst_drop = max(worst_drop, b_prev - b)
        b_prev = b
    return Convergence(False, None, worst_drop <= 1e-12, worst_drop, dist)
