"""Estimator-style wrapper: fit a weakly coupled model, then evaluate its controls."""

from __future__ import annotations

import warnings

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .conditions import check_policy_condition
from .discrete import round_bandit, round_inequality
from .fluid import FluidControlSpec, PsiVariant, compose_phi, fluid_trajectory
from .model import ModelSpec, check_model
from .relax import InfeasibleError, policy_from_relaxation, solve_fluid_relaxation, uniform_policy
from .validation import check_occupancy, check_policy


class ConditionError(RuntimeError):
    """No candidate single-process policy satisfies the unichain/aperiodic condition."""

    def __init__(self, message, reports):
        super().__init__(message)
        self.reports = reports


class FluidPolicy(BaseEstimator):
    """Asymptotically optimal control for ``n`` weakly coupled processes.

    ``fit`` solves the fluid relaxation, selects a single-process policy
    that passes the unichain/aperiodic check, builds the auxiliary and
    composite fluid controls and records everything in fitted attributes.
    ``transform`` evaluates the fluid control on occupancy measures and
    ``discrete_control`` returns its finite-n rounding.

    Parameters
    ----------
    policy : {"auto", "mu", "uniform"} or array of shape (S, A)
        Single-process policy behind the auxiliary control. ``"auto"`` tries
        the relaxation-derived policy first and falls back to the uniform one.
    variant : {None, "inequality", "bandit", "custom"}
        Auxiliary control construction; inferred from the model when None.
    psi : callable, optional
        Auxiliary control for ``variant="custom"``.
    """

    def __init__(self, policy="auto", variant=None, psi=None):
        self.policy = policy
        self.variant = variant
        self.psi = psi

    def fit(self, model: ModelSpec, y=None):
        model = check_model(model)
        sol = solve_fluid_relaxation(model)
        if not sol.optimal:
            raise InfeasibleError("the fluid relaxation has no feasible point")
        candidates = self._candidates(model, sol)
        reports = {}
        chosen = None
        for name, pi in candidates:
            reports[name] = check_policy_condition(pi, model, sol.support)
            if reports[name].holds:
                chosen = (name, pi)
                break
        if chosen is None:
            if isinstance(self.policy, str) and self.policy == "auto":
                raise ConditionError(
                    "neither mu nor the uniform policy is unichain and aperiodic "
                    "with the optimal support in its recurrent class", reports)
            chosen = candidates[0]
            warnings.warn(f"policy {chosen[0]!r} fails the unichain/aperiodic condition; "
                          "fluid trajectories may not converge", stacklevel=2)

        self.model_ = model
        self.relaxation_ = sol
        self.g_r_ = sol.g_r
        self.pi_name_, self.pi_ = chosen
        self.condition_reports_ = reports
        self.control_spec_ = FluidControlSpec.build(model, sol, self.pi_, self.variant, self.psi)
        self.variant_ = self.control_spec_.variant
        self.gamma_ = self.control_spec_.gamma
        self._phi = compose_phi(self.control_spec_)
        return self

    def _candidates(self, model, sol):
        if isinstance(self.policy, str):
            if self.policy == "auto":
                return [("mu", policy_from_relaxation(sol)), ("uniform", uniform_policy(model))]
            if self.policy == "mu":
                return [("mu", policy_from_relaxation(sol))]
            if self.policy == "uniform":
                return [("uniform", uniform_policy(model))]
            raise ValueError(f"unknown policy {self.policy!r}")
        return [("custom", check_policy(self.policy, (model.num_states, model.num_actions)))]

    @property
    def phi_(self):
        check_is_fitted(self, "control_spec_")
        return self._phi

    def transform(self, X):
        """Fluid control values for one occupancy measure (S,) or a batch (m, S)."""
        check_is_fitted(self, "control_spec_")
        X = np.asarray(X, dtype=float)
        S = self.model_.num_states
        if X.ndim == 1:
            return self._phi(check_occupancy(X, S))
        return np.stack([self._phi(check_occupancy(x, S)) for x in X])

    def fit_transform(self, model, X):
        return self.fit(model).transform(X)

    def discretize(self, x, n: int):
        """Round the fluid control at ``x`` (a point of X_n) to n processes."""
        check_is_fitted(self, "control_spec_")
        y = self._phi(np.asarray(x, dtype=float))
        if self.variant_ is PsiVariant.BANDIT:
            return round_bandit(y, x, n, float(self.model_.d[0]))
        if self.variant_ is PsiVariant.INEQUALITY:
            return round_inequality(y, x, n)
        raise ValueError("no rounding scheme for a custom auxiliary control")

    def discrete_control(self, n: int):
        """Frequency-mode control ``x -> DiscreteAssignment`` for ``n`` processes."""
        check_is_fitted(self, "control_spec_")
        return lambda x: self.discretize(x, n)

    def trajectory(self, x0, horizon: int):
        check_is_fitted(self, "control_spec_")
        return fluid_trajectory(self._phi, check_occupancy(x0, self.model_.num_states),
                                horizon, self.model_)
