"""Reference policies for restless bandits: state-priority and ID policies."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .discrete import FLOOR_NUDGE, DiscreteAssignment
from .model import ModelSpec, bandit_assumption_violations
from .relax import RelaxationSolution
from .validation import check_lattice, check_policy


@dataclass(frozen=True)
class PriorityOrder:
    """States listed from highest to lowest activation priority."""

    order: tuple

    def __post_init__(self):
        order = tuple(int(i) for i in self.order)
        if sorted(order) != list(range(len(order))):
            raise ValueError(f"priority order {order} is not a permutation of 0..{len(order) - 1}")
        object.__setattr__(self, "order", order)

    @property
    def rank(self):
        """``rank[i]`` is the position of state ``i`` in the order."""
        r = np.empty(len(self.order), dtype=np.int64)
        r[list(self.order)] = np.arange(len(self.order))
        return r

    def __str__(self):
        return "-".join(map(str, self.order))


def _require_bandit(spec):
    problems = bandit_assumption_violations(spec)
    if problems:
        raise ValueError("priority and ID policies need a restless bandit: " + "; ".join(problems))


def _budget(d, n):
    return int(np.floor(d * n + FLOOR_NUDGE))


def priority_control(order, d: float, n: int):
    """Frequency-mode control activating states greedily in priority order.

    Exactly ``floor(d n)`` processes take action 1; the last state reached
    is split between the two actions.
    """
    order = order if isinstance(order, PriorityOrder) else PriorityOrder(order)
    budget = _budget(d, n)
    if budget > n:
        raise ValueError(f"budget {budget} exceeds the population {n}")
    idx = list(order.order)

    def control(x):
        x_counts = check_lattice(x, n)
        active = np.zeros_like(x_counts)
        left = budget
        for i in idx:
            take = min(left, x_counts[i])
            active[i] = take
            left -= take
            if left == 0:
                break
        return DiscreteAssignment(np.stack([x_counts - active, active], axis=1), n)

    return control


def lp_priority_order(sol: RelaxationSolution) -> PriorityOrder:
    """Order read off an optimal relaxation vertex.

    States fully active in ``y*`` come first, then states using both actions,
    then passive states, then states outside the support. Ties keep the
    state index order.
    """
    y = sol.y_star
    on = y > 1e-9

    def klass(i):
        if on[i, 1] and not on[i, 0]:
            return 0
        if on[i, 1]:
            return 1
        if on[i, 0]:
            return 2
        return 3

    return PriorityOrder(sorted(range(y.shape[0]), key=lambda i: (klass(i), i)))


class PriorityAgentPolicy:
    """The priority rule applied to individual arms: ties broken by arm ID."""

    def __init__(self, order, d: float, n: int):
        self.order = order if isinstance(order, PriorityOrder) else PriorityOrder(order)
        self.budget = _budget(d, n)
        self.n = n
        self._rank = self.order.rank

    def __call__(self, states, rng=None):
        # lexsort: last key is primary
        ranked = np.lexsort((np.arange(self.n), self._rank[states]))
        actions = np.zeros(self.n, dtype=np.int64)
        actions[ranked[:self.budget]] = 1
        return actions


class IDPolicy:
    """Sample actions from ``mu`` and honor them in increasing arm ID order.

    Honoring stops as soon as the budget is used up (later arms are set to
    action 0) or as soon as every remaining arm is needed to meet it (later
    arms are set to action 1). Overrides therefore hit the highest IDs.
    """

    def __init__(self, mu, d: float, n: int):
        self.mu = check_policy(mu, (np.asarray(mu).shape[0], 2))
        self.budget = _budget(d, n)
        self.n = n

    def assign(self, sampled):
        """Realized actions for a vector of sampled actions indexed by arm ID."""
        n, B = self.n, self.budget
        sampled = np.asarray(sampled, dtype=np.int64)
        before = np.concatenate([[0], np.cumsum(sampled)[:-1]])
        remaining = n - np.arange(n)
        full = np.flatnonzero(before == B)
        forced = np.flatnonzero(B - before == remaining)
        stop_full = full[0] if full.size else n
        stop_forced = forced[0] if forced.size else n
        actions = sampled.copy()
        if stop_full <= stop_forced:
            actions[stop_full:] = 0
        else:
            actions[stop_forced:] = 1
        return actions

    def __call__(self, states, rng):
        sampled = (rng.random(self.n) < self.mu[states, 1]).astype(np.int64)
        return self.assign(sampled)


def id_policy(mu, spec: ModelSpec, n: int) -> IDPolicy:
    _require_bandit(spec)
    return IDPolicy(mu, float(spec.d[0]), n)


def priority_policy(order, spec: ModelSpec, n: int):
    """Frequency-mode priority control for ``spec`` with ``n`` arms."""
    _require_bandit(spec)
    return priority_control(order, float(spec.d[0]), n)
