"""Checks that the auxiliary fluid control drives mass off the boundary set.

``check_policy_condition`` is exact (graph analysis of the single-process
chain); ``check_condition_general`` only samples the boundary and can find
counterexamples but never prove the condition.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.sparse.csgraph import connected_components

from .fluid import apply_L
from .model import ModelSpec
from .validation import check_policy


def policy_matrix(pi, spec: ModelSpec):
    """``P_pi(i, j) = sum_a pi(a|i) p(j|i,a)``."""
    pi = check_policy(pi, (spec.num_states, spec.num_actions))
    return np.einsum("ia,aij->ij", pi, spec.transitions)


def closed_classes(P, tol=0.0):
    """Closed communicating classes of the chain ``P``, as sorted index lists."""
    adj = np.asarray(P) > tol
    ncomp, labels = connected_components(adj, directed=True, connection="strong")
    out = []
    for c in range(ncomp):
        members = np.flatnonzero(labels == c)
        outside = np.flatnonzero(labels != c)
        if not adj[np.ix_(members, outside)].any():
            out.append(members.tolist())
    return sorted(out)


def class_period(P, members, tol=0.0):
    """Period of an irreducible class via the gcd of BFS level differences."""
    adj = np.asarray(P) > tol
    members = list(members)
    inside = set(members)
    level = {members[0]: 0}
    queue = deque([members[0]])
    g = 0
    while queue:
        u = queue.popleft()
        for v in np.flatnonzero(adj[u]):
            v = int(v)
            if v not in inside:
                continue
            if v not in level:
                level[v] = level[u] + 1
                queue.append(v)
            else:
                g = math.gcd(g, level[u] + 1 - level[v])
    return abs(g) if g else 0


@dataclass
class PolicyConditionReport:
    unichain: bool
    aperiodic: bool
    support_in_recurrent: bool
    recurrent_class: list | None
    period: int | None
    closed_classes: list = field(default_factory=list)

    @property
    def holds(self) -> bool:
        return self.unichain and self.aperiodic and self.support_in_recurrent

    def to_dict(self):
        out = asdict(self)
        out["holds"] = self.holds
        return out


def check_policy_condition(pi, spec: ModelSpec, support) -> PolicyConditionReport:
    """Is ``P_pi`` unichain and aperiodic, with ``support`` inside its recurrent class?"""
    P = policy_matrix(pi, spec)
    classes = closed_classes(P)
    if len(classes) != 1:
        return PolicyConditionReport(False, False, False, None, None, classes)
    cls = classes[0]
    period = class_period(P, cls)
    return PolicyConditionReport(
        unichain=True,
        aperiodic=period == 1,
        support_in_recurrent=set(support) <= set(cls),
        recurrent_class=cls,
        period=period,
        closed_classes=classes,
    )


@dataclass
class GeneralConditionReport:
    escaped: list  # one bool per sample
    escape_times: list  # first t with beta > 0, or None
    samples: np.ndarray = field(repr=False)

    @property
    def all_escaped(self) -> bool:
        return all(self.escaped)

    @property
    def min_escape_time(self):
        times = [t for t in self.escape_times if t is not None]
        return min(times) if times else None

    @property
    def max_escape_time(self):
        times = [t for t in self.escape_times if t is not None]
        return max(times) if times else None

    def counterexamples(self):
        return [self.samples[k] for k, ok in enumerate(self.escaped) if not ok]


def sample_boundary(support, num_states, samples, rng):
    """Dirichlet-uniform points of X with one support coordinate forced to zero.

    Faces are visited round-robin so every face of the boundary is covered.
    """
    support = list(support)
    out = np.empty((samples, num_states))
    for k in range(samples):
        i = support[k % len(support)]
        z = rng.dirichlet(np.ones(num_states))
        z[i] = 0.0
        out[k] = z / z.sum()
    return out


def check_condition_general(psi, spec: ModelSpec, support, horizon=1000, samples=100,
                            seed=0, points=None) -> GeneralConditionReport:
    """Iterate ``L o psi`` from boundary points and record when each leaves the boundary.

    A point leaves the boundary once every support coordinate is positive. A
    point that stays within ``horizon`` steps is a potential counterexample,
    not a proof that the condition fails.
    """
    if horizon < 1 or samples < 1:
        raise ValueError("horizon and samples must be at least 1")
    support = list(support)
    S = spec.num_states
    if points is None:
        if S == 1:
            # a single state: the boundary set is empty
            return GeneralConditionReport([], [], np.empty((0, S)))
        points = sample_boundary(support, S, samples, np.random.default_rng(seed))
    escaped, times = [], []
    for z in np.atleast_2d(points):
        x = np.array(z, dtype=float)
        hit = None
        for t in range(1, horizon + 1):
            x = apply_L(psi(x), spec)
            if np.all(x[support] > 0.0):
                hit = t
                break
        escaped.append(hit is not None)
        times.append(hit)
    return GeneralConditionReport(escaped, times, np.atleast_2d(points))
