"""Weakly coupled MDP instances: data type, validation and JSON I/O."""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

PROB_TOL = 1e-12


class FiniteNRule(str, enum.Enum):
    """How the finite-n constraint data relate to their limits."""

    CONSTANT = "constant"
    BANDIT_FLOOR = "bandit_floor"


class ModelError(ValueError):
    """Raised when a model file cannot be parsed or violates an invariant."""

    def __init__(self, message, violations=()):
        super().__init__(message)
        self.violations = list(violations)


@dataclass(frozen=True)
class Violation:
    kind: str
    message: str
    action: int | None = None
    row: int | None = None
    magnitude: float | None = None

    def __str__(self):
        where = []
        if self.action is not None:
            where.append(f"action={self.action}")
        if self.row is not None:
            where.append(f"row={self.row}")
        if self.magnitude is not None:
            where.append(f"magnitude={self.magnitude:.3g}")
        return f"{self.kind}: {self.message}" + (f" ({', '.join(where)})" if where else "")


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ModelSpec:
    """A weakly coupled MDP instance.

    Arrays are stored action-major:

    - ``transitions[a, i, j]`` is ``p(j | i, a)``
    - ``rewards[a, i]`` is ``r(i, a)``
    - ``C[a, i, k]`` / ``d[k]`` are the equality constraints (``p`` columns)
    - ``E[a, i, k]`` / ``f[k]`` are the inequality constraints (``q`` columns)

    Construct through :meth:`create`, which fills in empty constraint blocks
    and makes every array read-only.
    """

    transitions: np.ndarray
    rewards: np.ndarray
    C: np.ndarray
    d: np.ndarray
    E: np.ndarray
    f: np.ndarray
    finite_n_rule: FiniteNRule = FiniteNRule.CONSTANT
    name: str = field(default="", compare=False)

    @classmethod
    def create(cls, transitions, rewards, C=None, d=None, E=None, f=None,
               finite_n_rule=FiniteNRule.CONSTANT, name=""):
        P = _frozen(transitions)
        if P.ndim != 3:
            raise ModelError(f"transitions must be 3-d (action, from, to), got shape {P.shape}")
        A, S = P.shape[0], P.shape[1]
        if C is None:
            C, d = np.zeros((A, S, 0)), np.zeros(0)
        if E is None:
            E, f = np.zeros((A, S, 0)), np.zeros(0)
        return cls(
            transitions=P,
            rewards=_frozen(rewards),
            C=_frozen(C),
            d=_frozen(np.atleast_1d(d)),
            E=_frozen(E),
            f=_frozen(np.atleast_1d(f)),
            finite_n_rule=FiniteNRule(finite_n_rule),
            name=name,
        )

    @property
    def num_states(self) -> int:
        return self.transitions.shape[1]

    @property
    def num_actions(self) -> int:
        return self.transitions.shape[0]

    @property
    def num_eq(self) -> int:
        return self.d.shape[0]

    @property
    def num_ineq(self) -> int:
        return self.f.shape[0]

    def constraints_at(self, n):
        """Return ``(C_n, d_n, E_n, f_n)`` for a population of ``n`` processes."""
        d_n = self.d
        if self.finite_n_rule is FiniteNRule.BANDIT_FLOOR:
            d_n = np.floor(self.d * n + 1e-9) / n
        return self.C, d_n, self.E, self.f

    def budget(self, n) -> int:
        """Number of activations ``floor(d n)`` for a bandit instance."""
        return int(math.floor(float(self.d[0]) * n + 1e-9))

    def is_bandit(self) -> bool:
        return not bandit_assumption_violations(self)

    def is_inequality_type(self) -> bool:
        return not inequality_assumption_violations(self)

    def to_dict(self):
        out = {
            "num_states": self.num_states,
            "num_actions": self.num_actions,
            "transitions": self.transitions.tolist(),
            "rewards": self.rewards.tolist(),
            "finite_n_rule": self.finite_n_rule.value,
        }
        if self.num_eq:
            out["eq_constraints"] = {"C": self.C.tolist(), "d": self.d.tolist()}
        if self.num_ineq:
            out["ineq_constraints"] = {"E": self.E.tolist(), "f": self.f.tolist()}
        if self.name:
            out["name"] = self.name
        return out

    @classmethod
    def from_dict(cls, doc):
        if not isinstance(doc, dict):
            raise ModelError("model document must be a JSON object")
        try:
            S, A = int(doc["num_states"]), int(doc["num_actions"])
            P = np.asarray(doc["transitions"], dtype=float)
            r = np.asarray(doc["rewards"], dtype=float)
            eq = doc.get("eq_constraints")
            ineq = doc.get("ineq_constraints")
            C = d = E = f = None
            if eq is not None:
                C, d = np.asarray(eq["C"], dtype=float), np.asarray(eq["d"], dtype=float)
            if ineq is not None:
                E, f = np.asarray(ineq["E"], dtype=float), np.asarray(ineq["f"], dtype=float)
            rule = FiniteNRule(doc.get("finite_n_rule", "constant"))
        except (KeyError, TypeError, ValueError) as exc:
            raise ModelError(f"malformed model document: {exc}") from exc
        if P.shape != (A, S, S):
            raise ModelError(f"transitions shape {P.shape} does not match ({A}, {S}, {S})")
        if r.shape != (A, S):
            raise ModelError(f"rewards shape {r.shape} does not match ({A}, {S})")
        for label, M, v in (("C", C, d), ("E", E, f)):
            if M is not None and (M.ndim != 3 or M.shape[:2] != (A, S) or v.shape != (M.shape[2],)):
                raise ModelError(f"constraint block {label} has inconsistent shape {M.shape}")
        return cls.create(P, r, C, d, E, f, rule, name=doc.get("name", ""))


def inequality_assumption_violations(spec: ModelSpec) -> list[str]:
    """Reasons the resource-allocation assumption fails (empty if it holds)."""
    out = []
    if spec.num_eq and (np.any(spec.C != 0) or np.any(spec.d != 0)):
        out.append("equality constraints present")
    if spec.num_ineq == 0:
        out.append("no inequality constraints")
        return out
    if np.any(spec.E < 0):
        out.append("negative entry in E")
    if np.any(spec.f <= 0):
        out.append("f has a non-positive entry")
    if np.any(spec.E[0] != 0):
        out.append("E(0) is not zero")
    return out


def bandit_assumption_violations(spec: ModelSpec) -> list[str]:
    """Reasons the restless-bandit (single equality budget) assumption fails."""
    out = []
    if spec.num_actions != 2:
        out.append(f"expected 2 actions, got {spec.num_actions}")
    if spec.num_eq != 1:
        out.append(f"expected exactly one equality constraint, got {spec.num_eq}")
    else:
        if spec.num_actions == 2 and (np.any(spec.C[0, :, 0] != 0) or np.any(spec.C[1, :, 0] != 1)):
            out.append("C(i,0) must be 0 and C(i,1) must be 1")
        if not 0 < spec.d[0] < 1:
            out.append("budget d must lie in (0, 1)")
    if spec.num_ineq and (np.any(spec.E != 0) or np.any(spec.f != 0)):
        out.append("nontrivial inequality constraints present")
    return out


def validate_model(spec: ModelSpec) -> list[Violation]:
    """Collect every invariant violation of ``spec``; an empty list means valid."""
    out = []
    P, r = spec.transitions, spec.rewards
    A, S = spec.num_actions, spec.num_states
    if S < 1 or A < 1:
        return [Violation("shape", "need at least one state and one action")]
    if P.shape != (A, S, S):
        return [Violation("shape", f"transitions shape {P.shape} is not ({A}, {S}, {S})")]
    if r.shape != (A, S):
        out.append(Violation("shape", f"rewards shape {r.shape} is not ({A}, {S})"))
    for label, M, v in (("C", spec.C, spec.d), ("E", spec.E, spec.f)):
        if M.shape[:2] != (A, S) or M.ndim != 3 or v.shape != (M.shape[2],):
            out.append(Violation("shape", f"constraint block {label} has shape {M.shape}"))
    for label, arr in (("transitions", P), ("rewards", r), ("C", spec.C), ("d", spec.d),
                       ("E", spec.E), ("f", spec.f)):
        if not np.all(np.isfinite(arr)):
            out.append(Violation("nonfinite", f"{label} contains NaN or Inf"))
    for a in range(A):
        for i in range(S):
            row = P[a, i]
            if np.any(row < 0):
                out.append(Violation("negative_probability", "negative transition probability",
                                     action=a, row=i, magnitude=float(row.min())))
            err = abs(float(row.sum()) - 1.0)
            if not err <= PROB_TOL:
                out.append(Violation("row_sum", "transition row does not sum to 1",
                                     action=a, row=i, magnitude=err))
    if spec.finite_n_rule is FiniteNRule.BANDIT_FLOOR:
        for reason in bandit_assumption_violations(spec):
            out.append(Violation("bandit_assumption", reason))
    return out


def check_model(spec: ModelSpec) -> ModelSpec:
    violations = validate_model(spec)
    if violations:
        msg = "; ".join(str(v) for v in violations[:5])
        raise ModelError(f"invalid model: {msg}", violations)
    return spec


def load_model(path) -> ModelSpec:
    """Parse and validate a JSON model file."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise ModelError(f"cannot parse {path}: {exc}") from exc
    return check_model(ModelSpec.from_dict(doc))


def dump_model(spec: ModelSpec, path) -> None:
    Path(path).write_text(json.dumps(spec.to_dict(), indent=2) + "\n", encoding="utf-8")


def _reject_constant(name):
    raise ModelError(f"non-finite literal {name} is not allowed in model files")
