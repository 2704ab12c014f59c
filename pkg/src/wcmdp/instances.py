"""Built-in problem instances."""

import numpy as np
from scipy.stats import poisson

from .model import FiniteNRule, ModelSpec, check_model

EXAMPLES = ("taxi", "nonindexable", "attractor_fail", "two_state_toy")

# initial state used by the experiments on each instance
DEFAULT_INITIAL_STATE = {"taxi": 0, "nonindexable": 0, "attractor_fail": 0, "two_state_toy": 0}


def _depletion_kernel(num_states, lam):
    """Kernel of ``max(i - X, 0)`` with ``X ~ Poisson(lam)``; the tail lumps at 0."""
    P = np.zeros((num_states, num_states))
    pmf = poisson.pmf(np.arange(num_states), lam)
    for i in range(num_states):
        for j in range(1, i + 1):
            P[i, j] = pmf[i - j]
        P[i, 0] = 1.0 - pmf[:i].sum()
    return P


def taxi(num_states=8, lam=(2.0, 1.0), b=(3.0, 2.5), c=(3.0, 2.0, 2.0),
         f=(0.7, 0.9)) -> ModelSpec:
    """Electric taxi fleet: deploy at the airport (0), the city (1) or charge (2)."""
    S = num_states
    states = np.arange(S)
    P = np.zeros((3, S, S))
    P[0] = _depletion_kernel(S, lam[0])
    P[1] = _depletion_kernel(S, lam[1])
    P[2, states, np.minimum(states + 2, S - 1)] = 1.0

    r = np.zeros((3, S))
    below0 = np.array([poisson.cdf(i - 1, lam[0]) for i in states])  # P(X_0 < i)
    r[0] = b[0] * below0 - c[0] * (1.0 - below0)
    k = np.arange(S)
    pmf1 = poisson.pmf(k, lam[1])
    below1 = np.array([pmf1[:i].sum() for i in states])
    partial_mean = np.array([(k[:i] * pmf1[:i]).sum() for i in states])  # E[X_1 1{X_1 < i}]
    r[1] = b[1] * partial_mean - c[1] * (1.0 - below1)
    r[2] = -c[2]

    # charging spots (charge only), and airport quota (city + charge <= 0.9)
    E = np.zeros((3, S, 2))
    E[2, :, 0] = 1.0
    E[1, :, 1] = 1.0
    E[2, :, 1] = 1.0
    return ModelSpec.create(P, r, E=E, f=np.array(f), name="taxi")


def _bandit(P0, P1, r1, d, name, renormalize=False):
    P = np.array([P0, P1], dtype=float)
    if renormalize:
        P /= P.sum(axis=2, keepdims=True)
    S = P.shape[1]
    r = np.vstack([np.zeros(S), r1])
    C = np.zeros((2, S, 1))
    C[1, :, 0] = 1.0
    return ModelSpec.create(P, r, C=C, d=[d], finite_n_rule=FiniteNRule.BANDIT_FLOOR, name=name)


# Printed 4-digit data: (P(0), P(1), r(., 1), d).
NONINDEXABLE_DATA = (
    ((0.0050, 0.7930, 0.2020),
     (0.0270, 0.5580, 0.4150),
     (0.7360, 0.2490, 0.0150)),
    ((0.7180, 0.2540, 0.0280),
     (0.3470, 0.0970, 0.5560),
     (0.0150, 0.9560, 0.0290)),
    (0.6990, 0.3620, 0.7150),
    0.5,
)

ATTRACTOR_FAIL_DATA = (
    ((0.0223, 0.1023, 0.8754),
     (0.0343, 0.1718, 0.7940),
     (0.5232, 0.4552, 0.0215)),
    ((0.1487, 0.3044, 0.5469),
     (0.5685, 0.4112, 0.0204),
     (0.2527, 0.2731, 0.4742)),
    (0.3740, 0.1174, 0.0787),
    0.4,
)


def nonindexable() -> ModelSpec:
    return _bandit(*NONINDEXABLE_DATA, "nonindexable")


def attractor_fail() -> ModelSpec:
    # several printed rows sum to 0.9999 or 1.0001, so rows are rescaled
    return _bandit(*ATTRACTOR_FAIL_DATA, "attractor_fail", renormalize=True)


def two_state_toy() -> ModelSpec:
    eye = np.eye(2)
    return _bandit(eye, eye, [0.0, 1.0], 0.5, "two_state_toy")


_BUILDERS = {
    "taxi": taxi,
    "nonindexable": nonindexable,
    "attractor_fail": attractor_fail,
    "two_state_toy": two_state_toy,
}


def build_example(name: str) -> ModelSpec:
    try:
        builder = _BUILDERS[name]
    except KeyError:
        raise ValueError(f"unknown example {name!r}; choose from {', '.join(EXAMPLES)}") from None
    return check_model(builder())
