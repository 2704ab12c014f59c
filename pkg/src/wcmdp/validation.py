"""Input checks for occupancy measures, state-action measures and policies."""

import numpy as np

MEASURE_TOL = 1e-9
POLICY_TOL = 1e-12


def check_occupancy(x, num_states=None, tol=MEASURE_TOL):
    """Return ``x`` as a float vector in the simplex X, or raise ``ValueError``."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError(f"occupancy measure must be 1-d, got shape {x.shape}")
    if num_states is not None and x.shape[0] != num_states:
        raise ValueError(f"occupancy measure has {x.shape[0]} entries, expected {num_states}")
    if np.any(x < -tol) or not np.all(np.isfinite(x)):
        raise ValueError("occupancy measure has negative or non-finite entries")
    if abs(x.sum() - 1.0) > tol:
        raise ValueError(f"occupancy measure sums to {x.sum()!r}, not 1")
    return x


def check_state_action(y, shape=None, tol=MEASURE_TOL):
    """Return ``y`` as an (S, A) array in the simplex Y, or raise ``ValueError``."""
    y = np.asarray(y, dtype=float)
    if y.ndim != 2:
        raise ValueError(f"state-action measure must be 2-d, got shape {y.shape}")
    if shape is not None and y.shape != tuple(shape):
        raise ValueError(f"state-action measure has shape {y.shape}, expected {tuple(shape)}")
    if np.any(y < -tol) or not np.all(np.isfinite(y)):
        raise ValueError("state-action measure has negative or non-finite entries")
    if abs(y.sum() - 1.0) > tol:
        raise ValueError(f"state-action measure sums to {y.sum()!r}, not 1")
    return y


def check_policy(pi, shape=None, tol=POLICY_TOL):
    """Return ``pi`` as an (S, A) row-stochastic array ``pi[i, a] = pi(a | i)``."""
    pi = np.asarray(pi, dtype=float)
    if pi.ndim != 2:
        raise ValueError(f"policy must be 2-d (state, action), got shape {pi.shape}")
    if shape is not None and pi.shape != tuple(shape):
        raise ValueError(f"policy has shape {pi.shape}, expected {tuple(shape)}")
    if np.any(pi < 0):
        raise ValueError("policy has negative entries")
    err = np.abs(pi.sum(axis=1) - 1.0)
    if np.any(err > tol):
        raise ValueError(f"policy row {int(err.argmax())} does not sum to 1")
    return pi


def check_lattice(x, n, tol=1e-9):
    """Return the integer counts ``n x`` if ``x`` lies in X_n, else raise ``ValueError``."""
    x = np.asarray(x, dtype=float)
    scaled = n * x
    counts = np.rint(scaled)
    if np.any(np.abs(scaled - counts) > tol * max(1, n)) or np.any(counts < 0):
        raise ValueError(f"x is not on the 1/{n} lattice")
    counts = counts.astype(np.int64)
    if counts.sum() != n:
        raise ValueError(f"n x sums to {counts.sum()}, expected {n}")
    return counts
