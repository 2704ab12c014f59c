import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from wcmdp.instances import build_example
from wcmdp.model import ModelSpec
from wcmdp.relax import solve_fluid_relaxation

settings.register_profile("default", deadline=None, max_examples=200,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def taxi():
    return build_example("taxi")


@pytest.fixture(scope="session")
def nonindexable():
    return build_example("nonindexable")


@pytest.fixture(scope="session")
def attractor_fail():
    return build_example("attractor_fail")


@pytest.fixture(scope="session")
def taxi_sol(taxi):
    return solve_fluid_relaxation(taxi)


@pytest.fixture(scope="session")
def nonindexable_sol(nonindexable):
    return solve_fluid_relaxation(nonindexable)


def random_kernel(rng, A, S, sparsity=0.0):
    P = rng.random((A, S, S))
    P[rng.random((A, S, S)) < sparsity] = 0.0
    P[:, np.arange(S), np.arange(S)] += 1e-3  # no empty rows
    return P / P.sum(axis=2, keepdims=True)


def unconstrained(P, r=None):
    A, S = P.shape[0], P.shape[1]
    return ModelSpec.create(P, np.zeros((A, S)) if r is None else r)
