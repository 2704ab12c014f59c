import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from wcmdp.estimator import ConditionError, FluidPolicy
from wcmdp.fluid import PsiVariant
from wcmdp.instances import build_example
from wcmdp.model import ModelSpec
from wcmdp.relax import InfeasibleError


def test_params_and_clone():
    fp = FluidPolicy(policy="uniform")
    assert fp.get_params() == {"policy": "uniform", "variant": None, "psi": None}
    assert clone(fp).set_params(policy="mu").policy == "mu"


def test_not_fitted():
    with pytest.raises(NotFittedError):
        FluidPolicy().transform(np.ones(3) / 3)


def test_fit_attributes(taxi):
    fp = FluidPolicy().fit(taxi)
    assert fp.pi_name_ == "mu"
    assert fp.variant_ is PsiVariant.INEQUALITY
    assert fp.gamma_ == 0.7
    assert fp.g_r_ == fp.relaxation_.g_r
    assert fp.condition_reports_["mu"].holds


def test_transform_shapes(nonindexable):
    fp = FluidPolicy().fit(nonindexable)
    X = np.random.default_rng(0).dirichlet(np.ones(3), 5)
    assert fp.transform(X).shape == (5, 3, 2)
    assert np.allclose(fp.transform(X[0]), fp.transform(X)[0])
    with pytest.raises(ValueError):
        fp.transform(np.ones(3))


def periodic_optimum_model():
    # action 0 swaps states and pays 1, action 1 stays and pays 0
    P = np.array([[[0, 1], [1, 0]], [[1, 0], [0, 1]]], dtype=float)
    E = np.zeros((2, 2, 1))
    E[1, :, 0] = 1.0
    return ModelSpec.create(P, [[1.0, 1.0], [0.0, 0.0]], E=E, f=[1.0])


def test_falls_back_to_uniform():
    fp = FluidPolicy().fit(periodic_optimum_model())
    assert fp.condition_reports_["mu"].period == 2
    assert fp.pi_name_ == "uniform"
    assert np.allclose(fp.pi_, 0.5)


def test_both_candidates_fail():
    with pytest.raises(ConditionError) as err:
        FluidPolicy().fit(build_example("two_state_toy"))
    assert set(err.value.reports) == {"mu", "uniform"}
    with pytest.warns(UserWarning):
        FluidPolicy(policy="mu").fit(build_example("two_state_toy"))


def test_infeasible_model():
    spec = ModelSpec.create(np.stack([np.eye(2)]), np.zeros((1, 2)), C=np.ones((1, 2, 1)), d=[2.0])
    with pytest.raises(InfeasibleError):
        FluidPolicy().fit(spec)


def test_custom_policy_matrix(taxi):
    pi = np.full((8, 3), 1 / 3)
    fp = FluidPolicy(policy=pi).fit(taxi)
    assert fp.pi_name_ == "custom"
    with pytest.raises(ValueError):
        FluidPolicy(policy="bogus").fit(taxi)


def test_discretize(nonindexable):
    fp = FluidPolicy().fit(nonindexable)
    asg = fp.discrete_control(10)(np.array([0.3, 0.3, 0.4]))
    assert asg.counts[:, 1].sum() == 5
