"""Fluid relaxations and asymptotically optimal controls for weakly coupled MDPs."""

from .baselines import IDPolicy, PriorityAgentPolicy, PriorityOrder, id_policy, lp_priority_order, priority_control
from .discrete import Certificate, DiscreteAssignment, certify, round_bandit, round_inequality
from .estimator import ConditionError, FluidPolicy
from .fluid import FluidControlSpec, beta, compose_phi, converge, fluid_trajectory, residual
from .harness import ExperimentConfig, reproduce, run_sweep
from .instances import EXAMPLES, build_example
from .model import FiniteNRule, ModelError, ModelSpec, load_model, validate_model
from .relax import InfeasibleError, RelaxationSolution, solve_fluid_relaxation
from .sim import SimConfig, SimMode, SimResult, martingale_diagnostic, meanfield_diagnostic, simulate_agents, simulate_frequency

__all__ = [
    "Certificate", "ConditionError", "DiscreteAssignment", "EXAMPLES", "ExperimentConfig",
    "FiniteNRule", "FluidControlSpec", "FluidPolicy", "IDPolicy", "InfeasibleError",
    "ModelError", "ModelSpec", "PriorityAgentPolicy", "PriorityOrder", "RelaxationSolution",
    "SimConfig", "SimMode", "SimResult", "beta", "build_example", "certify", "compose_phi",
    "converge", "fluid_trajectory", "id_policy", "load_model", "lp_priority_order",
    "martingale_diagnostic", "meanfield_diagnostic", "priority_control", "reproduce",
    "residual", "round_bandit", "round_inequality", "run_sweep", "simulate_agents",
    "simulate_frequency", "solve_fluid_relaxation", "validate_model",
]
