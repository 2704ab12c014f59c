"""Monte-Carlo simulation of n weakly coupled processes.

Frequency mode only tracks how many processes sit in each state: every step
the ``n y_n(t, i, a)`` processes in state ``i`` taking action ``a`` are moved
by one multinomial draw over row ``i`` of ``P(a)``. Agent mode tracks each arm
individually and is needed for policies that look at arm identities.

Every replication owns a counter-based Philox stream keyed by
``(seed, replication)``, so results do not depend on execution order.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .discrete import DiscreteAssignment, certify
from .fluid import fluid_trajectory
from .model import ModelSpec
from .validation import check_lattice


class SimMode(str, enum.Enum):
    FREQUENCY = "frequency"
    AGENT = "agent"


class SimulationError(RuntimeError):
    """A control or policy produced an infeasible action profile."""

    def __init__(self, message, step=None, certificate=None):
        super().__init__(message)
        self.step = step
        self.certificate = certificate


@dataclass
class SimConfig:
    n: int
    horizon: int
    burn_in: int | None = None  # defaults to horizon // 5
    replications: int = 1
    seed: int = 0
    mode: SimMode = SimMode.FREQUENCY
    initial: object = 0  # state index, occupancy measure (S,) or per-arm states (n,)
    record_trajectory: bool = False
    check_every_step: bool = True

    def __post_init__(self):
        self.mode = SimMode(self.mode)
        if self.n < 1 or self.horizon < 1 or self.replications < 1:
            raise ValueError("n, horizon and replications must be positive")
        if self.burn_in is None:
            self.burn_in = self.horizon // 5
        if not 0 <= self.burn_in < self.horizon:
            raise ValueError(f"burn_in must lie in [0, horizon), got {self.burn_in}")

    def to_dict(self):
        return {"n": self.n, "horizon": self.horizon, "burn_in": self.burn_in,
                "replications": self.replications, "seed": self.seed,
                "mode": self.mode.value}


@dataclass
class SimResult:
    gain_mean: float
    gain_stderr: float
    gains: np.ndarray  # one time-averaged gain per replication
    trajectories: np.ndarray | None = None  # (replications, horizon + 1, S) frequencies
    metadata: dict = field(default_factory=dict)

    def to_dict(self):
        return {"gain_mean": self.gain_mean, "gain_stderr": self.gain_stderr,
                "gains": [float(g) for g in self.gains], "metadata": self.metadata}


def replication_rng(seed: int, replication: int) -> np.random.Generator:
    """Independent Philox stream for one replication."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(replication),))
    return np.random.Generator(np.random.Philox(ss))


def initial_counts(spec: ModelSpec, initial, n: int):
    """State counts at time 0 from a state index or an occupancy measure in X_n."""
    S = spec.num_states
    if np.isscalar(initial):
        i = int(initial)
        if not 0 <= i < S:
            raise ValueError(f"initial state {i} out of range")
        counts = np.zeros(S, dtype=np.int64)
        counts[i] = n
        return counts
    x0 = np.asarray(initial, dtype=float)
    if x0.shape != (S,):
        raise ValueError(f"initial occupancy must have shape ({S},)")
    return check_lattice(x0, n)


def initial_arms(spec: ModelSpec, initial, n: int):
    """Per-arm states at time 0; occupancy measures are laid out in state order."""
    initial_arr = np.asarray(initial)
    if initial_arr.ndim == 1 and initial_arr.shape[0] == n and initial_arr.dtype.kind in "iu":
        if initial_arr.min() < 0 or initial_arr.max() >= spec.num_states:
            raise ValueError("per-arm initial states out of range")
        return initial_arr.astype(np.int64)
    counts = initial_counts(spec, initial, n)
    return np.repeat(np.arange(spec.num_states), counts)


def _flat_kernel(spec: ModelSpec):
    # row (i, a) of the result is p(. | i, a)
    S, A = spec.num_states, spec.num_actions
    return np.ascontiguousarray(np.transpose(spec.transitions, (1, 0, 2)).reshape(S * A, S))


def _check_assignment(asg, spec, n, x_counts, step):
    cert = certify(asg, spec, n, x=x_counts / n)
    if not cert.feasible:
        raise SimulationError(f"infeasible assignment at step {step}: "
                              + "; ".join(cert.violations), step, cert)


def frequency_path(spec: ModelSpec, control, n: int, horizon: int, x0_counts, rng,
                   check=True):
    """One replication in frequency mode.

    Returns the state counts ``(horizon + 1, S)`` and the state-action
    counts ``(horizon, S, A)``.
    """
    S, A = spec.num_states, spec.num_actions
    kernel = _flat_kernel(spec)
    xs = np.empty((horizon + 1, S), dtype=np.int64)
    ys = np.empty((horizon, S, A), dtype=np.int64)
    xs[0] = x0_counts
    for t in range(horizon):
        asg = control(xs[t] / n)
        if check:
            _check_assignment(asg, spec, n, xs[t], t)
        ys[t] = asg.counts
        xs[t + 1] = rng.multinomial(ys[t].ravel(), kernel).sum(axis=0)
    return xs, ys


def agent_path(spec: ModelSpec, policy, n: int, horizon: int, arms0, rng, check=True):
    """One replication in agent mode; ``policy(states, rng)`` returns one action per arm."""
    S, A = spec.num_states, spec.num_actions
    cdf = np.cumsum(spec.transitions, axis=2)
    states = np.array(arms0, dtype=np.int64)
    xs = np.empty((horizon + 1, S), dtype=np.int64)
    ys = np.empty((horizon, S, A), dtype=np.int64)
    xs[0] = np.bincount(states, minlength=S)
    for t in range(horizon):
        actions = np.asarray(policy(states, rng), dtype=np.int64)
        if actions.shape != (n,) or actions.min() < 0 or actions.max() >= A:
            raise SimulationError(f"policy returned malformed actions at step {t}", t)
        ys[t] = np.bincount(states * A + actions, minlength=S * A).reshape(S, A)
        if check:
            _check_assignment(DiscreteAssignment(ys[t], n), spec, n, xs[t], t)
        u = rng.random(n)
        nxt = (u[:, None] >= cdf[actions, states]).sum(axis=1)
        states = np.minimum(nxt, S - 1)  # guards against cdf rows ending at 1 - eps
        xs[t + 1] = np.bincount(states, minlength=S)
    return xs, ys


def _reward_series(ys, spec, n):
    return np.einsum("tia,ai->t", ys, spec.rewards) / n


def _stderr(gains, rewards_single):
    if len(gains) > 1:
        return float(np.std(gains, ddof=1) / np.sqrt(len(gains)))
    # one replication: fall back to 10 batch means within the run
    batches = np.array_split(rewards_single, 10)
    means = np.array([b.mean() for b in batches if len(b)])
    if len(means) < 2:
        return 0.0
    return float(np.std(means, ddof=1) / np.sqrt(len(means)))


def _simulate(spec, cfg, run_one):
    gains = np.empty(cfg.replications)
    trajs = [] if cfg.record_trajectory else None
    last_rewards = None
    for rep in range(cfg.replications):
        rng = replication_rng(cfg.seed, rep)
        xs, ys = run_one(rng)
        rewards = _reward_series(ys, spec, cfg.n)[cfg.burn_in:]
        gains[rep] = rewards.mean()
        last_rewards = rewards
        if trajs is not None:
            trajs.append(xs / cfg.n)
    return SimResult(
        gain_mean=float(np.mean(gains)),
        gain_stderr=_stderr(gains, last_rewards),
        gains=gains,
        trajectories=np.stack(trajs) if trajs is not None else None,
        metadata=cfg.to_dict(),
    )


def simulate_frequency(spec: ModelSpec, control, cfg: SimConfig) -> SimResult:
    """Gain of a discrete control ``x -> DiscreteAssignment`` in frequency mode."""
    if cfg.mode is not SimMode.FREQUENCY:
        raise ValueError("simulate_frequency needs mode FREQUENCY")
    x0 = initial_counts(spec, cfg.initial, cfg.n)
    return _simulate(spec, cfg, lambda rng: frequency_path(
        spec, control, cfg.n, cfg.horizon, x0, rng, cfg.check_every_step))


def simulate_agents(spec: ModelSpec, policy, cfg: SimConfig) -> SimResult:
    """Gain of a per-arm policy ``(states, rng) -> actions`` in agent mode."""
    if cfg.mode is not SimMode.AGENT:
        raise ValueError("simulate_agents needs mode AGENT")
    arms0 = initial_arms(spec, cfg.initial, cfg.n)
    return _simulate(spec, cfg, lambda rng: agent_path(
        spec, policy, cfg.n, cfg.horizon, arms0, rng, cfg.check_every_step))


def q_bounds(spec: ModelSpec):
    """``q_min(j)`` and ``q_max(j)``: extreme values of ``1 - p(j | i, a)``."""
    comp = 1.0 - spec.transitions
    return comp.min(axis=(0, 1)), comp.max(axis=(0, 1))


@dataclass
class MartingaleReport:
    mean_z: np.ndarray  # (T, S), index t is z_n(t + 1)
    se_z: np.ndarray
    mean_z2: np.ndarray
    se_z2: np.ndarray
    mean_x: np.ndarray  # (T, S), E[x_n(t + 1)]
    lower: np.ndarray
    upper: np.ndarray
    n: int
    replications: int

    @property
    def sandwich_ok(self):
        """Per-(t, j) flags: the second moment lies in the bounds within 3 se."""
        slack = 3.0 * self.se_z2 + 1e-15
        return (self.mean_z2 >= self.lower - slack) & (self.mean_z2 <= self.upper + slack)

    @property
    def mean_zero_ok(self):
        return np.abs(self.mean_z) <= 3.0 * self.se_z + 1e-15

    def summary(self):
        return {"n": self.n, "replications": self.replications,
                "sandwich_fraction": float(self.sandwich_ok.mean()),
                "mean_zero_fraction": float(self.mean_zero_ok.mean())}


def martingale_diagnostic(spec: ModelSpec, control, cfg: SimConfig) -> MartingaleReport:
    """Empirical moments of ``z_n(t+1) = x_n(t+1) - sum_a y_n(t, a) P(a)``.

    The second moments are compared with ``q(j)/n * E[x_n(t+1, j)]`` using
    ``q_min`` and ``q_max``.
    """
    if cfg.mode is not SimMode.FREQUENCY:
        raise ValueError("martingale_diagnostic needs mode FREQUENCY")
    n, T, R = cfg.n, cfg.horizon, cfg.replications
    x0 = initial_counts(spec, cfg.initial, n)
    S = spec.num_states
    z = np.empty((R, T, S))
    xn = np.empty((R, T, S))
    for rep in range(R):
        xs, ys = frequency_path(spec, control, n, T, x0, replication_rng(cfg.seed, rep),
                                cfg.check_every_step)
        drift = np.einsum("tia,aij->tj", ys / n, spec.transitions)
        z[rep] = xs[1:] / n - drift
        xn[rep] = xs[1:] / n
    z2 = z ** 2
    root = np.sqrt(R)
    q_min, q_max = q_bounds(spec)
    mean_x = xn.mean(axis=0)
    sd = (lambda a: a.std(axis=0, ddof=1)) if R > 1 else (lambda a: np.zeros(a.shape[1:]))
    return MartingaleReport(
        mean_z=z.mean(axis=0), se_z=sd(z) / root,
        mean_z2=z2.mean(axis=0), se_z2=sd(z2) / root,
        mean_x=mean_x, lower=q_min / n * mean_x, upper=q_max / n * mean_x,
        n=n, replications=R)


@dataclass
class MeanFieldReport:
    n_list: list
    mean_sup_dev: np.ndarray
    se_sup_dev: np.ndarray
    horizon: int

    @property
    def strictly_decreasing(self) -> bool:
        return bool(np.all(np.diff(self.mean_sup_dev) < 0))

    @property
    def loglog_slope(self) -> float | None:
        """Fitted slope of log deviation against log n (about -1/2 for CLT scaling)."""
        dev = self.mean_sup_dev
        if len(dev) < 2 or np.any(dev <= 0):
            return None
        return float(np.polyfit(np.log(self.n_list), np.log(dev), 1)[0])

    def to_dict(self):
        return {"n": list(self.n_list), "mean_sup_deviation": self.mean_sup_dev.tolist(),
                "stderr": self.se_sup_dev.tolist(), "horizon": self.horizon,
                "strictly_decreasing": self.strictly_decreasing,
                "loglog_slope": self.loglog_slope}


def meanfield_diagnostic(spec: ModelSpec, control_for_n, phi, x0, horizon: int, n_list,
                         replications: int = 20, seed: int = 0) -> MeanFieldReport:
    """Mean of ``sup_{t <= T} ||x_n(t) - x(t)||_inf`` for each ``n``.

    ``control_for_n(n)`` returns the discrete control for ``n`` processes and
    ``phi`` the fluid control it approximates. ``x0`` must lie in every X_n.
    """
    x0 = np.asarray(x0, dtype=float)
    n_list = [int(n) for n in n_list]
    if horizon == 0:
        zeros = np.zeros(len(n_list))
        return MeanFieldReport(n_list, zeros, zeros.copy(), 0)
    fluid = fluid_trajectory(phi, x0, horizon, spec).x_seq
    means, ses = [], []
    for k, n in enumerate(n_list):
        control = control_for_n(n)
        c0 = check_lattice(x0, n)
        devs = np.empty(replications)
        for rep in range(replications):
            rng = np.random.Generator(np.random.Philox(
                np.random.SeedSequence(int(seed), spawn_key=(k, rep))))
            xs, _ = frequency_path(spec, control, n, horizon, c0, rng)
            devs[rep] = np.abs(xs / n - fluid).max()
        means.append(devs.mean())
        ses.append(devs.std(ddof=1) / np.sqrt(replications) if replications > 1 else 0.0)
    return MeanFieldReport(n_list, np.array(means), np.array(ses), horizon)
