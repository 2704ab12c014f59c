"""Experiment sweeps over n and policies, with CSV/JSON persistence."""

from __future__ import annotations

import csv
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .baselines import IDPolicy, PriorityOrder, lp_priority_order, priority_control
from .estimator import ConditionError, FluidPolicy
from .instances import DEFAULT_INITIAL_STATE, EXAMPLES, build_example
from .model import ModelSpec, bandit_assumption_violations, load_model
from .relax import InfeasibleError, solve_fluid_relaxation
from .sim import SimConfig, SimMode, simulate_agents, simulate_frequency

POLICY_TYPES = ("fluid", "priority", "id", "custom")
DEFAULT_N_GRID = [10, 20, 50, 100, 200, 500, 1000, 2000]


class ConfigError(ValueError):
    """Invalid experiment configuration."""


@dataclass
class ExperimentConfig:
    """One sweep: a model, a list of policies and a grid of population sizes.

    Policy entries are dicts with a ``type``:

    - ``{"type": "fluid", "pi": "auto" | "mu" | "uniform"}``: the rounded fluid control
    - ``{"type": "custom", "pi": [[...], ...]}``: the rounded fluid control built on a given policy
    - ``{"type": "priority", "order": [i, ...] | "lp"}``: state-priority activation
    - ``{"type": "id", "mu": "mu" | [[...], ...]}``: the ID policy
    """

    model: str
    policies: list
    n_list: list = field(default_factory=lambda: list(DEFAULT_N_GRID))
    horizon: int = 2000
    burn_in: int | None = None
    replications: int = 10
    seed: int = 0
    output_dir: str = "results"
    initial: object = None  # state index or occupancy measure; None means the model default
    workers: int = 1

    def validate(self, spec: ModelSpec | None = None):
        if not self.policies:
            raise ConfigError("policy list is empty")
        if not self.n_list:
            raise ConfigError("n list is empty")
        if any(int(n) != n or n < 1 for n in self.n_list):
            raise ConfigError("n values must be positive integers")
        if any(b <= a for a, b in zip(self.n_list, self.n_list[1:])):
            raise ConfigError("n list must be strictly increasing")
        if self.horizon < 1 or self.replications < 1 or self.workers < 1:
            raise ConfigError("horizon, replications and workers must be positive")
        burn = self.horizon // 5 if self.burn_in is None else self.burn_in
        if not 0 <= burn < self.horizon:
            raise ConfigError("burn_in must lie in [0, horizon)")
        for p in self.policies:
            kind = p.get("type") if isinstance(p, dict) else None
            if kind not in POLICY_TYPES:
                raise ConfigError(f"unknown policy entry {p!r}; types are {POLICY_TYPES}")
            if kind == "priority" and "order" not in p:
                raise ConfigError("priority policy needs an 'order'")
            if kind == "custom" and "pi" not in p:
                raise ConfigError("custom policy needs a 'pi' matrix")
        if spec is not None:
            bandit = not bandit_assumption_violations(spec)
            for p in self.policies:
                if p["type"] in ("priority", "id") and not bandit:
                    raise ConfigError(f"{p['type']} policy needs a restless bandit model")
                if p["type"] == "priority" and p["order"] != "lp":
                    try:
                        order = PriorityOrder(p["order"])
                    except (TypeError, ValueError) as exc:
                        raise ConfigError(str(exc)) from exc
                    if len(order.order) != spec.num_states:
                        raise ConfigError("priority order length does not match the state count")
        return self

    @classmethod
    def from_dict(cls, data: dict):
        data = dict(data)
        if "n" in data and "n_list" not in data:
            data["n_list"] = data.pop("n")
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def load(cls, path):
        try:
            with open(path) as fh:
                return cls.from_dict(json.load(fh))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc

    def to_dict(self):
        return asdict(self)


def resolve_model(ref: str) -> ModelSpec:
    """Built-in example name or path to a model JSON file."""
    if ref in EXAMPLES:
        return build_example(ref)
    if not os.path.exists(ref):
        raise ConfigError(f"model {ref!r} is neither a built-in example {EXAMPLES} nor a file")
    return load_model(ref)


def policy_label(p: dict) -> str:
    kind = p["type"]
    if kind == "fluid":
        return f"fluid[{p.get('pi', 'auto')}]"
    if kind == "custom":
        return "fluid[custom]"
    if kind == "priority":
        order = p["order"]
        return "priority[lp]" if order == "lp" else f"priority[{PriorityOrder(order)}]"
    mu = p.get("mu", "mu")
    return f"id[{mu if isinstance(mu, str) else 'custom'}]"


def _fit_fluid(spec, p):
    pi = p.get("pi", "auto") if p["type"] == "fluid" else np.asarray(p["pi"], dtype=float)
    return FluidPolicy(policy=pi).fit(spec)


def _run_cell(job):
    """Simulate one (policy, n) cell; runs in a worker process when a pool is used."""
    spec, p, n, sim_kwargs = job
    d = float(spec.d[0]) if spec.num_eq else 0.0
    if p["type"] in ("fluid", "custom"):
        control = _fit_fluid(spec, p).discrete_control(n)
        return simulate_frequency(spec, control, SimConfig(n=n, **sim_kwargs))
    if p["type"] == "priority":
        order = lp_priority_order(solve_fluid_relaxation(spec)) if p["order"] == "lp" else p["order"]
        return simulate_frequency(spec, priority_control(order, d, n), SimConfig(n=n, **sim_kwargs))
    mu = p.get("mu", "mu")
    if isinstance(mu, str):
        mu = FluidPolicy(policy=mu).fit(spec).pi_
    return simulate_agents(spec, IDPolicy(mu, d, n),
                           SimConfig(n=n, mode=SimMode.AGENT, **sim_kwargs))


def cell_seed(seed: int, n: int) -> int:
    """Seed shared by all policies at the same n (common random numbers)."""
    return int(np.random.SeedSequence([int(seed), int(n)]).generate_state(1, np.uint64)[0])


@dataclass
class SweepResult:
    rows: list  # (model, policy, n, replication, gain)
    summary: dict
    results_path: Path | None = None
    summary_path: Path | None = None


def run_sweep(cfg: ExperimentConfig, write: bool = True) -> SweepResult:
    """Solve the relaxation, build the policies and simulate every (policy, n) cell.

    A failing unichain/aperiodic check disables the fluid policies only; the
    diagnostics are kept in the summary and the baselines still run.
    """
    spec = resolve_model(cfg.model)
    cfg.validate(spec)
    sol = solve_fluid_relaxation(spec)
    if not sol.optimal:
        raise InfeasibleError(f"fluid relaxation of {cfg.model!r} is infeasible")
    g_r = sol.g_r

    summary = {"model": cfg.model, "g_r": g_r, "config": cfg.to_dict(), "cells": []}
    fluid_ok = True
    try:
        fp = FluidPolicy().fit(spec)
        summary["pi_choice"] = fp.pi_name_
        summary["condition"] = {k: v.to_dict() for k, v in fp.condition_reports_.items()}
    except ConditionError as exc:
        fluid_ok = False
        summary["pi_choice"] = None
        summary["condition"] = {k: v.to_dict() for k, v in exc.reports.items()}
        summary["fluid_error"] = str(exc)
    if any(p["type"] == "priority" and p["order"] == "lp" for p in cfg.policies):
        summary["lp_priority_order"] = list(lp_priority_order(sol).order)

    initial = DEFAULT_INITIAL_STATE.get(cfg.model, 0) if cfg.initial is None else cfg.initial
    burn_in = cfg.horizon // 5 if cfg.burn_in is None else cfg.burn_in
    jobs, labels = [], []
    for p in cfg.policies:
        if p["type"] == "fluid" and p.get("pi", "auto") == "auto" and not fluid_ok:
            continue
        for n in cfg.n_list:
            sim_kwargs = dict(horizon=cfg.horizon, burn_in=burn_in,
                              replications=cfg.replications, seed=cell_seed(cfg.seed, n),
                              initial=initial)
            jobs.append((spec, p, int(n), sim_kwargs))
            labels.append((policy_label(p), int(n)))

    if cfg.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(_run_cell, jobs))
    else:
        results = [_run_cell(job) for job in jobs]

    rows = []
    for (label, n), res in zip(labels, results):
        for rep, g in enumerate(res.gains):
            rows.append((cfg.model, label, n, rep, float(g)))
        summary["cells"].append({
            "policy": label, "n": n, "replications": len(res.gains),
            "gain_mean": res.gain_mean, "gain_stderr": res.gain_stderr,
            "gap": (g_r - res.gain_mean) / g_r if g_r != 0 else None,
        })
    summary["simulation"] = {"horizon": cfg.horizon, "burn_in": burn_in,
                             "replications": cfg.replications, "initial": initial}

    out = SweepResult(rows, summary)
    if write:
        out.results_path, out.summary_path = write_results(rows, summary, cfg.output_dir)
    return out


def write_results(rows, summary, output_dir):
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    results_path = out / "results.csv"
    with open(results_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["model", "policy", "n", "replication", "gain"])
        for model, label, n, rep, g in rows:
            w.writerow([model, label, n, rep, repr(g)])
    summary_path = out / "summary.json"
    with open(summary_path, "w") as fh:
        json.dump(summary, fh, indent=2, default=_json_default)
        fh.write("\n")
    return results_path, summary_path


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


PRESETS = ("fig1", "fig2_left", "fig2_right")


def reproduce(name: str, output_dir: str | None = None) -> ExperimentConfig:
    """Preset configuration regenerating the data behind one figure panel."""
    if name == "fig1":
        cfg = ExperimentConfig(model="taxi", policies=[{"type": "fluid", "pi": "auto"}])
    elif name == "fig2_left":
        cfg = ExperimentConfig(model="nonindexable", policies=[
            {"type": "fluid", "pi": "auto"},
            {"type": "priority", "order": "lp"},
            {"type": "id", "mu": "mu"},
        ])
    elif name == "fig2_right":
        cfg = ExperimentConfig(model="attractor_fail", policies=[
            {"type": "fluid", "pi": "auto"},
            {"type": "priority", "order": "lp"},
        ])
    else:
        raise ConfigError(f"unknown preset {name!r}; valid names: {', '.join(PRESETS)}")
    cfg.initial = 0
    cfg.output_dir = output_dir or f"results/{name}"
    return cfg
