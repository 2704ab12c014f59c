"""Command-line interface.

Exit codes: 0 success, 2 invalid input (model, config or arguments),
3 infeasible fluid relaxation.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from .baselines import IDPolicy, PriorityOrder, lp_priority_order, priority_control
from .conditions import check_policy_condition
from .estimator import ConditionError, FluidPolicy
from .fluid import converge
from .harness import PRESETS, ConfigError, ExperimentConfig, reproduce, resolve_model, run_sweep
from .instances import DEFAULT_INITIAL_STATE, EXAMPLES, build_example
from .model import ModelError, dump_model
from .relax import InfeasibleError, policy_from_relaxation, solve_fluid_relaxation, uniform_policy
from .sim import SimConfig, SimMode, simulate_agents, simulate_frequency

EXIT_OK, EXIT_INVALID, EXIT_INFEASIBLE = 0, 2, 3


def _emit(obj):
    json.dump(obj, sys.stdout, indent=2, default=_default)
    sys.stdout.write("\n")


def _default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def cmd_solve(args):
    spec = resolve_model(args.model)
    sol = solve_fluid_relaxation(spec)
    _emit(sol.to_dict())
    return EXIT_OK if sol.optimal else EXIT_INFEASIBLE


def cmd_fluid_check(args):
    spec = resolve_model(args.model)
    sol = solve_fluid_relaxation(spec)
    if not sol.optimal:
        _emit({"status": sol.status})
        return EXIT_INFEASIBLE
    pi = policy_from_relaxation(sol) if args.policy == "mu" else uniform_policy(spec)
    report = check_policy_condition(pi, spec, sol.support)
    out = {"policy": args.policy, "condition": report.to_dict()}
    if report.holds:
        fp = FluidPolicy(policy=args.policy).fit(spec)
        rng = np.random.default_rng(args.seed)
        starts = list(np.eye(spec.num_states)) + list(rng.dirichlet(np.ones(spec.num_states),
                                                                      args.samples))
        runs = [converge(fp.phi_, x0, spec, sol.x_star, sol.support, tol=args.tol,
                         max_steps=args.max_steps) for x0 in starts]
        steps = [r.steps for r in runs if r.converged]
        out["convergence"] = {
            "initial_conditions": len(runs),
            "converged": len(steps),
            "tol": args.tol,
            "max_steps_to_tol": max(steps) if steps else None,
            "mean_steps_to_tol": float(np.mean(steps)) if steps else None,
            "beta_monotone": all(r.beta_monotone for r in runs),
        }
    _emit(out)
    return EXIT_OK


def _parse_policy(name, spec, n):
    """Returns (mode, control or per-arm policy, label)."""
    d = float(spec.d[0]) if spec.num_eq else 0.0
    if name in ("fluid", "fluid-mu", "fluid-uniform"):
        which = {"fluid": "auto", "fluid-mu": "mu", "fluid-uniform": "uniform"}[name]
        fp = FluidPolicy(policy=which).fit(spec)
        return SimMode.FREQUENCY, fp.discrete_control(n), f"fluid[{fp.pi_name_}]"
    if name == "priority-lp":
        order = lp_priority_order(solve_fluid_relaxation(spec))
        return SimMode.FREQUENCY, priority_control(order, d, n), f"priority[{order}]"
    if name.startswith("priority:"):
        order = PriorityOrder([int(s) for s in name.split(":", 1)[1].split(",")])
        return SimMode.FREQUENCY, priority_control(order, d, n), f"priority[{order}]"
    if name == "id":
        mu = FluidPolicy(policy="mu").fit(spec).pi_
        return SimMode.AGENT, IDPolicy(mu, d, n), "id[mu]"
    raise ConfigError(f"unknown policy {name!r}; use fluid, fluid-mu, fluid-uniform, "
                      "priority-lp, priority:<i,j,...> or id")


def cmd_simulate(args):
    spec = resolve_model(args.model)
    mode, rule, label = _parse_policy(args.policy, spec, args.n)
    initial = DEFAULT_INITIAL_STATE.get(args.model, 0) if args.initial is None else args.initial
    cfg = SimConfig(n=args.n, horizon=args.t, burn_in=args.burn_in, replications=args.reps,
                    seed=args.seed, mode=mode, initial=initial,
                    record_trajectory=args.trace is not None)
    res = simulate_frequency(spec, rule, cfg) if mode is SimMode.FREQUENCY \
        else simulate_agents(spec, rule, cfg)
    g_r = solve_fluid_relaxation(spec).g_r
    out = res.to_dict()
    out.update({"model": args.model, "policy": label, "g_r": g_r,
                "gap": (g_r - res.gain_mean) / g_r if g_r else None})
    if args.trace:
        with open(args.trace, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "state", "frequency"])
            for t, x in enumerate(res.trajectories[0]):
                for i, v in enumerate(x):
                    w.writerow([t, i, repr(float(v))])
        out["trace"] = args.trace
    _emit(out)
    return EXIT_OK


def _print_sweep(result):
    _emit({"results": str(result.results_path), "summary": str(result.summary_path),
           "g_r": result.summary["g_r"], "pi_choice": result.summary.get("pi_choice"),
           "cells": result.summary["cells"]})


def cmd_sweep(args):
    cfg = ExperimentConfig.load(args.config)
    if args.out:
        cfg.output_dir = args.out
    if args.workers:
        cfg.workers = args.workers
    _print_sweep(run_sweep(cfg))
    return EXIT_OK


def cmd_reproduce(args):
    cfg = reproduce(args.name, args.out)
    for key in ("horizon", "replications", "workers"):
        if getattr(args, key):
            setattr(cfg, key, getattr(args, key))
    if args.dry_run:
        _emit(cfg.to_dict())
        return EXIT_OK
    _print_sweep(run_sweep(cfg))
    return EXIT_OK


def cmd_example(args):
    spec = build_example(args.name)
    if args.emit:
        dump_model(spec, args.emit)
        _emit({"example": args.name, "written": args.emit})
    else:
        _emit(spec.to_dict())
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="wcmdp", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve the fluid relaxation")
    p.add_argument("model", help="model JSON file or built-in example name")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("fluid-check", help="check the policy condition and fluid convergence")
    p.add_argument("model")
    p.add_argument("--policy", choices=("mu", "uniform"), default="mu")
    p.add_argument("--samples", type=int, default=20, help="random initial conditions")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--max-steps", type=int, default=10_000)
    p.set_defaults(func=cmd_fluid_check)

    p = sub.add_parser("simulate", help="simulate n processes under one policy")
    p.add_argument("model")
    p.add_argument("--policy", default="fluid")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--t", type=int, default=2000)
    p.add_argument("--burn-in", type=int, default=None)
    p.add_argument("--reps", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--initial", type=int, default=None, help="state every process starts in")
    p.add_argument("--trace", default=None, help="CSV of (t, state, frequency), replication 0")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="run an experiment config")
    p.add_argument("config")
    p.add_argument("--out", default=None)
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("reproduce", help="regenerate the data of a figure panel")
    p.add_argument("name", choices=PRESETS)
    p.add_argument("--out", default=None)
    p.add_argument("--horizon", type=int, default=None)
    p.add_argument("--replications", type=int, default=None)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--dry-run", action="store_true", help="print the preset config only")
    p.set_defaults(func=cmd_reproduce)

    p = sub.add_parser("example", help="print or write a built-in model")
    p.add_argument("name", choices=EXAMPLES)
    p.add_argument("--emit", default=None, help="write the model JSON here")
    p.set_defaults(func=cmd_example)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except ConditionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        _emit({"condition": {k: v.to_dict() for k, v in exc.reports.items()}})
        return EXIT_INVALID
    except (ModelError, ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
