"""Command line entry point: ``discfrag {check,weights,simulate,matrix,decay}``.

Exit status is 0 when every requested check passes, 1 when a check fails or
the solver gives up, and 2 for an invalid configuration.  Failures print a
JSON error object on stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import config as config_mod
from ._validation import PreconditionError
from .coefficients import check_mass_rule, check_nonnegativity, estimate_holder
from .diagnostics import check_monomer_decay, check_opnorm_decay, decomp_bound_check
from .solver import SolverError, compose_check, evolution_matrix, integrate

POSITIVITY_TOL = 1e-12
MASS_TOL = 1e-10
COMPOSE_TOL = 1e-8


def _dump(obj):
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n"


def _write(out, name, text):
    path = Path(out) / name
    path.write_text(text, encoding="utf-8", newline="\n")
    return str(path)


def _random_decomposition(w, N, count, rng):
    """Worst slack ``rhs - lhs`` over random zero-mass vectors."""
    worst = np.inf
    n = np.arange(1, N + 1)
    for _ in range(count):
        g = rng.standard_normal(N)
        g[0] = -(n[1:] @ g[1:])
        lhs, rhs = decomp_bound_check(g, w)
        worst = min(worst, rhs - lhs)
    return float(worst) if count else None


def cmd_check(cfg, out, rng):
    family, N, grid = cfg.family(), cfg.N, cfg.grid()
    opts = cfg.checks()
    weight = cfg.weight(family)
    nonneg = check_nonnegativity(family, N + 1, grid)
    mass = check_mass_rule(family, N + 1, grid)
    holder = estimate_holder(family, weight, opts["sigma"], N + 1, grid)
    slack = _random_decomposition(weight.w, N, opts["random_vectors"], rng)
    checks = {
        "nonnegativity": nonneg.passed,
        "weight": weight.certified,
        "holder": holder.certified,
        "decomposition": slack is None or slack >= -1e-12,
    }
    if opts["require_mass_conserving"]:
        checks["mass_conserving"] = mass.conserving
    report = {
        "family": family.describe(),
        "nonnegativity": {"passed": nonneg.passed, "reason": nonneg.reason,
                          "witness": None if nonneg.witness is None else list(nonneg.witness)},
        "mass_rule": mass.to_dict(),
        "weight": weight.to_json_dict(),
        "holder": holder.to_dict(),
        "decomposition": {"vectors": opts["random_vectors"], "worst_slack": slack},
        "checks": checks,
        "passed": all(checks.values()),
    }
    _write(out, "check_report.json", _dump(report))
    return 0 if report["passed"] else 1, report


def cmd_weights(cfg, out, rng):
    weight = cfg.weight(cfg.family())
    _write(out, "weight.json", weight.to_json() + "\n")
    return 0 if weight.certified else 1, weight.to_json_dict()


def cmd_simulate(cfg, out, rng):
    family = cfg.family()
    weight = cfg.weight(family)
    u0 = cfg.initial()
    times = cfg.output_times()
    traj = integrate(family, u0, 0.0, cfg.horizon, cfg.solver(), t_eval=times)
    w = weight.w[: cfg.N]
    masses = traj.masses()
    m0 = masses[0]
    drift = float(np.max(np.abs(masses - m0)) / abs(m0)) if m0 != 0 else float(np.max(np.abs(masses)))
    conserving = check_mass_rule(family, max(cfg.N, 2), cfg.grid()).conserving
    min_component = float(traj.values.min())
    positive = bool(np.all(u0 >= 0))
    checks = {}
    if positive:
        checks["positivity"] = min_component >= -POSITIVITY_TOL
        checks["nonvanishing"] = bool(np.all(traj.weighted_norms(w) > 0)) or not np.any(u0)
        if conserving:
            checks["mass_conservation"] = drift <= MASS_TOL
    report = {
        "min_component": min_component,
        "mass_drift": drift,
        "mass_conserving_family": conserving,
        "checks": checks,
        "passed": all(checks.values()),
    }
    _write(out, "trajectory.csv", traj.to_csv(w))
    _write(out, "trajectory_stats.json", traj.stats_json() + "\n")
    _write(out, "simulate_report.json", _dump(report))
    return 0 if report["passed"] else 1, report


def cmd_matrix(cfg, out, rng, s=None, t=None):
    family = cfg.family()
    spec = cfg.raw.get("matrix", {})
    s = spec.get("s", 0.0) if s is None else s
    t = spec.get("t", cfg.horizon) if t is None else t
    solver = cfg.solver()
    U = evolution_matrix(family, s, t, cfg.N, solver)
    w = cfg.weight(family).w[: cfg.N]
    defect = compose_check(family, s, 0.5 * (s + t), t, cfg.N, solver, w)
    report = {
        "s": s,
        "t": t,
        "N": cfg.N,
        "compose_midpoint": 0.5 * (s + t),
        "compose_defect": defect,
        "min_entry": float(U.entries.min()),
        "lower_triangle_zero": bool(np.all(np.tril(U.entries, -1) == 0)),
    }
    report["passed"] = bool(
        report["lower_triangle_zero"]
        and report["min_entry"] >= -POSITIVITY_TOL
        and defect <= COMPOSE_TOL
    )
    _write(out, "matrix.csv", U.to_csv())
    _write(out, "matrix.json", U.to_json() + "\n")
    _write(out, "matrix_report.json", _dump(report))
    return 0 if report["passed"] else 1, report


def cmd_decay(cfg, out, rng):
    family = cfg.family()
    weight = cfg.weight(family)
    solver = cfg.solver()
    grid = cfg.output_times()
    op = check_opnorm_decay(family, weight, 0.0, cfg.horizon, cfg.N, solver, grid)
    mono = check_monomer_decay(family, weight, cfg.initial(), 0.0, grid, solver)
    _write(out, "decay_opnorm.json", op.to_json() + "\n")
    _write(out, "decay_opnorm.csv", op.to_csv())
    _write(out, "decay_monomer.json", mono.to_json() + "\n")
    _write(out, "decay_monomer.csv", mono.to_csv())
    passed = bool(op.passed and op.extra["contraction"] and mono.passed is not False)
    report = {
        "opnorm": {"passed": op.passed, "margin": op.margin, "contraction": op.extra["contraction"]},
        "monomer": {"applicable": mono.applicable, "passed": mono.passed,
                    "margin": mono.margin if mono.applicable else None},
        "passed": passed,
    }
    _write(out, "decay_report.json", _dump(report))
    return 0 if passed else 1, report


COMMANDS = {
    "check": cmd_check,
    "weights": cmd_weights,
    "simulate": cmd_simulate,
    "matrix": cmd_matrix,
    "decay": cmd_decay,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="discfrag", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON run configuration")
        p.add_argument("--out", default=".", help="output directory (default: .)")
        p.add_argument("--seed", type=int, default=None, help="overrides the config seed")
        p.add_argument("--workers", type=int, default=None, help="overrides the config worker count")
        if name == "matrix":
            p.add_argument("--s", type=float, default=None, help="initial time")
            p.add_argument("--t", type=float, default=None, help="final time")
    return parser


def _fail(code, kind, message, details=()):
    sys.stderr.write(_dump({"error": kind, "message": message, "details": list(details)}))
    return code


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = config_mod.load(args.config)
        if args.workers is not None:
            if args.workers < 1:
                raise config_mod.ConfigError("--workers must be >= 1")
            cfg = config_mod.RunConfig({**cfg.raw, "workers": args.workers})
    except config_mod.ConfigError as exc:
        return _fail(2, "invalid_config", str(exc), exc.details)
    seed = cfg.seed if args.seed is None else args.seed
    rng = np.random.default_rng(seed)
    Path(args.out).mkdir(parents=True, exist_ok=True)
    extra = {"s": args.s, "t": args.t} if args.command == "matrix" else {}
    try:
        code, report = COMMANDS[args.command](cfg, args.out, rng, **extra)
    except config_mod.ConfigError as exc:
        return _fail(2, "invalid_config", str(exc), exc.details)
    except SolverError as exc:
        return _fail(1, "solver_failure", str(exc))
    except (PreconditionError, ValueError) as exc:
        return _fail(1, "check_failure", str(exc))
    sys.stdout.write(_dump({"command": args.command, "exit": code, "passed": code == 0}))
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
