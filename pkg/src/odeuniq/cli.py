"""Command-line front end: load a JSON problem description, run criterion
checks, reparametrizations, or solver probes, and emit deterministic JSON
or CSV reports.

Subcommands
-----------
check    run requested uniqueness criteria, exit 0 pass / 1 fail / 2 config
reparam  build tau(t), emit (t, tau) table and residual diagnostics
solve    integrate the trajectory x' = -f(t,x), emit CSV
funnel   backward-reachability probe of the zero solution, emit JSON
suite    run checks + funnel over a corpus directory, combined matrix

Problem files are JSON with string expression fields, e.g.
{"f": "t*x", "u": "t", "omega": "r", "T": 1.0, "x_bound": 1.0}.
Reports embed the fully resolved configuration and a schema version;
no timestamps, so repeated runs are byte-identical.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import criteria, reparam as reparam_mod, solver as solver_mod
from .criteria import CheckConfig, ProblemSpec, ProblemValidationError
from .expr import ExprError

SCHEMA_VERSION = "1.0"

CRITERION_NAMES = ("nagumo", "athanassov", "constantin",
                   "theorem1", "theorem1-reduced")


class ConfigError(Exception):
    """Invalid invocation or problem file; maps to exit code 2."""

    def __init__(self, messages):
        if isinstance(messages, str):
            messages = [messages]
        self.messages = list(messages)
        super().__init__("; ".join(self.messages))


def _fmt(x) -> str:
    return f"{float(x):.17g}"


def _sanitize(obj):
    """Make an object json-serializable and deterministic; non-finite
    floats become their repr strings."""
    if isinstance(obj, dict):
        return {str(k): _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return [_sanitize(v) for v in obj.tolist()]
    return obj


def _write_json(path, payload):
    text = json.dumps(_sanitize(payload), sort_keys=True, indent=2) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _write_csv(path, header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) if isinstance(v, (int, float, np.floating))
                              else str(v) for v in row))
    text = "\n".join(lines) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def load_problem(path, T_override=None) -> ProblemSpec:
    try:
        raw = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"problem: file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"problem: invalid JSON: {exc}")
    if not isinstance(raw, dict):
        raise ConfigError("problem: top-level JSON value must be an object")
    if T_override is not None:
        raw = dict(raw)
        raw["T"] = T_override
    try:
        return ProblemSpec.from_dict(raw)
    except (ExprError, ProblemValidationError, ValueError, KeyError) as exc:
        raise ConfigError(f"problem: {exc}")


def _build_config(args) -> CheckConfig:
    kwargs = {}
    if getattr(args, "eps_min", None) is not None:
        kwargs["eps_min"] = args.eps_min
    if getattr(args, "eps_max", None) is not None:
        kwargs["eps_max"] = args.eps_max
    if getattr(args, "n", None) is not None:
        kwargs["n_t"] = args.n
    cfg = CheckConfig(**kwargs)
    if cfg.eps_min <= 0 or cfg.eps_max <= cfg.eps_min:
        raise ConfigError("check: require 0 < eps-min < eps-max")
    if cfg.n_t < 2:
        raise ConfigError("check: grid size n must be at least 2")
    return cfg


def _config_dict(args, extra=None):
    d = {"schema_version": SCHEMA_VERSION}
    skip = {"func", "out", "command"}
    for k, v in sorted(vars(args).items()):
        if k in skip or callable(v):
            continue
        d[k] = _sanitize(v)
    if extra:
        d.update(_sanitize(extra))
    return d


# ---------------------------------------------------------------------------
# check

_REQUIRED_GAUGES = {
    "nagumo": (),
    "athanassov": ("u",),
    "constantin": ("u", "omega"),
    "theorem1": ("v", "lam", "omega"),
    "theorem1-reduced": ("u", "omega"),
}

_GAUGE_ROLE = {
    "u": "gauge u (coefficient/comparison criteria)",
    "v": "gauge v (weight criterion hypothesis set)",
    "lam": "gauge lambda (weight criterion hypothesis set)",
    "omega": "comparison function omega",
}


def run_checks(problem: ProblemSpec, names, config: CheckConfig):
    """Shared by cmd_check and cmd_suite so their reports agree exactly."""
    reports = []
    for name in names:
        if name == "nagumo":
            rep = criteria.check_nagumo(problem, config)
        elif name == "athanassov":
            rep = criteria.check_athanassov(problem, config)
        elif name == "constantin":
            rep = criteria.check_constantin(problem, config)
        elif name == "theorem1":
            rep = criteria.check_theorem_main(problem, config)
            rep.criterion = "theorem1"
        elif name == "theorem1-reduced":
            v, lam = criteria.reduce_to_constantin(problem.u)
            reduced = ProblemSpec(f=problem.f, u=problem.u, v=v, lam=lam,
                                  omega=problem.omega, T=problem.T,
                                  x_bound=problem.x_bound,
                                  name=problem.name)
            rep = criteria.check_theorem_main(reduced, config)
            rep.criterion = "theorem1-reduced"
        else:
            raise ConfigError(f"criteria: unknown criterion {name!r} "
                              f"(expected one of {', '.join(CRITERION_NAMES)})")
        reports.append(rep)
    return reports


def cmd_check(args) -> int:
    problems = []
    names = [s for s in (args.criteria or "").split(",") if s]
    if not names:
        problems.append("criteria: empty criteria list")
    for name in names:
        if name not in _REQUIRED_GAUGES:
            problems.append(f"criteria: unknown criterion {name!r}")
    try:
        problem = load_problem(args.problem, args.T)
        config = _build_config(args)
    except ConfigError as exc:
        problems.extend(exc.messages)
        problem = config = None
    if problem is not None:
        for name in names:
            if name not in _REQUIRED_GAUGES:
                continue
            for g in _REQUIRED_GAUGES[name]:
                if getattr(problem, g, None) is None:
                    problems.append(
                        f"criteria: {name} requires {_GAUGE_ROLE[g]} "
                        f"missing from {args.problem}")
    if problems:
        for msg in problems:
            print(f"config error: {msg}", file=sys.stderr)
        return 2
    reports = run_checks(problem, names, config)
    payload = {
        "schema_version": SCHEMA_VERSION,
        "config": _config_dict(args, {"problem_name": problem.name}),
        "reports": [r.to_dict() for r in reports],
    }
    _write_json(args.out, payload)
    for r in reports:
        print(f"{r.criterion}: {'pass' if r.overall else 'fail'}")
    return 0 if all(r.overall for r in reports) else 1


# ---------------------------------------------------------------------------
# reparam

def cmd_reparam(args) -> int:
    try:
        problem = load_problem(args.problem, args.T)
        if problem.lam is not None:
            lam = problem.lam
            v = problem.v
        elif problem.u is not None:
            v, lam = criteria.reduce_to_constantin(problem.u)
        else:
            raise ConfigError(
                "reparam: problem provides neither lambda nor u")
    except ConfigError as exc:
        for msg in exc.messages:
            print(f"config error: {msg}", file=sys.stderr)
        return 2

    t_min = None
    if args.t_floor is not None:
        t_min = args.t_floor
    try:
        rep = reparam_mod.build_tau(lam, problem.T, t_min=t_min)
    except reparam_mod.ReparamError as exc:
        print(f"reparam: {exc}", file=sys.stderr)
        return 1

    diagnostics = {
        "tau_plus": rep.tau_plus,
        "tau_horizon": rep.tau_horizon,
        "t_min": rep.t_min,
    }
    diagnostics["fixed_point_residual"] = reparam_mod.verify_fixed_point(rep, lam)
    if v is not None:
        mid_tau = 0.5 * (rep.tau_minus + rep.tau_horizon)
        diagnostics["l1_identity_residual"] = reparam_mod.alpha_l1_check(
            rep, v, lam, mid_tau)
    if problem.u is not None:
        diagnostics["exp_reparam_residual"] = reparam_mod.exp_reparam_check(
            problem.u, rep)
    if args.generalized_c is not None:
        c = args.generalized_c
        root = reparam_mod.solve_tau_exp_root(c)
        diagnostics["generalized_tau_plus"] = root
        diagnostics["generalized_tau_plus_residual"] = abs(
            root * math.exp(root) - 1.0 / c)
        try:
            grep = reparam_mod.generalized_reparam(
                problem.u if problem.u is not None else lam, c, T=problem.T)
            diagnostics["generalized_table_monotone"] = bool(
                np.all(np.diff(grep.rep.t_table) > 0))
        except reparam_mod.DegenerateReparamError as exc:
            diagnostics["generalized_error"] = str(exc)

    if args.format == "csv":
        rows = list(zip(rep.t_table.tolist(), rep.tau_table.tolist()))
        _write_csv(args.out, ("t", "tau"), rows)
        for k, v_ in diagnostics.items():
            print(f"{k}: {v_}")
    else:
        payload = {
            "schema_version": SCHEMA_VERSION,
            "config": _config_dict(args, {"problem_name": problem.name}),
            "reports": [{
                "diagnostics": diagnostics,
                "table": {"t": rep.t_table.tolist(),
                          "tau": rep.tau_table.tolist()},
            }],
        }
        _write_json(args.out, payload)
    return 0


# ---------------------------------------------------------------------------
# solve / funnel

def cmd_solve(args) -> int:
    try:
        problem = load_problem(args.problem, args.T)
    except ConfigError as exc:
        for msg in exc.messages:
            print(f"config error: {msg}", file=sys.stderr)
        return 2
    t0 = args.t0 if args.t0 is not None else problem.T
    t1 = args.t1 if args.t1 is not None else (args.t_floor or 1e-6 * problem.T)
    if args.rtol <= 0 or args.atol <= 0:
        print("config error: solve: rtol and atol must be positive",
              file=sys.stderr)
        return 2
    traj = solver_mod.integrate_ivp(problem.f, t0, args.x0, t1,
                                    rtol=args.rtol, atol=args.atol)
    rows = list(zip(traj.t.tolist(), traj.x.tolist(), traj.xdot.tolist(),
                    traj.step_errors.tolist()))
    _write_csv(args.out, ("t", "x", "xdot", "step_error"), rows)
    print(f"status: {traj.status}")
    return 0


def cmd_funnel(args) -> int:
    try:
        problem = load_problem(args.problem, args.T)
    except ConfigError as exc:
        for msg in exc.messages:
            print(f"config error: {msg}", file=sys.stderr)
        return 2
    n = args.n if args.n is not None else 201
    t_floor = args.t_floor if args.t_floor is not None else 1e-6 * problem.T
    if n < 3 or not (0 < t_floor < problem.T):
        print("config error: funnel: need n >= 3 and 0 < t-floor < T",
              file=sys.stderr)
        return 2
    rep = solver_mod.funnel_probe(problem.f, problem.T, n=n, t_floor=t_floor,
                                  rtol=args.rtol, atol=args.atol,
                                  x_bound=problem.x_bound)
    payload = {
        "schema_version": SCHEMA_VERSION,
        "config": _config_dict(args, {"problem_name": problem.name}),
        "reports": [funnel_report_dict(rep)],
    }
    _write_json(args.out, payload)
    print(f"basin_width: {rep.basin_width}")
    return 0


def funnel_report_dict(rep) -> dict:
    return {
        "kind": "funnel",
        "basin_width": rep.basin_width,
        "grid_spacing": rep.grid_spacing,
        "t_floor": rep.t_floor,
        "atol_reach": rep.atol_reach,
        "n_reaching": int(np.count_nonzero(rep.reaches_zero)),
        "terminal_values": rep.terminal_values.tolist(),
        "reaches_zero": [bool(b) for b in rep.reaches_zero],
        "statuses": list(rep.statuses),
        "spread_curve": [[a, b] for a, b in rep.spread_curve],
        "failures": [[x, msg] for x, msg in rep.failures],
    }


# ---------------------------------------------------------------------------
# suite

def _suite_criteria_for(problem: ProblemSpec):
    names = ["nagumo"]
    if problem.u is not None:
        names.append("athanassov")
    if problem.u is not None and problem.omega is not None:
        names += ["constantin", "theorem1-reduced"]
    if (problem.v is not None and problem.lam is not None
            and problem.omega is not None):
        names.append("theorem1")
    return names


def run_suite(corpus_dir, config: CheckConfig, rtol=1e-6, atol=1e-9,
              funnel_n=101, t_floor_factor=1e-4):
    """Check + funnel matrix over all *.json problems in a directory."""
    paths = sorted(Path(corpus_dir).glob("*.json"))
    if not paths:
        raise ConfigError(f"suite: no problem files in {corpus_dir}")
    rows = []
    alarms = []
    for path in paths:
        row = {"file": path.name, "status": "ok", "checks": {},
               "expected": {}, "mismatches": []}
        try:
            raw = json.loads(path.read_text())
            problem = ProblemSpec.from_dict(raw)
            expect = raw.get("expect", {})
        except Exception as exc:
            row["status"] = "error"
            row["error"] = f"{type(exc).__name__}: {exc}"
            rows.append(row)
            continue
        row["problem"] = problem.name
        names = _suite_criteria_for(problem)
        any_pass = False
        try:
            for rep in run_checks(problem, names, config):
                row["checks"][rep.criterion] = "pass" if rep.overall else "fail"
                any_pass = any_pass or rep.overall
            if problem.u is not None and problem.omega is not None:
                eq = criteria.equivalence_suite(problem, config)
                row["checks"]["equivalence"] = (
                    "pass" if eq.overall else "fail")
        except Exception as exc:
            row["status"] = "error"
            row["error"] = f"{type(exc).__name__}: {exc}"
            rows.append(row)
            continue
        try:
            fr = solver_mod.funnel_probe(
                problem.f, problem.T, n=funnel_n,
                t_floor=t_floor_factor * problem.T,
                rtol=rtol, atol=atol, x_bound=problem.x_bound)
            row["funnel_basin_width"] = fr.basin_width
            row["funnel_grid_spacing"] = fr.grid_spacing
            if any_pass and fr.basin_width > 10 * fr.grid_spacing:
                alarms.append({
                    "file": path.name,
                    "basin_width": fr.basin_width,
                    "grid_spacing": fr.grid_spacing,
                    "passing": [k for k, s in row["checks"].items()
                                if s == "pass"],
                })
        except Exception as exc:
            row["funnel_error"] = f"{type(exc).__name__}: {exc}"
        for crit, want in sorted(expect.items()):
            got = row["checks"].get(crit)
            row["expected"][crit] = want
            if got is not None and got != want:
                row["mismatches"].append(crit)
        rows.append(row)
    return rows, alarms


def cmd_suite(args) -> int:
    try:
        config = _build_config(args)
        rows, alarms = run_suite(args.corpus, config,
                                 rtol=args.rtol, atol=args.atol)
    except ConfigError as exc:
        for msg in exc.messages:
            print(f"config error: {msg}", file=sys.stderr)
        return 2
    payload = {
        "schema_version": SCHEMA_VERSION,
        "config": _config_dict(args),
        "reports": rows,
        "contradiction_alarms": alarms,
    }
    _write_json(args.out, payload)
    for row in rows:
        checks = " ".join(f"{k}={v}" for k, v in sorted(row["checks"].items()))
        print(f"{row['file']}: {row['status']} {checks}")
    if alarms:
        for a in alarms:
            print(f"contradiction alarm: {a['file']} basin_width="
                  f"{a['basin_width']}", file=sys.stderr)
        return 1
    mismatched = [r["file"] for r in rows if r["mismatches"]]
    if mismatched:
        print(f"expected-verdict mismatches: {', '.join(mismatched)}",
              file=sys.stderr)
        return 1
    return 0


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="odeuniq",
        description="Uniqueness-criterion checks, time reparametrizations, "
                    "and solver probes for singular IVPs x' + f(t,x) = 0.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, problem_required=True):
        p.add_argument("--problem", required=problem_required,
                       help="JSON problem file")
        p.add_argument("--out", default=None,
                       help="output path (default: stdout)")
        p.add_argument("--format", choices=("json", "csv"), default="json")
        p.add_argument("--rtol", type=float, default=1e-6)
        p.add_argument("--atol", type=float, default=1e-9)
        p.add_argument("--T", type=float, default=None,
                       help="override problem horizon T")
        p.add_argument("--t-floor", dest="t_floor", type=float, default=None)
        p.add_argument("--n", type=int, default=None)
        p.add_argument("--eps-min", dest="eps_min", type=float, default=None)
        p.add_argument("--eps-max", dest="eps_max", type=float, default=None)

    p = sub.add_parser("check", help="run uniqueness criteria")
    common(p)
    p.add_argument("--criteria", default="nagumo",
                   help=f"comma list of {', '.join(CRITERION_NAMES)}")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("reparam", help="build tau(t) and residuals")
    common(p)
    p.add_argument("--generalized-c", dest="generalized_c", type=float,
                   default=None,
                   help="run the generalized reparametrization with this c")
    p.set_defaults(func=cmd_reparam)

    p = sub.add_parser("solve", help="integrate the trajectory")
    common(p)
    p.add_argument("--t0", type=float, default=None)
    p.add_argument("--t1", type=float, default=None)
    p.add_argument("--x0", type=float, default=0.0)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("funnel", help="backward-reachability probe")
    common(p)
    p.set_defaults(func=cmd_funnel)

    p = sub.add_parser("suite", help="matrix run over a problem corpus")
    common(p, problem_required=False)
    p.add_argument("--corpus", required=True, help="directory of *.json")
    p.set_defaults(func=cmd_suite)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        for msg in exc.messages:
            print(f"config error: {msg}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
