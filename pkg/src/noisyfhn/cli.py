"""
Command-line front end.

Every subcommand prints a one-line JSON summary on stdout. Exit status is 0 on
success, 2 on a configuration or domain error (nothing is written), and 3 on a
numerical failure. Output files go to ``--out-dir`` (default: the
``NOISYFHN_OUT`` environment variable, else the current directory).
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import io
from .cubic import CubicModel, linearized_eigenvalues
from .cycle import cycle_functions, make_cycle_spec
from .errors import DomainError, NumericalError
from .experiments import (
    ExitStudyConfig,
    ScanConfig,
    ScenarioConfig,
    bifurcation_scan,
    exit_time_study,
    verify,
)
from .quasipotential import epsilon_for, level_crossings, potential_table, separatrix_point
from .sde import SimParams, simulate_full

OUT_ENV = "NOISYFHN_OUT"


def _model_args(p):
    p.add_argument("--alpha", type=float, default=-2.0, help="left root of f (< 0)")
    p.add_argument("--beta", type=float, default=2.0, help="right root of f (> 0)")


def _common(p):
    p.add_argument("--out-dir", default=None, help=f"output directory (default ${OUT_ENV} or .)")
    p.add_argument("--seed", type=int, default=None, help="master seed")
    p.add_argument("--threads", type=int, default=1, help="worker processes, 0 = auto")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="noisyfhn", description=__doc__.strip().splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("model-info", help="critical points, separatrix, eigenvalues")
    _model_args(p)
    _common(p)
    p.add_argument("--a", type=float, default=None, help="also report eigenvalues at (a, f(a))")
    p.add_argument("--delta", type=float, default=None)

    p = sub.add_parser("potential", help="well depths on a y-grid plus level crossings")
    _model_args(p)
    _common(p)
    p.add_argument("--c", type=float, action="append", default=[], help="noise level (repeatable)")
    p.add_argument("--grid", type=int, default=256)
    p.add_argument("--out", default="potential.csv")

    p = sub.add_parser("cycle", help="sample the predicted limit cycle")
    _model_args(p)
    _common(p)
    p.add_argument("--c", type=float, required=True)
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--samples", type=int, default=1024)
    p.add_argument("--out", default="cycle.csv")

    p = sub.add_parser("simulate", help="one Euler-Maruyama path of the full system")
    _model_args(p)
    _common(p)
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--delta", type=float, required=True)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--epsilon", type=float, default=None)
    g.add_argument("--c", type=float, default=None, help="derive epsilon = c delta / |log delta|")
    p.add_argument("--dt", type=float, default=None, help="default delta/50")
    p.add_argument("--horizon", type=float, required=True)
    p.add_argument("--stride", type=int, default=1)
    p.add_argument("--x0", type=float, default=None, help="default a")
    p.add_argument("--y0", type=float, default=None, help="default f(a)")
    p.add_argument("--out", default="trajectory.csv")

    p = sub.add_parser("exit-times", help="first-exit Monte Carlo and slope regression")
    _model_args(p)
    _common(p)
    p.add_argument("--y", type=float, action="append", default=[])
    p.add_argument("--eps-tilde", type=float, action="append", default=[])
    p.add_argument("--replicas", type=int, default=200)
    p.add_argument("--dt", type=float, default=0.01)
    p.add_argument("--horizon", type=float, default=2000.0)
    p.add_argument("--basin", choices=["D1", "D2"], default="D1")
    p.add_argument("--out", default="exit_times.csv")

    p = sub.add_parser("verify", help="Monte Carlo check of one scenario")
    _common(p)
    p.add_argument("--scenario", default=None, help="scenario JSON file")
    for name, typ in (("alpha", float), ("beta", float), ("regime", str), ("c", float),
                      ("a", float), ("delta", float), ("replicas", int), ("h", float),
                      ("A", float), ("settle-time", float), ("dt", float)):
        p.add_argument(f"--{name}", type=typ, default=None)
    p.add_argument("--deterministic", action="store_true", default=None)
    p.add_argument("--name", default="report")

    p = sub.add_parser("scan", help="bifurcation scan in a across x_-(c)")
    _common(p)
    p.add_argument("--scenario", default=None, help="scan JSON file")
    for name, typ in (("alpha", float), ("beta", float), ("c", float), ("delta", float),
                      ("a-start", float), ("a-stop", float), ("a-step", float),
                      ("replicas", int), ("horizon", float), ("settle-time", float)):
        p.add_argument(f"--{name}", type=typ, default=None)
    p.add_argument("--name", default="scan")
    return parser


def _out_dir(args) -> Path:
    d = args.out_dir or os.environ.get(OUT_ENV) or "."
    return Path(d)


def _config_echo(args) -> dict:
    # the output location is not part of the experiment, so reruns elsewhere stay byte-identical
    return {k: v for k, v in sorted(vars(args).items()) if k != "out_dir"}


def _load_overrides(args, keys, loader):
    data = {}
    if args.scenario:
        try:
            data = json.loads(Path(args.scenario).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise DomainError(f"cannot read scenario file {args.scenario}: {exc}") from exc
        if not isinstance(data, dict):
            raise DomainError("scenario file must hold a JSON object")
    for key in keys:
        v = getattr(args, key, None)
        if v is not None:
            data[key] = v
    if args.seed is not None:
        data["master_seed"] = args.seed
    if args.threads is not None and "workers" in loader.__dataclass_fields__:
        data["workers"] = args.threads
    return loader.from_dict(data)


def cmd_model_info(args) -> dict:
    m = CubicModel(args.alpha, args.beta)
    sep = separatrix_point(m)
    out = {"alpha": m.alpha, "beta": m.beta, "a0": m.a0, "a1": m.a1,
           "f_a0": m.f_a0, "f_a1": m.f_a1, "y_star": sep.y_star, "S": sep.S_value,
           "S_half": 0.5 * sep.S_value}
    if args.a is not None:
        if args.delta is None:
            raise DomainError("--a needs --delta for the eigenvalues")
        ev = linearized_eigenvalues(m, args.a, args.delta)
        out.update(a=args.a, delta=args.delta,
                   lambda_plus=[ev.lambda_plus.real, ev.lambda_plus.imag],
                   lambda_minus=[ev.lambda_minus.real, ev.lambda_minus.imag],
                   stable=ev.is_stable)
    return out


def cmd_potential(args) -> dict:
    m = CubicModel(args.alpha, args.beta)
    sep = separatrix_point(m)
    levels = [level_crossings(m, c, sep) for c in args.c]
    table = potential_table(m, args.grid)
    summary = {"y_star": sep.y_star, "S": sep.S_value, "S_half": 0.5 * sep.S_value,
               "note": "S follows -2 int (-y + f); S_half is the half-area convention"}
    for nl in levels:
        entry = {"y_minus": nl.y_minus_c, "y_plus": nl.y_plus_c,
                 "x_minus_c": nl.x_minus_c, "x_plus_c": nl.x_plus_c}
        if len(levels) == 1:
            summary.update(entry)
        summary.setdefault("levels", []).append({"c": nl.c, **entry})
    out = _out_dir(args) / args.out
    io.write_csv(out, ["y", "v_minus", "v_plus", "x_minus", "x_zero", "x_plus"], table,
                 _config_echo(args))
    io.write_json(out.with_suffix(".json"), {"config": _config_echo(args), **summary})
    summary["csv"] = str(out)
    return summary


def cmd_cycle(args) -> dict:
    m = CubicModel(args.alpha, args.beta)
    nl = level_crossings(m, args.c)
    spec = make_cycle_spec(m, nl, args.a)
    cs = cycle_functions(spec, args.samples)
    summary = {"T1": spec.T1, "T2": spec.T2, "T": spec.T,
               "y_minus": nl.y_minus_c, "y_plus": nl.y_plus_c}
    out = _out_dir(args) / args.out
    io.write_csv(out, ["t", "psi", "phi", "branch"],
                 zip(cs.times, cs.psi, cs.phi, cs.branch), _config_echo(args))
    io.write_json(out.with_suffix(".json"), {"config": _config_echo(args), **summary})
    summary["csv"] = str(out)
    return summary


def cmd_simulate(args) -> dict:
    m = CubicModel(args.alpha, args.beta)
    if args.epsilon is not None:
        eps = args.epsilon
    elif args.c is not None:
        eps = epsilon_for(args.c, args.delta)
    else:
        raise DomainError("give --epsilon or --c")
    dt = args.dt if args.dt is not None else args.delta / 50.0
    p = SimParams(a=args.a, delta=args.delta, epsilon=eps, dt=dt, horizon=args.horizon,
                  seed=args.seed if args.seed is not None else 0, record_stride=args.stride)
    x0 = args.a if args.x0 is None else args.x0
    y0 = m.f(args.a) if args.y0 is None else args.y0
    tr = simulate_full(m, p, x0, y0)
    out = _out_dir(args) / args.out
    config = {**_config_echo(args), "resolved": p.to_dict()}
    io.write_csv(out, ["t", "x", "y"], zip(tr.t, tr.x, tr.y), config)
    return {"csv": str(out), "n_records": len(tr.t), "epsilon": eps, "dt": dt,
            "final_x": float(tr.x[-1]), "final_y": float(tr.y[-1])}


def cmd_exit_times(args) -> dict:
    cfg = ExitStudyConfig(alpha=args.alpha, beta=args.beta,
                          ys=args.y or [0.0], eps_tildes=args.eps_tilde or [0.5, 0.4, 0.3, 0.25, 0.2],
                          replicas=args.replicas, dt=args.dt, horizon=args.horizon,
                          basin=args.basin,
                          master_seed=args.seed if args.seed is not None else 20240602)
    res = exit_time_study(cfg)
    out = _out_dir(args) / args.out
    io.write_csv(out, ["replica", "eps_tilde", "tau", "side", "censored", "y"], res["samples"],
                 cfg.to_dict())
    per_y = [{k: s[k] for k in ("y", "slope", "intercept", "r2", "V_ref", "slope_exact",
                                 "max_censored_fraction", "passed") if k in s}
             for s in res["per_y"]]
    io.write_json(out.with_suffix(".json"), {"config": cfg.to_dict(), "per_y": res["per_y"]})
    summary = dict(per_y[0]) if len(per_y) == 1 else {"per_y": per_y}
    summary["csv"] = str(out)
    return summary


def cmd_verify(args) -> dict:
    keys = ["alpha", "beta", "regime", "c", "a", "delta", "replicas", "h", "A", "settle_time",
            "dt", "deterministic"]
    cfg = _load_overrides(args, keys, ScenarioConfig)
    cfg.resolve()
    rep = verify(cfg)
    d = _out_dir(args)
    io.write_json(d / f"{args.name}.json", rep.to_dict())
    if rep.replicas:
        io.write_csv(d / f"{args.name}_replicas.csv", list(rep.replicas[0]), rep.replicas,
                     cfg.to_dict())
    return {"report": str(d / f"{args.name}.json"), "regime": cfg.regime,
            "estimates": {k: v["p"] for k, v in rep.estimates.items()}}


def cmd_scan(args) -> dict:
    keys = ["alpha", "beta", "c", "delta", "a_start", "a_stop", "a_step", "replicas", "horizon",
            "settle_time"]
    cfg = _load_overrides(args, keys, ScanConfig)
    res = bifurcation_scan(cfg)
    d = _out_dir(args)
    io.write_json(d / f"{args.name}.json", res)
    io.write_csv(d / f"{args.name}_rows.csv", list(res["rows"][0]), res["rows"], cfg.to_dict())
    return {"report": str(d / f"{args.name}.json"), "transition_a": res["transition_a"],
            "x_minus_c": res["x_minus_c"], "transition_error": res["transition_error"]}


COMMANDS = {
    "model-info": cmd_model_info,
    "potential": cmd_potential,
    "cycle": cmd_cycle,
    "simulate": cmd_simulate,
    "exit-times": cmd_exit_times,
    "verify": cmd_verify,
    "scan": cmd_scan,
}


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.threads is not None and args.threads < 0:
        print("error: --threads must be >= 0", file=sys.stderr)
        return 2
    try:
        summary = COMMANDS[args.command](args)
    except (DomainError, ValueError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (NumericalError, ArithmeticError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    print(io.dumps_line(summary))
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
