"""Command-line entry point ``covhyp``.

Subcommands::

    covhyp inspect  --system NAME --rho R --J J      key=value fields of one state
    covhyp verify   [--system NAME|all] [--seed S] [--samples N] [--out report.json]
    covhyp simulate [--config run.json] [overrides...] [--out DIR]
    covhyp catalog list

Exit codes: 0 success, 1 verification failure, 2 bad arguments, configuration
or inadmissible state, 3 a simulated cell left the validity domain.
Numbers are printed with 17 significant digits.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import catalog, solver, verify
from .construction import eigenvalues, flux_jacobian
from .errors import CovHypError, InvalidParameter, OutsideValidity, StateLeftDomain

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_DOMAIN = 0, 1, 2, 3

fmt = solver.fmt


def _add_params(p):
    p.add_argument("--rho-star", type=float, default=None, dest="rho_star")
    p.add_argument("--sigma-bar", type=float, default=None, dest="sigma_bar")
    p.add_argument("--a", type=float, default=None)
    p.add_argument("--c", type=float, default=None)


def _params(args):
    return {k: getattr(args, k) for k in ("rho_star", "sigma_bar", "a", "c")
            if getattr(args, k) is not None}


def build_parser():
    parser = argparse.ArgumentParser(prog="covhyp", description="Group-covariant 2x2 hyperbolic systems.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("inspect", help="print every derived field of one state")
    p.add_argument("--system", required=True, choices=catalog.NAMES)
    p.add_argument("--rho", type=float, required=True)
    p.add_argument("--J", type=float, required=True)
    _add_params(p)

    p = sub.add_parser("verify", help="run the randomised identity suite")
    p.add_argument("--system", default="all", choices=catalog.NAMES + ("all",))
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--samples", type=int, default=500)
    p.add_argument("--out", default=None, help="write the JSON report here")
    p.add_argument("--format", choices=("text", "json"), default="text", help="stdout format")
    p.add_argument("--inject-flux-fault", type=float, default=None, help=argparse.SUPPRESS)
    _add_params(p)

    p = sub.add_parser("simulate", help="run the finite-volume solver")
    p.add_argument("--config", default=None, help="JSON configuration file")
    p.add_argument("--out", default="covhyp_run", help="output directory")
    p.add_argument("--system", choices=catalog.NAMES, default=None)
    p.add_argument("--n-cells", type=int, default=None, dest="n_cells")
    p.add_argument("--x-min", type=float, default=None, dest="x_min")
    p.add_argument("--x-max", type=float, default=None, dest="x_max")
    p.add_argument("--cfl", type=float, default=None)
    p.add_argument("--t-end", type=float, default=None, dest="t_end")
    p.add_argument("--boundary", default=None)
    p.add_argument("--snapshot-every", type=int, default=None, dest="snapshot_every")
    p.add_argument("--max-steps", type=int, default=None, dest="max_steps")
    _add_params(p)

    p = sub.add_parser("catalog", help="list the catalog systems")
    p.add_argument("action", choices=("list",))
    return parser


# -- subcommands --------------------------------------------------------------------


def inspect_record(system, rho, J):
    """Ordered ``(key, value)`` pairs printed by ``inspect``."""
    w = (np.float64(rho), np.float64(J))
    v = system.evaluate(w)
    fp = (v["theta"], v["rho0"])
    lam_m, lam_p = eigenvalues(flux_jacobian(system, w))
    det_h, d2 = system.convexity_diagnostics(fp)
    keys = ("theta", "rho0", "u", "eta", "eta_star", "alpha", "beta", "p0", "f1", "f2", "g1", "g2")
    record = [("system", system.name), ("rho", rho), ("J", J)]
    record += [(k, float(v[k])) for k in keys]
    record += [
        ("lambda_minus", lam_m),
        ("lambda_plus", lam_p),
        ("delta", system.jacobian_delta(fp)),
        ("det_hessian", det_h),
        ("d2eta_drho2", d2),
    ]
    return record


def cmd_inspect(args, out):
    system = catalog.build(args.system, **_params(args))
    for key, value in inspect_record(system, args.rho, args.J):
        out.write(f"{key}={value if isinstance(value, str) else fmt(value)}\n")
    return EXIT_OK


def cmd_verify(args, out):
    if args.samples < 1:
        raise InvalidParameter(f"--samples must be >= 1, got {args.samples}")
    names = catalog.NAMES if args.system == "all" else (args.system,)
    reports = []
    for name in names:
        system = catalog.build(name, **_params(args))
        if args.inject_flux_fault is not None:
            system = verify.corrupt_flux(system, args.inject_flux_fault)
        reports.append(verify.run_suite(system, args.seed, args.samples))
    if args.out:
        doc = reports[0].to_dict() if len(reports) == 1 else {"reports": [r.to_dict() for r in reports]}
        Path(args.out).write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")
    for r in reports:
        out.write(r.to_json() if args.format == "json" else r.to_text())
    return EXIT_OK if all(r.passed for r in reports) else EXIT_FAIL


_SIM_FLAGS = ("system", "n_cells", "x_min", "x_max", "cfl", "t_end", "boundary",
              "snapshot_every", "max_steps")


def load_config(args):
    """Merge the JSON file (if any) with flag overrides; flags win."""
    data = {}
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise InvalidParameter(f"cannot read config {args.config!r}: {exc}") from None
        if not isinstance(data, dict):
            raise InvalidParameter("configuration must be a JSON object")
    cfg = solver.SimConfig.from_dict(data)
    for key in _SIM_FLAGS:
        value = getattr(args, key)
        if value is not None:
            setattr(cfg, key, value)
    params = _params(args)
    if params:
        cfg.params = {**cfg.params, **params}
    return cfg.validate()


def cmd_simulate(args, out, err):
    cfg = load_config(args)
    out_dir = Path(args.out)
    try:
        series = solver.run(cfg)
    except StateLeftDomain as exc:
        last = getattr(exc, "field", None)
        if last is not None:
            out_dir.mkdir(parents=True, exist_ok=True)
            solver.write_snapshot(catalog.build(cfg.system, **cfg.params), last, exc.time,
                                  out_dir / "abort_snapshot.csv")
        err.write(f"covhyp: {exc}\n")
        return EXIT_DOMAIN
    solver.write_outputs(series, out_dir)
    out.write(f"steps={series.steps}\n")
    out.write(f"t_end={fmt(series.budget[-1][0])}\n")
    out.write(f"snapshots={len(series.snapshots)}\n")
    steps = series.budget[1:]
    if steps:
        out.write(f"max_D={fmt(max(d for _, _, d in steps))}\n")
    out.write(f"out={out_dir}\n")
    return EXIT_OK


def cmd_catalog(args, out):
    for name in catalog.NAMES:
        d = catalog.describe(name)
        out.write(f"{name}\tepsilon={d.epsilon}\tepsilon_tilde={d.epsilon_tilde}"
                  f"\tentropy={d.entropy}\tvalidity={d.validity}\n")
    return EXIT_OK


def main(argv=None, out=None, err=None):
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        if args.command == "inspect":
            return cmd_inspect(args, out)
        if args.command == "verify":
            return cmd_verify(args, out)
        if args.command == "simulate":
            return cmd_simulate(args, out, err)
        return cmd_catalog(args, out)
    except (InvalidParameter, OutsideValidity) as exc:
        err.write(f"covhyp: {exc}\n")
        return EXIT_USAGE
    except CovHypError as exc:
        err.write(f"covhyp: {type(exc).__name__}: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
