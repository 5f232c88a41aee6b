"""Command-line front end.

Every subcommand prints one JSON document on stdout and, with ``--out``,
also writes it (plus CSV plot data) under the output directory. Exit codes:
0 consistent, 1 error, 2 inconsistency alarm.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__
from .families import catalog
from .report import dumps, emit_plotdata, write_json
from .suite import (
    CONDITIONS,
    OUTPUT_ENV,
    ConfigError,
    SuiteConfig,
    default_output_dir,
    execute_job,
    run_suite,
)


def _kv(text):
    key, sep, value = text.partition("=")
    if not sep or not key:
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    try:
        return key, float(value)
    except ValueError:
        return key, value


def _floats(text):
    try:
        return [float(x) for x in text.split(",")]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _surface_args(p):
    p.add_argument("--surface", required=True, help="family name (see `hypersym families`)")
    p.add_argument("--param", action="append", type=_kv, default=[], metavar="KEY=VALUE",
                   help="family parameter; repeatable")
    p.add_argument("--n", type=int, default=2, help="dimension of the hypersurface (default 2)")
    p.add_argument("--center", type=_floats, help="placement center, comma-separated (n+1 values)")
    p.add_argument("--scale", type=float, default=1.0, help="uniform scale factor")


def _out_arg(p):
    p.add_argument("--out", type=Path, nargs="?", const=True, default=None,
                   help=f"write the report under this directory (default ${OUTPUT_ENV} or ./hypersym-out)")


def _surface(ns):
    d = {"name": ns.surface, "params": dict(ns.param), "n": ns.n, "scale": ns.scale}
    if ns.center is not None:
        d["center"] = ns.center
    return d


def build_parser():
    parser = argparse.ArgumentParser(prog="hypersym", description="Verification laboratory for hypersurface "
                                     "symmetry, curvature conditions and boundary comparison problems.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("families", help="list the surface catalog")

    p = sub.add_parser("check", help="run one geometric condition check")
    _surface_args(p)
    p.add_argument("--condition", required=True, choices=CONDITIONS)
    p.add_argument("--curvature", default="mean", help="mean | sigma:m | gm:m (default mean)")
    p.add_argument("--grid", type=int, default=21)
    p.add_argument("--tol", type=float)
    p.add_argument("--delta", type=float, help="rim margin of R_delta")
    p.add_argument("--r", type=float, help="cylinder radius for Sprime (default 0.1 * diameter)")
    p.add_argument("--find-max-r", action="store_true", help="Sprime: bisect for the largest passing radius")
    p.add_argument("--max-order", type=int, default=8, help="T: largest accepted contact order")
    _out_arg(p)

    p = sub.add_parser("verify", help="run a theorem or conjecture pipeline")
    _surface_args(p)
    p.add_argument("--theorem", required=True, help="A | B | C | D | conj1:m | conj2")
    p.add_argument("--curvature", help="curvature function for C / conj2 (default gm:2)")
    p.add_argument("--grid", type=int, default=21)
    p.add_argument("--tol", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--r", type=float)
    _out_arg(p)

    p = sub.add_parser("variation", help="deformation trace and first-variation identity")
    _surface_args(p)
    p.add_argument("--field", default="const",
                   help="const[:value] | bump:x1,..,xn,radius[,amplitude] | cutoff-sum[:delta] | radial")
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--h", type=float, help="finite-difference step (default 1e-4 * diameter)")
    p.add_argument("--grid", type=int, default=11, help="number of t samples in the trace")
    p.add_argument("--method", default="auto", choices=("auto", "surface", "graph", "local"))
    _out_arg(p)

    p = sub.add_parser("hopf", help="boundary comparison harness on the half cylinder")
    p.add_argument("--variant", default="sigma:1", help="sigma:m | op2:m | laplace | conj3 | conj4")
    p.add_argument("--pair", default="identity",
                   help="builtin pair name, or a file with two lines 'u = ...' and 'v = ...'")
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--grid", type=int, default=16)
    p.add_argument("--rho", type=float, default=0.1)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--search", help="search family (scaled-quadratic | flat-splice)")
    p.add_argument("--values", type=_floats, help="family parameter values")
    p.add_argument("--budget", type=int, default=20)
    _out_arg(p)

    p = sub.add_parser("suite", help="run a TOML/JSON suite config")
    p.add_argument("config", type=Path)
    p.add_argument("--output-dir", type=Path, help="overrides the config and $" + OUTPUT_ENV)
    p.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    p.add_argument("--seed", type=int, help="overrides the config seed")
    p.add_argument("--grid", type=int, help="overrides defaults.grid")
    p.add_argument("--tol", type=float, help="overrides defaults.tol")
    return parser


def _read_pair_file(path, n):
    exprs = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep or key.strip() not in ("u", "v"):
            raise ValueError(f"{path}: expected lines 'u = ...' and 'v = ...'")
        exprs[key.strip()] = value.strip()
    if set(exprs) != {"u", "v"}:
        raise ValueError(f"{path}: both u and v are required")
    return {"u": exprs["u"], "v": exprs["v"], "name": Path(path).stem}


def _job_from_args(ns):
    cmd = ns.command
    if cmd == "check":
        job = {"kind": "check", "surface": _surface(ns), "condition": ns.condition, "curvature": ns.curvature,
               "grid": ns.grid, "tol": ns.tol, "delta": ns.delta, "r": ns.r, "find_max_r": ns.find_max_r,
               "max_order": ns.max_order}
    elif cmd == "verify":
        job = {"kind": "verify", "surface": _surface(ns), "theorem": ns.theorem, "curvature": ns.curvature,
               "grid": ns.grid, "tol": ns.tol, "delta": ns.delta, "r": ns.r}
    elif cmd == "variation":
        job = {"kind": "variation", "surface": _surface(ns), "field": ns.field, "m": ns.m, "h": ns.h,
               "t_samples": ns.grid, "method": ns.method}
    else:
        pair = ns.pair
        if Path(pair).is_file():
            pair = _read_pair_file(pair, ns.n)
        job = {"kind": "hopf", "variant": ns.variant, "pair": pair, "n": ns.n, "grid": ns.grid,
               "rho": ns.rho, "tol": ns.tol}
        if ns.search:
            job.update(search=ns.search, budget=ns.budget)
            if ns.values:
                job["values"] = ns.values
    job["id"] = cmd
    return {k: v for k, v in job.items() if v is not None}


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    if ns.command == "families":
        data = {name: {"description": d, "defaults": p} for name, (d, p) in sorted(catalog().items())}
        sys.stdout.write(dumps(data))
        return 0
    if ns.command == "suite":
        try:
            cfg = SuiteConfig.load(ns.config)
        except (OSError, ConfigError) as exc:
            print(f"hypersym: {exc}", file=sys.stderr)
            return 1
        if ns.seed is not None:
            cfg.seed = ns.seed
        for key in ("grid", "tol"):
            if getattr(ns, key) is not None:
                cfg.defaults[key] = getattr(ns, key)
        try:
            arts = run_suite(cfg, ns.output_dir, ns.jobs)
        except OSError as exc:
            print(f"hypersym: cannot write artifacts: {exc}", file=sys.stderr)
            return 1
        sys.stdout.write(dumps(arts.summary))
        return arts.exit_code
    try:
        job = _job_from_args(ns)
    except (OSError, ValueError) as exc:
        print(f"hypersym: {exc}", file=sys.stderr)
        return 1
    result = execute_job(job)
    sys.stdout.write(dumps(result.report))
    if result.error:
        print(f"hypersym: {result.error}", file=sys.stderr)
    if ns.out is not None:
        out = default_output_dir() if ns.out is True else ns.out
        try:
            write_json(out / f"{ns.command}.json", result.report)
            for fname, header, rows in result.plots:
                if rows:
                    emit_plotdata(rows, out / f"{ns.command}.{fname}", header)
        except OSError as exc:
            print(f"hypersym: cannot write artifacts: {exc}", file=sys.stderr)
            return 1
    return result.exit_code


if __name__ == "__main__":
    raise SystemExit(main())
