"""Job execution and suite orchestration.

A job is a plain dict, so it can be written in a config file and shipped to
a worker process::

    {"id": "sphere-D", "kind": "verify", "surface": {"name": "sphere"},
     "theorem": "D", "grid": 21}

Kinds: ``check``, ``verify``, ``variation``, ``hopf``, ``asymmetry``,
``cone``. Every job yields a JSON report; some also yield CSV plot data.
Job outcomes are 0 (consistent), 1 (error) or 2 (alarm); a suite exits with
the worst of them.
"""

from __future__ import annotations

import datetime as _dt
import json
import os
import platform
import sys
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import conditions, hopf, symmetry, variation
from .curvature import in_gamma_m
from .families import FamilyError, FamilySpec, make_surface
from .geometry import GraphDecompositionError, decompose_graphs
from .report import CheckReport, emit_plotdata, write_json

OUTPUT_ENV = "HYPERSYM_OUTPUT_DIR"
DEFAULT_OUTPUT = "hypersym-out"
SCHEMA_VERSION = 1
KINDS = ("check", "verify", "variation", "hopf", "asymmetry", "cone")
CONDITIONS = ("main", "S", "Sprime", "T", "extension", "convexity", "symmetry", "equality")

try:
    import tomllib as _toml
except ModuleNotFoundError:  # Python < 3.11
    import tomli as _toml


class ConfigError(ValueError):
    pass


class JobError(ValueError):
    pass


def default_output_dir():
    return Path(os.environ.get(OUTPUT_ENV, DEFAULT_OUTPUT))


# --------------------------------------------------------------------------
# config


@dataclass
class SuiteConfig:
    jobs: list
    output_dir: Path | None = None
    seed: int = 0
    defaults: dict = field(default_factory=dict)

    @classmethod
    def from_mapping(cls, data):
        data = dict(data)
        unknown = set(data) - {"jobs", "output_dir", "seed", "defaults"}
        if unknown:
            raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")
        jobs = data.get("jobs")
        if not isinstance(jobs, list) or not jobs:
            raise ConfigError("config needs a non-empty 'jobs' list")
        ids = set()
        out = []
        for i, job in enumerate(jobs):
            if not isinstance(job, dict):
                raise ConfigError(f"job #{i} is not a table")
            job = dict(job)
            job.setdefault("id", f"job{i:03d}")
            if job["id"] in ids:
                raise ConfigError(f"duplicate job id {job['id']!r}")
            ids.add(job["id"])
            out.append(job)
        seed = data.get("seed", 0)
        if not isinstance(seed, int):
            raise ConfigError("seed must be an integer")
        outdir = data.get("output_dir")
        return cls(out, None if outdir is None else Path(outdir), seed, dict(data.get("defaults", {})))

    @classmethod
    def load(cls, path):
        path = Path(path)
        text = path.read_text(encoding="utf-8")
        try:
            data = json.loads(text) if path.suffix.lower() == ".json" else _toml.loads(text)
        except (json.JSONDecodeError, _toml.TOMLDecodeError) as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        return cls.from_mapping(data)


# --------------------------------------------------------------------------
# jobs


@dataclass
class JobResult:
    id: str
    kind: str
    exit_code: int
    report: dict
    plots: list = field(default_factory=list)  # (filename, header, rows)
    error: str | None = None

    @property
    def status(self):
        return {0: "consistent", 1: "error", 2: "alarm"}[self.exit_code]


def _surface_spec(job):
    surf = job.get("surface")
    if surf is None:
        raise JobError("job needs a 'surface'")
    if isinstance(surf, str):
        surf = {"name": surf}
    return FamilySpec.from_dict(surf)


def _param(job, defaults, key, default=None):
    return job.get(key, defaults.get(key, default))


def _run_check(job, defaults):
    spec = _surface_spec(job)
    cond = job.get("condition")
    if cond not in CONDITIONS:
        raise JobError(f"unknown condition {cond!r}; expected one of {CONDITIONS}")
    grid = int(_param(job, defaults, "grid", 21))
    tol = _param(job, defaults, "tol")
    delta = _param(job, defaults, "delta")
    curv = _param(job, defaults, "curvature", "mean")
    surf = make_surface(spec)
    plots = []

    def pair():
        return decompose_graphs(surf)

    if cond == "main":
        rep = conditions.check_main_assumption(pair(), curv, grid, tol, delta)
    elif cond == "S":
        rep = conditions.check_condition_S(surf, grid, tol)
    elif cond == "Sprime":
        r = float(_param(job, defaults, "r", 0.1 * surf.diameter))
        rep = conditions.check_condition_S_prime(surf, r, grid, tol, bool(job.get("find_max_r", False)))
    elif cond == "T":
        rep = conditions.check_condition_T(surf, int(_param(job, defaults, "max_order", 8)))
    elif cond == "extension":
        rep = conditions.check_monotone_extension_necessary(pair(), job.get("L"), grid, tol, delta)
    elif cond == "convexity":
        rep = symmetry.convexity_check(surf, grid, tol)
    elif cond == "equality":
        rep = symmetry.curvature_equality_check(pair(), curv, delta, tol, grid)
    else:
        verdict = symmetry.detect_symmetry_plane(pair(), delta, tol, grid)
        n = spec.n
        header = [f"x{i + 1}" for i in range(n)] + ["f1+f2-2c"]
        plots.append(("symmetry_residual.csv", header, verdict.profile))
        return {"surface": spec.to_dict(), "condition": cond, "symmetry": verdict.to_dict()}, 0, plots
    return {"surface": spec.to_dict(), "condition": cond, "report": rep.to_dict()}, 0, plots


def _run_verify(job, defaults):
    spec = _surface_spec(job)
    theorem = job.get("theorem")
    if theorem is None:
        raise JobError("verify job needs a 'theorem'")
    params = {k: _param(job, defaults, k) for k in ("grid", "tol", "delta", "r", "max_order", "curvature", "L")}
    params = {k: v for k, v in params.items() if v is not None}
    rep = symmetry.verify_theorem_pipeline(make_surface(spec), theorem, params)
    plots = []
    if rep.symmetry is not None and rep.symmetry.profile:
        header = [f"x{i + 1}" for i in range(spec.n)] + ["f1+f2-2c"]
        plots.append(("symmetry_residual.csv", header, rep.symmetry.profile))
    return {"surface": spec.to_dict(), "pipeline": rep.to_dict()}, rep.exit_code, plots


def parse_field(text, n, pair=None):
    """'const[:value]', 'bump:x1,..,xn,radius[,amplitude]', 'cutoff-sum[:delta]', 'radial'."""
    kind, _, arg = text.partition(":")
    vals = [float(x) for x in arg.split(",")] if arg else []
    if kind == "const":
        return variation.constant_field(vals[0] if vals else 1.0, n)
    if kind == "radial":
        return variation.RadialField()
    if kind == "bump":
        if len(vals) not in (n + 1, n + 2):
            raise JobError(f"bump needs {n} center coordinates, a radius and optionally an amplitude")
        return variation.bump_field(vals[:n], vals[n], vals[n + 1] if len(vals) == n + 2 else 1.0)
    if kind == "cutoff-sum":
        if pair is None:
            raise JobError("cutoff-sum needs a graph pair")
        delta = vals[0] if vals else 0.05 * pair.radius
        return variation.cutoff_sum_field(pair, delta)
    raise JobError(f"unknown field {text!r}; expected const|bump:...|cutoff-sum|radial")


def _run_variation(job, defaults):
    spec = _surface_spec(job)
    pair = decompose_graphs(make_surface(spec))
    m = int(job.get("m", 1))
    if not 1 <= m <= spec.n:
        raise JobError(f"m={m} out of range 1..{spec.n}")
    V = parse_field(str(job.get("field", "const")), spec.n, pair)
    h = job.get("h")
    h = 1e-4 * pair.diameter if h is None else float(h)
    samples = int(_param(job, defaults, "t_samples", 11))
    ts = np.linspace(-5 * h, 5 * h, samples)
    trace = variation.deformation_trace(pair, V, m, h, ts, job.get("method", "auto"))
    out = {"surface": spec.to_dict(), "field": str(job.get("field", "const")), "trace": trace.to_dict()}
    return out, 0, [("trace.csv", ["t", f"S_{m - 1}"], trace.rows())]


def _run_asymmetry(job, defaults):
    spec = _surface_spec(job)
    pair = decompose_graphs(make_surface(spec))
    delta = job.get("delta", _param(job, defaults, "delta"))
    J, level = variation.asymmetry_functional(pair, delta)
    rows = []
    for lv in job.get("refinements", [level // 2, level, 2 * level]):
        rows.append((int(lv), variation.asymmetry_functional(pair, delta, int(lv))[0]))
    out = {"surface": spec.to_dict(), "J": J, "level": level, "delta": pair.default_delta() if delta is None else delta,
           "refinement": [list(r) for r in rows]}
    return out, 0, [("asymmetry_refinement.csv", ["N", "J_N"], rows)]


def _pair_from_job(job):
    pair_arg = job.get("pair", "identity")
    n = int(job.get("n", 2))
    if isinstance(pair_arg, dict):
        return hopf.FunctionPair.from_expressions(pair_arg["u"], pair_arg["v"], n, pair_arg.get("name"))
    return hopf.builtin_pair(pair_arg, n)


def _run_hopf(job, defaults):
    variant = str(job.get("variant", "sigma:1"))
    grid = int(_param(job, defaults, "hopf_grid", job.get("grid", 16)))
    rho = float(job.get("rho", 0.1))
    tol = float(job.get("tol", 1e-9))
    n = int(job.get("n", 2))
    if "search" in job:
        family = hopf.SEARCH_FAMILIES.get(job["search"])
        if family is None:
            raise JobError(f"unknown search family {job['search']!r}; known: {sorted(hopf.SEARCH_FAMILIES)}")
        params = job.get("values", [0.25, 0.5, 0.75, 1.0])
        res = hopf.search_counterexample(family(params, n), int(job.get("budget", 20)), grid, variant, rho, tol)
        return {"search": job["search"], "variant": variant, "result": res.to_dict()}, 0, []
    run = hopf.run_hopf(_pair_from_job(job), variant, grid, rho, tol)
    rows = [(mt.t, mt.s, *mt.y, *mt.values) for mt in run.matches]
    plots = []
    if rows:
        header = ["t", "s"] + [f"y{i}" for i in range(1, n)] + (["lhs", "rhs"] if run.matches[0].values else [])
        plots.append(("matches.csv", header, rows))
    return {"pair": str(job.get("pair", "identity")), "run": run.to_dict()}, run.exit_code, plots


def _run_cone(job, defaults, seed):
    """Random-sample check of the cone nesting Gamma_{m+1} in Gamma_m."""
    n = int(job.get("n", 3))
    count = int(job.get("samples", 10_000))
    rng = np.random.default_rng(seed)
    k = rng.normal(size=(count, n)) * rng.uniform(0.1, 10.0, size=(count, 1))
    bad = []
    for m in range(1, n):
        inner, outer = in_gamma_m(k, m + 1), in_gamma_m(k, m)
        for i in np.flatnonzero(inner & ~outer)[:10]:
            bad.append({"m": m, "k": k[i].tolist(), "residual": 1.0})
    rep = CheckReport("gamma-nesting", not bad, bad, [float(len(bad))], 0.0, count, {"n": n})
    return {"report": rep.to_dict()}, 0, []


def execute_job(job, defaults=None, seed=0):
    """Run one job; never raises. Errors become exit code 1 with a message."""
    defaults = defaults or {}
    jid = str(job.get("id", "job"))
    kind = job.get("kind")
    try:
        if kind == "check":
            report, code, plots = _run_check(job, defaults)
        elif kind == "verify":
            report, code, plots = _run_verify(job, defaults)
        elif kind == "variation":
            report, code, plots = _run_variation(job, defaults)
        elif kind == "asymmetry":
            report, code, plots = _run_asymmetry(job, defaults)
        elif kind == "hopf":
            report, code, plots = _run_hopf(job, defaults)
        elif kind == "cone":
            report, code, plots = _run_cone(job, defaults, seed)
        else:
            raise JobError(f"unknown job kind {kind!r}; expected one of {KINDS}")
    except (JobError, FamilyError, GraphDecompositionError, ValueError, ArithmeticError) as exc:
        msg = f"{type(exc).__name__}: {exc}"
        return JobResult(jid, str(kind), 1, {"id": jid, "kind": kind, "seed": seed, "error": msg}, [], msg)
    except Exception as exc:  # unexpected failures are job errors too
        msg = f"{type(exc).__name__}: {exc}"
        detail = traceback.format_exc(limit=3)
        return JobResult(jid, str(kind), 1, {"id": jid, "kind": kind, "seed": seed, "error": msg,
                                             "traceback": detail}, [], msg)
    report = {"id": jid, "kind": kind, "seed": seed, "exit_code": code, **report}
    return JobResult(jid, kind, code, report, plots)


def _execute_star(args):
    return execute_job(*args)


# --------------------------------------------------------------------------
# suite


@dataclass
class RunArtifacts:
    output_dir: Path
    results: list
    summary: dict
    files: list

    @property
    def exit_code(self):
        return self.summary["exit_code"]


def _summary(results, seed):
    counts = {"consistent": 0, "error": 0, "alarm": 0}
    for r in results:
        counts[r.status] += 1
    return {
        "schema_version": SCHEMA_VERSION,
        "seed": seed,
        "jobs": [{"id": r.id, "kind": r.kind, "status": r.status, "exit_code": r.exit_code,
                  **({"error": r.error} if r.error else {})} for r in results],
        "counts": counts,
        "alarms": [r.id for r in results if r.exit_code == 2],
        "errors": [r.id for r in results if r.exit_code == 1],
        "exit_code": max((r.exit_code for r in results), default=0),
    }


def _safe_name(jid):
    return "".join(c if c.isalnum() or c in "-_." else "_" for c in jid)


def run_suite(config: SuiteConfig, output_dir=None, jobs=1):
    """Execute all jobs, write per-job JSON/CSV and summary.json.

    Reports are byte-identical across reruns with the same config; the
    wall-clock timestamp lives only in metadata.json.
    """
    out = Path(output_dir or config.output_dir or default_output_dir())
    tasks = [(job, config.defaults, config.seed + i) if job.get("seed") is None else (job, config.defaults, job["seed"])
             for i, job in enumerate(config.jobs)]
    started = _dt.datetime.now(_dt.timezone.utc)
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_execute_star, tasks))
    else:
        results = [execute_job(*t) for t in tasks]
    files = []
    for r in results:
        name = _safe_name(r.id)
        files.append(write_json(out / f"{name}.json", r.report))
        for fname, header, rows in r.plots:
            if rows:
                files.append(emit_plotdata(rows, out / f"{name}.{fname}", header))
    summary = _summary(results, config.seed)
    files.append(write_json(out / "summary.json", summary))
    meta = {
        "started": started.isoformat(),
        "finished": _dt.datetime.now(_dt.timezone.utc).isoformat(),
        "python": sys.version.split()[0],
        "platform": platform.platform(),
        "numpy": np.__version__,
        "parallel_jobs": jobs,
    }
    files.append(write_json(out / "metadata.json", meta))
    return RunArtifacts(out, results, summary, files)
