"""Symmetry-plane detection, curvature equality between the two sheets,
convexity, and end-to-end theorem/conjecture pipelines.

A pipeline runs the hypothesis checkers for its statement, then the
conclusion checks. Hypotheses passing while the conclusion fails raises an
inconsistency alarm: on an analytic family this is either an artifact bug
or (for the open conjectures) a counterexample candidate for human review.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import conditions
from .curvature import CurvatureFunctionSpec, check_g_admissible, in_gamma_m
from .geometry import ClosedGraphPair, GraphDecompositionError, RevolutionSurface
from .report import CheckReport

CONCLUSION_RTOL = 1e-6
MAX_WITNESSES = 50


@dataclass
class SymmetryVerdict:
    symmetric: bool
    c: float
    residual: float
    tolerance: float
    method: str = "f1+f2 constancy"
    samples: int = 0
    profile: list = field(default_factory=list, repr=False)

    def to_dict(self):
        return {
            "symmetric": self.symmetric,
            "c": self.c if self.symmetric else None,
            "c_candidate": self.c,
            "residual": self.residual,
            "tolerance": self.tolerance,
            "method": self.method,
            "samples": self.samples,
        }


def detect_symmetry_plane(pair, delta=None, tol=None, grid=41):
    """Height c of a horizontal symmetry hyperplane, if any.

    c is the grid mean of (f1 + f2)/2 over R_delta; the surface is declared
    symmetric when sup |f1 + f2 - 2c| <= tol (default 1e-6 * diameter).
    """
    pair = conditions.as_pair(pair)
    xp, _ = pair.interior_grid(grid, delta)
    f1, f2 = pair.heights(xp)
    s = f1 + f2
    c = float(np.mean(s) / 2.0)
    dev = s - 2.0 * c
    residual = float(np.max(np.abs(dev)))
    tol = CONCLUSION_RTOL * pair.diameter if tol is None else float(tol)
    profile = [[*x.tolist(), float(d)] for x, d in zip(xp, dev)]
    return SymmetryVerdict(residual <= tol, c, residual, tol, samples=int(xp.shape[0]), profile=profile)


def curvature_equality_check(pair, c=None, delta=None, tol=None, grid=41):
    """max over R_delta of |c(x', f1) - c(x', f2)| <= tol."""
    pair = conditions.as_pair(pair)
    spec = conditions.as_curvature_spec(c)
    xp, idx = pair.interior_grid(grid, delta)
    _, _, top, bottom = conditions.sheet_values(pair, spec, xp)
    diff = np.abs(top - bottom)
    finite = np.isfinite(diff)
    scale = float(np.max(np.abs(np.concatenate([top[finite], bottom[finite]])), initial=0.0))
    tol = CONCLUSION_RTOL * max(scale, 1e-300) if tol is None else float(tol)
    bad = np.flatnonzero(~finite | (diff > tol))
    witnesses = [
        {"index": idx[i].tolist(), "x_prime": xp[i].tolist(), "c_upper": float(top[i]),
         "c_lower": float(bottom[i]), "residual": float(diff[i])}
        for i in bad[:MAX_WITNESSES]
    ]
    residual = float(np.max(diff[finite])) if np.any(finite) else float("inf")
    return CheckReport(
        f"curvature-equality[{spec.name}]", bad.size == 0, witnesses, [residual], tol, int(xp.shape[0]),
        {"grid": grid, "delta": pair.default_delta() if delta is None else delta, "curvature": spec.name,
         "max_abs_difference": residual},
    )


def curvature_samples(obj, grid=41):
    """(points or heights, principal curvatures) sampled over M."""
    surf = obj.surface if isinstance(obj, ClosedGraphPair) else obj
    if isinstance(surf, RevolutionSurface):
        z, k = surf.sample_curvatures(grid)
        return [[float(h)] for h in z], k
    pair = conditions.as_pair(obj)
    xp, _ = pair.interior_grid(grid)
    f1, f2 = pair.heights(xp)
    k = np.concatenate([pair.graph_curvatures(xp, "upper"), pair.graph_curvatures(xp, "lower")])
    pts = np.concatenate([np.c_[xp, f1], np.c_[xp, f2]]).tolist()
    return pts, k


def convexity_check(obj, grid=41, tol=None):
    """All sampled principal curvatures >= -tol (inner normal convention)."""
    pts, k = curvature_samples(obj, grid)
    kmin = k.min(axis=-1)
    scale = float(np.max(np.abs(k)))
    tol = conditions.HYPOTHESIS_RTOL * scale if tol is None else float(tol)
    bad = np.flatnonzero(kmin < -tol)
    order = bad[np.argsort(kmin[bad], kind="stable")]
    witnesses = [{"location": pts[i], "curvatures": k[i].tolist(), "residual": float(-kmin[i])}
                 for i in order[:MAX_WITNESSES]]
    notes = ["location is the height on the meridian for surfaces of revolution"] if isinstance(
        obj.surface if isinstance(obj, ClosedGraphPair) else obj, RevolutionSurface) else []
    return CheckReport("convexity", bad.size == 0, witnesses, [float(kmin.min())], tol, int(k.shape[0]),
                       {"grid": grid, "min_curvature": float(kmin.min())}, notes)


def gamma_image_check(obj, m, grid=41):
    """Every sampled curvature vector lies in the cone Gamma_m."""
    pts, k = curvature_samples(obj, grid)
    inside = in_gamma_m(k, m)
    bad = np.flatnonzero(~inside)
    witnesses = [{"location": pts[i], "curvatures": k[i].tolist(), "residual": 1.0} for i in bad[:MAX_WITNESSES]]
    return CheckReport(f"gamma-image[{m}]", bad.size == 0, witnesses, [], 0.0, int(k.shape[0]), {"m": m})


def g_admissible_on_image(obj, g, grid=41):
    _, k = curvature_samples(obj, grid)
    return check_g_admissible(conditions.as_curvature_spec(g), k)


# --------------------------------------------------------------------------
# pipelines


THEOREMS = ("A", "B", "C", "D", "conj1", "conj2")


def parse_theorem(text):
    """'A'...'D', 'conj1:m' or 'conj2' -> (id, m)."""
    t = text.strip()
    low = t.lower()
    if low in ("a", "b", "c", "d"):
        return low.upper(), None
    if low.startswith("conj1"):
        _, _, arg = low.partition(":")
        return "conj1", int(arg) if arg else 2
    if low == "conj2":
        return "conj2", None
    raise ValueError(f"unknown theorem id {text!r}; expected A|B|C|D|conj1:m|conj2")


@dataclass
class PipelineReport:
    theorem: str
    surface: str
    hypotheses: list
    symmetry: SymmetryVerdict | None
    equality: CheckReport | None
    errors: list = field(default_factory=list)
    params: dict = field(default_factory=dict)

    @property
    def hypotheses_pass(self):
        return not self.errors and all(h.passed for h in self.hypotheses)

    @property
    def conclusion_pass(self):
        if self.symmetry is None:
            return None
        ok = self.symmetry.symmetric
        if self.equality is not None:
            ok = ok and self.equality.passed
        return ok

    @property
    def alarm(self):
        return bool(self.hypotheses_pass and self.conclusion_pass is False)

    @property
    def consistent(self):
        return not self.alarm

    @property
    def is_conjecture(self):
        return self.theorem.startswith("conj")

    @property
    def exit_code(self):
        if self.alarm:
            return 2
        return 1 if self.errors else 0

    @property
    def verdict(self):
        kind = "conjecture" if self.is_conjecture else "theorem"
        if self.alarm:
            return "INCONSISTENCY ALARM: hypotheses pass but conclusion fails (counterexample candidate)"
        if self.errors:
            return "error while checking hypotheses"
        if self.hypotheses_pass:
            return f"consistent with {kind}: hypotheses pass and conclusion holds"
        return f"consistent with {kind}: hypotheses not satisfied, {kind} not challenged"

    def to_dict(self):
        return {
            "theorem": self.theorem,
            "surface": self.surface,
            "hypotheses": [h.to_dict() for h in self.hypotheses],
            "hypotheses_pass": self.hypotheses_pass,
            "symmetry": None if self.symmetry is None else self.symmetry.to_dict(),
            "equality": None if self.equality is None else self.equality.to_dict(),
            "conclusion_pass": self.conclusion_pass,
            "alarm": self.alarm,
            "consistent": self.consistent,
            "verdict": self.verdict,
            "errors": list(self.errors),
            "exit_code": self.exit_code,
            "params": self.params,
        }


def _default_g(n):
    return "gm:2" if n >= 2 else "mean"


def verify_theorem_pipeline(obj, theorem, params=None):
    """Run the hypothesis checks of a statement and, when possible, its
    conclusion checks. Checker exceptions are recorded, never raised."""
    params = dict(params or {})
    tid, m = parse_theorem(theorem) if isinstance(theorem, str) else theorem
    label = tid if m is None else f"{tid}:{m}"
    name = getattr(obj, "name", "surface")
    n = obj.n
    grid = int(params.get("grid", 21))
    tol = params.get("tol")
    delta = params.get("delta")
    diam = float(obj.diameter)
    r = float(params.get("r", 0.1 * diam))
    max_order = int(params.get("max_order", 8))
    g = params.get("curvature") or _default_g(n)
    errors, hyps = [], []

    def run(fn, *args, **kw):
        try:
            hyps.append(fn(*args, **kw))
        except Exception as exc:  # recorded, the pipeline carries on
            errors.append(f"{getattr(fn, '__name__', 'check')}: {type(exc).__name__}: {exc}")

    pair = None
    try:
        pair = conditions.as_pair(obj)
    except GraphDecompositionError as exc:
        hyps.append(CheckReport("graph-decomposition", False, [{"x_prime": exc.witness, "message": str(exc)}],
                                notes=["main assumption not evaluable without two graphs"]))
    except Exception as exc:
        errors.append(f"decompose_graphs: {type(exc).__name__}: {exc}")

    main_curv = {"A": "mean", "B": "mean", "D": "mean", "C": g, "conj2": g}.get(tid, f"sigma:{m}")
    if tid == "conj1":
        CurvatureFunctionSpec("sigma", m).validate(n)

    if tid == "A":
        if pair is not None:
            run(conditions.check_monotone_extension_necessary, pair, params.get("L"), grid, tol, delta)
    elif tid == "B":
        run(convexity_check, obj, grid)
        if pair is not None:
            run(conditions.check_main_assumption, pair, "mean", grid, tol, delta)
        run(conditions.check_condition_T, obj, max_order)
    elif tid == "C":
        run(convexity_check, obj, grid)
        run(conditions.check_condition_T, obj, max_order)
        run(g_admissible_on_image, obj, g, grid)
        if pair is not None:
            run(conditions.check_main_assumption, pair, g, grid, tol, delta)
    elif tid == "D":
        if pair is not None:
            run(conditions.check_main_assumption, pair, "mean", grid, tol, delta)
        run(conditions.check_condition_S_prime, obj, r, grid)
    elif tid == "conj1":
        run(conditions.check_condition_S_prime, obj, r, grid)
        run(gamma_image_check, obj, m, grid)
        if pair is not None:
            run(conditions.check_main_assumption, pair, f"sigma:{m}", grid, tol, delta)
    elif tid == "conj2":
        run(conditions.check_condition_S_prime, obj, r, grid)
        run(g_admissible_on_image, obj, g, grid)
        if pair is not None:
            run(conditions.check_main_assumption, pair, g, grid, tol, delta)

    verdict = equality = None
    if pair is not None:
        try:
            verdict = detect_symmetry_plane(pair, delta, params.get("conclusion_tol"), grid)
            if not errors and all(h.passed for h in hyps):
                equality = curvature_equality_check(pair, main_curv, delta, params.get("conclusion_tol"), grid)
        except Exception as exc:
            errors.append(f"conclusion: {type(exc).__name__}: {exc}")
    return PipelineReport(
        label, name, hyps, verdict, equality, errors,
        {"grid": grid, "r": r, "max_order": max_order, "curvature": main_curv,
         "delta": pair.default_delta() if (delta is None and pair is not None) else delta},
    )
