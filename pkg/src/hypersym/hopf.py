"""Harness for boundary-point comparison problems on the half cylinder
Omega = {(t, y) : |y| < 1, 0 < t < 1} in R^n.

A :class:`FunctionPair` holds u >= v given as expressions in ``t`` and
``y1 .. y{n-1}``. Matches u(t, y) = v(s, y) are located by bisection in t
(u is increasing in t), and at each match either the graph curvatures
sigma_m(k^u)(t, y) <= sigma_m(k^v)(s, y) or the Laplacians
Delta u(t, y) <= Delta v(s, y) are compared.

Variants:

``sigma:m``   curvature comparison (with u_t(0,0) = 0 and the boundary block)
``op2:m``     the same plus smooth reflection of w = v (t >= 0), u(-t) (t < 0)
``laplace``   Laplace comparison with u, v > 0, u(0, y) = 0
``conj3``     laplace plus u_t(0, 0) = 0
``conj4``     conj3 plus finite vanishing order of u(t, 0) and v(t, 0)

Graph curvatures use the upward normal (-grad u, 1)/W, so the paraboloid
(t^2 + |y|^2)/2 has k = (1, ..., 1) at the origin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import mpmath
import numpy as np
import sympy as sp

from ._fd import STEP1, STEP2, fd_hessian, fd_jacobian
from .curvature import CurvatureVector, in_gamma_m, pencil_eigvals, sigma_m
from .report import CheckReport

MP_DPS = 50
VANISH_THRESHOLD = mpmath.mpf("1e-20")
BOUNDARY_EPS = 1e-9
MAX_WITNESSES = 50


def _symbols(n):
    t = sp.Symbol("t", real=True)
    ys = [sp.Symbol(f"y{i}", real=True) for i in range(1, n)]
    return t, ys


class ScalarFunction:
    """Smooth function of (t, y) with value, gradient, Hessian and Laplacian.

    Built from a sympy expression (exact derivatives) or from a numpy
    callable (central differences).
    """

    def __init__(self, n, expr=None, func=None, label=""):
        if n < 1:
            raise ValueError("n must be >= 1")
        self.n = n
        self.label = label
        self.expr = None
        self._func = func
        if expr is not None:
            t, ys = _symbols(n)
            syms = [t, *ys]
            local = {str(s): s for s in syms}
            e = sp.sympify(expr, locals=local) if isinstance(expr, str) else sp.sympify(expr)
            extra = e.free_symbols - set(syms)
            if extra:
                raise ValueError(f"unknown symbols {sorted(map(str, extra))} in {expr!r}")
            self.expr = e
            self.label = label or str(e)
            grads = [sp.diff(e, s) for s in syms]
            hess = [[sp.diff(g, s) for s in syms] for g in grads]
            self._syms = syms
            self._np = sp.lambdify(syms, [e, grads, hess], modules="numpy", cse=True)
            self._mp = sp.lambdify(syms, [e, grads, hess], modules="mpmath")
            self._mp_value = sp.lambdify(syms, e, modules="mpmath")
        elif func is None:
            raise ValueError("need an expression or a callable")

    @classmethod
    def from_callable(cls, n, func, label="callable"):
        return cls(n, func=func, label=label)

    # -- evaluation --------------------------------------------------------

    def _sym_eval(self, P):
        P = np.atleast_2d(np.asarray(P, dtype=float))
        cols = [P[:, i] for i in range(self.n)]
        with np.errstate(all="ignore"):
            v, g, h = self._np(*cols)
        N = P.shape[0]
        v = np.broadcast_to(np.asarray(v, dtype=float), (N,)).copy()
        g = np.stack([np.broadcast_to(np.asarray(x, dtype=float), (N,)) for x in g], axis=-1)
        h = np.stack([np.stack([np.broadcast_to(np.asarray(x, dtype=float), (N,)) for x in row], axis=-1)
                      for row in h], axis=-2)
        bad = ~(np.isfinite(v) & np.all(np.isfinite(g), axis=-1) & np.all(np.isfinite(h), axis=(-1, -2)))
        for i in np.flatnonzero(bad):
            v[i], g[i], h[i] = self._limit_eval(P[i])
        return v, g, h

    def _limit_eval(self, p):
        """Evaluate at removable singularities on the t = 0 face as the
        one-sided limit, approximated in 50-digit arithmetic at t = 1e-30."""
        with mpmath.workdps(MP_DPS):
            args = [mpmath.mpf(float(x)) for x in p]
            if args[0] == 0:
                args[0] = mpmath.mpf("1e-30")
            v, g, h = self._mp(*args)
            return float(v), np.array([float(x) for x in g]), np.array([[float(x) for x in r] for r in h])

    def evaluate(self, P):
        """(value, gradient, Hessian) at points of shape (N, n)."""
        if self.expr is not None:
            return self._sym_eval(P)
        P = np.atleast_2d(np.asarray(P, dtype=float))
        f = lambda Q: np.asarray(self._func(Q), dtype=float)[..., None]  # noqa: E731
        v = f(P)[..., 0]
        g = fd_jacobian(f, P, STEP1)[..., 0, :]
        h = fd_hessian(f, P, STEP2)[..., 0, :, :]
        return v, g, h

    def value(self, P):
        P = np.atleast_2d(np.asarray(P, dtype=float))
        if self.expr is None:
            return np.asarray(self._func(P), dtype=float)
        return self._sym_eval(P)[0]

    def laplacian(self, P):
        h = self.evaluate(P)[2]
        return np.trace(h, axis1=-2, axis2=-1)

    def mp_along_t(self, y=None):
        """t -> f(t, y) in mpmath (y = 0 by default), extended by its limit at t = 0."""
        y = [0.0] * (self.n - 1) if y is None else list(y)
        if self.expr is None:
            return lambda t: mpmath.mpf(float(self._func(np.array([[float(t), *y]]))[0]))
        fn = self._mp_value

        def f(t):
            try:
                return fn(t, *[mpmath.mpf(c) for c in y])
            except ZeroDivisionError:
                return fn(mpmath.mpf("1e-60") * (1 if t >= 0 else -1), *[mpmath.mpf(c) for c in y])

        return f


@dataclass
class FunctionPair:
    u: ScalarFunction
    v: ScalarFunction
    name: str = "pair"

    @property
    def n(self):
        return self.u.n

    @classmethod
    def from_expressions(cls, u, v, n=2, name=None):
        fu, fv = ScalarFunction(n, u), ScalarFunction(n, v)
        return cls(fu, fv, name or f"u={fu.label}, v={fv.label}")


BUILTIN_PAIRS = {
    "identity": ("t", "t"),
    "linear-zero": ("t", "0"),
    "linear-half": ("t", "t/2"),
    "quad-linear": ("t + t**2", "t"),
    "diagonal-quadratic": ("t**2 + t*y1**2", "t**2 + t*y1**2"),
    "diagonal-cubic": ("t**2 + t**3/2 + t*y1**2", "t**2 + t**3/2 + t*y1**2"),
    "quad-scaled": ("t**2", "t**2/2"),
    "flat-diagonal": ("exp(-1/t**2)", "exp(-1/t**2)"),
}


def builtin_pair(name, n=2):
    if name not in BUILTIN_PAIRS:
        raise ValueError(f"unknown builtin pair {name!r}; known: {sorted(BUILTIN_PAIRS)}")
    u, v = BUILTIN_PAIRS[name]
    if n < 2:
        u, v = (e.replace("*y1**2", "*0") for e in (u, v))
    return FunctionPair.from_expressions(u, v, n, name)


# --------------------------------------------------------------------------
# geometry of graphs


def graph_curvature_field(fn: ScalarFunction, P):
    """Principal curvatures (ascending) of the graph of fn at points (N, n)."""
    _, g, h = fn.evaluate(P)
    W = np.sqrt(1.0 + np.sum(g * g, axis=-1))
    first = np.eye(fn.n) + g[..., :, None] * g[..., None, :]
    return pencil_eigvals(first, h / W[..., None, None])


def graph_curvatures(fn: ScalarFunction, point) -> CurvatureVector:
    return CurvatureVector(graph_curvature_field(fn, np.asarray(point, dtype=float)[None])[0])


# --------------------------------------------------------------------------
# domain and matches


@dataclass(frozen=True)
class HalfCylinderDomain:
    """Grid on the closure of Omega minus the lateral boundary |y| = 1.

    t nodes j/grid for j = 0..grid-1 (face t = 0 included); y nodes on the
    Cartesian grid with spacing 2/grid restricted to |y| < 1.
    """

    n: int
    grid: int = 16

    @property
    def t_nodes(self):
        return np.arange(self.grid) / self.grid

    @property
    def y_nodes(self):
        if self.n == 1:
            return np.zeros((1, 0))
        axis = np.linspace(-1.0, 1.0, self.grid + 1)[1:-1]
        Y = np.stack(np.meshgrid(*([axis] * (self.n - 1)), indexing="ij"), axis=-1).reshape(-1, self.n - 1)
        return Y[np.linalg.norm(Y, axis=-1) < 1.0]

    @property
    def spacing(self):
        return 1.0 / self.grid

    def points(self, interior=True):
        t = self.t_nodes[1:] if interior else self.t_nodes
        Y = self.y_nodes
        T = np.repeat(t, Y.shape[0])
        YY = np.tile(Y, (t.size, 1))
        return np.column_stack([T, YY])

    def face(self):
        Y = self.y_nodes
        return np.column_stack([np.zeros(Y.shape[0]), Y])


@dataclass(frozen=True)
class LevelMatch:
    t: float
    s: float
    y: tuple
    values: tuple = ()

    def to_dict(self):
        return {"t": self.t, "s": self.s, "y": list(self.y), "values": list(self.values)}


def _solve_levels(u: ScalarFunction, Y, target, iters=60):
    lo = np.zeros(target.shape)
    hi = np.ones(target.shape)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        above = u.value(np.column_stack([mid, Y])) > target
        hi = np.where(above, mid, hi)
        lo = np.where(above, lo, mid)
    return 0.5 * (lo + hi)


def find_level_matches(pair: FunctionPair, grid=16, count_samples=65):
    """Solve u(t, y) = v(s, y) for t over grid nodes (s, y), 0 < s < 1.

    Returns (matches, sign_change_counts). Matches within 1e-9 of t = 0 or
    t = 1 are discarded; each count is the number of sign changes of
    u(., y) - v(s, y) on a uniform t grid (uniqueness witness).
    """
    dom = HalfCylinderDomain(pair.n, grid)
    P = dom.points(interior=True)
    s, Y = P[:, 0], P[:, 1:]
    target = pair.v.value(P)
    u0 = pair.u.value(np.column_stack([np.zeros_like(s), Y]))
    u1 = pair.u.value(np.column_stack([np.ones_like(s), Y]))
    has = (target >= u0) & (target <= u1)
    t = _solve_levels(pair.u, Y, target)
    keep = has & (t > BOUNDARY_EPS) & (t < 1.0 - BOUNDARY_EPS)
    tt = np.linspace(0.0, 1.0, count_samples)
    counts = np.zeros(s.size, dtype=int)
    for j in range(s.size):
        d = pair.u.value(np.column_stack([tt, np.repeat(Y[j][None], tt.size, 0)])) - target[j]
        sg = np.sign(d)
        sg = sg[sg != 0]
        counts[j] = int(np.sum(sg[1:] != sg[:-1]))
    matches = [LevelMatch(float(t[i]), float(s[i]), tuple(float(c) for c in Y[i])) for i in np.flatnonzero(keep)]
    return matches, counts


# --------------------------------------------------------------------------
# vanishing order


def vanishing_order(fn, max_order=8, threshold=VANISH_THRESHOLD):
    """Smallest j <= max_order with a nonzero j-th derivative at t = 0.

    ``fn`` is a sympy expression in t, a string, a :class:`ScalarFunction`
    (restricted to y = 0) or an mpmath-compatible callable. Taylor
    coefficients are computed in 50-digit arithmetic; returns None when all
    tested coefficients are below ``threshold`` (not finite at tested order).
    """
    if isinstance(fn, ScalarFunction):
        f = fn.mp_along_t()
    elif isinstance(fn, (str, sp.Expr)):
        f = ScalarFunction(1, fn).mp_along_t()
    else:
        f = fn
    with mpmath.workdps(MP_DPS):
        coeffs = mpmath.taylor(f, mpmath.mpf(0), max_order)
        for j, c in enumerate(coeffs):
            if abs(c) > threshold:
                return j
    return None


# --------------------------------------------------------------------------
# hypothesis and conclusion checks


def parse_variant(text):
    """'sigma:m', 'op2:m', 'laplace', 'conj3', 'conj4' -> (kind, m)."""
    low = text.strip().lower()
    if low in ("laplace", "conj3", "conj4"):
        return low, None
    kind, _, arg = low.partition(":")
    if kind in ("sigma", "op2") and arg:
        return kind, int(arg)
    raise ValueError(f"unknown variant {text!r}; expected sigma:m|op2:m|laplace|conj3|conj4")


class _Items:
    def __init__(self, tol):
        self.tol = tol
        self.status = {}
        self.witnesses = []
        self.residuals = {}

    def record(self, item, ok, witness=None, residual=0.0):
        self.status[item] = bool(ok) and self.status.get(item, True)
        self.residuals[item] = max(float(residual), self.residuals.get(item, -math.inf))
        if not ok and witness is not None and len(self.witnesses) < MAX_WITNESSES:
            self.witnesses.append({"item": item, **witness})

    def pointwise(self, item, P, resid):
        """resid > tol is a violation (resid measured as 'amount of failure')."""
        resid = np.asarray(resid, dtype=float)
        bad = np.flatnonzero(~(resid <= self.tol))
        worst = float(np.nanmax(resid)) if resid.size else 0.0
        self.record(item, bad.size == 0,
                    {"point": P[bad[0]].tolist(), "residual": float(resid[bad[0]])} if bad.size else None, worst)


def _reflection_check(pair, items, order, rtol, y_nodes):
    for y in y_nodes:
        fv = pair.v.mp_along_t(y)
        fu = pair.u.mp_along_t(y)
        with mpmath.workdps(30):
            for j in range(order + 1):
                right = mpmath.diff(fv, 0, j, direction=1)
                left = mpmath.diff(lambda t: fu(-t), 0, j, direction=-1)
                gap = abs(right - left)
                scale = max(1, abs(right), abs(left))
                if gap > rtol * scale:
                    items.record("reflection", False, {"y": list(map(float, y)), "order": j,
                                                       "right": float(right), "left": float(left),
                                                       "residual": float(gap / scale)}, float(gap / scale))
                    break
            else:
                items.record("reflection", True)


def check_hopf_hypotheses(pair: FunctionPair, variant="sigma:1", grid=16, tol=1e-9,
                          reflection_order=6, reflection_rtol=1e-5, max_order=8):
    """Pointwise structural conditions plus the comparison at every level match.

    ``params['items']`` maps each condition to its verdict, so callers can
    tell exactly which requirement fails.
    """
    kind, m = parse_variant(variant) if isinstance(variant, str) else variant
    n = pair.n
    if m is not None and not 1 <= m <= n:
        raise ValueError(f"m={m} out of range for n={n}")
    dom = HalfCylinderDomain(n, grid)
    P = dom.points(interior=True)
    F = dom.face()
    items = _Items(tol)
    uP, gu, _ = pair.u.evaluate(P)
    vP = pair.v.value(P)
    origin = np.zeros((1, n))
    u0, gu0, _ = pair.u.evaluate(origin)
    v0 = pair.v.value(origin)

    items.pointwise("u>=v", P, vP - uP)
    items.pointwise("u_t>0", P, np.where(gu[:, 0] > 0, 0.0, np.inf))
    if kind in ("sigma", "op2"):
        items.pointwise("v>=0", P, -vP)
        items.pointwise("u(0,y)=v(0,y)", F, np.abs(pair.u.value(F) - pair.v.value(F)))
        items.pointwise("u(0,0)=v(0,0)=0", origin, np.maximum(np.abs(u0), np.abs(v0)))
        items.pointwise("u_t(0,0)=0", origin, np.abs(gu0[:, 0]))
    else:
        items.pointwise("u>0", P, np.where(uP > 0, 0.0, np.inf))
        items.pointwise("v>0", P, np.where(vP > 0, 0.0, np.inf))
        items.pointwise("u(0,y)=0", F, np.abs(pair.u.value(F)))
        if kind in ("conj3", "conj4"):
            items.pointwise("u_t(0,0)=0", origin, np.abs(gu0[:, 0]))
        if kind == "conj4":
            orders = {"u": vanishing_order(pair.u, max_order), "v": vanishing_order(pair.v, max_order)}
            finite = all(o is not None for o in orders.values())
            items.record("finite-vanishing-order", finite,
                         {"orders": {k: ("not finite" if o is None else o) for k, o in orders.items()},
                          "residual": 1.0})

    matches, counts = find_level_matches(pair, grid)
    items.record("unique-match", bool(np.all(counts <= 1)),
                 {"max_sign_changes": int(counts.max(initial=0)), "residual": float(counts.max(initial=0))})
    if matches:
        T = np.array([[mt.t, *mt.y] for mt in matches])
        S = np.array([[mt.s, *mt.y] for mt in matches])
        if kind in ("sigma", "op2"):
            ku, kv = graph_curvature_field(pair.u, T), graph_curvature_field(pair.v, S)
            a, b = sigma_m(ku, m), sigma_m(kv, m)
            elliptic = bool(np.all(in_gamma_m(ku, m)) and np.all(in_gamma_m(kv, m)))
            label = f"sigma_{m}(k^u)(t,y) <= sigma_{m}(k^v)(s,y)"
        else:
            a, b = pair.u.laplacian(T), pair.v.laplacian(S)
            label = "Delta u(t,y) <= Delta v(s,y)"
        resid = a - b
        bad = np.flatnonzero(~(resid <= tol))
        for i in bad[:MAX_WITNESSES]:
            items.record("comparison", False, {"t": matches[i].t, "s": matches[i].s, "y": list(matches[i].y),
                                               "lhs": float(a[i]), "rhs": float(b[i]), "residual": float(resid[i])},
                         float(resid[i]))
        if bad.size == 0:
            items.record("comparison", True, residual=float(np.max(resid)))
        matches = [LevelMatch(mt.t, mt.s, mt.y, (float(a[i]), float(b[i]))) for i, mt in enumerate(matches)]
    else:
        label = "comparison"
        items.record("comparison", True)
    if not matches or kind not in ("sigma", "op2"):
        elliptic = None
    if kind == "op2":
        _reflection_check(pair, items, reflection_order, reflection_rtol, dom.y_nodes[:: max(1, grid // 4)])

    passed = all(items.status.values())
    return CheckReport(
        f"hopf-hypotheses[{variant if isinstance(variant, str) else kind}]", passed, items.witnesses,
        [items.residuals.get(k, 0.0) for k in sorted(items.status)], tol, int(P.shape[0]),
        {"variant": kind, "m": m, "grid": grid, "items": dict(sorted(items.status.items())),
         "matches": len(matches), "comparison": label, "gamma_m_at_matches": elliptic},
        ["residuals follow the sorted item names"] + ([] if matches else ["no interior level matches: comparison vacuous"]),
    ), matches


def _ball_points(n, rho, grid):
    t = np.linspace(0.0, rho, grid + 1)
    axis = np.linspace(-rho, rho, 2 * grid + 1)
    if n == 1:
        return t[:, None]
    Y = np.stack(np.meshgrid(*([axis] * (n - 1)), indexing="ij"), axis=-1).reshape(-1, n - 1)
    P = np.column_stack([np.repeat(t, Y.shape[0]), np.tile(Y, (t.size, 1))])
    return P[np.linalg.norm(P, axis=-1) < rho]


def check_hopf_conclusion(pair: FunctionPair, rho=0.1, tol=1e-9, variant="sigma:1", grid=16):
    """Conclusion A: u = v on the rho-ball at (0,0); B: v = 0 there.

    For the Laplace variants the conclusion is u = v on all of Omega.
    """
    if not rho > 0:
        raise ValueError("rho must be positive")
    kind = parse_variant(variant)[0] if isinstance(variant, str) else variant[0]
    if kind in ("laplace", "conj3", "conj4"):
        P = HalfCylinderDomain(pair.n, grid).points(interior=False)
        diff = np.abs(pair.u.value(P) - pair.v.value(P))
        i = int(np.argmax(diff))
        ok = bool(diff[i] <= tol)
        w = [] if ok else [{"point": P[i].tolist(), "u_minus_v": float(diff[i]), "residual": float(diff[i])}]
        return CheckReport("hopf-conclusion[u=v in Omega]", ok, w, [float(diff[i])], tol, int(P.shape[0]),
                           {"conclusion_A": ok, "conclusion_B": None, "holds": "A" if ok else "none"})
    P = _ball_points(pair.n, rho, grid)
    diff = np.abs(pair.u.value(P) - pair.v.value(P))
    vabs = np.abs(pair.v.value(P))
    a_ok, b_ok = bool(diff.max() <= tol), bool(vabs.max() <= tol)
    holds = "A" if a_ok else ("B" if b_ok else "none")
    witnesses = []
    if not (a_ok or b_ok):
        i, j = int(np.argmax(diff)), int(np.argmax(vabs))
        witnesses = [{"conclusion": "A", "point": P[i].tolist(), "residual": float(diff[i])},
                     {"conclusion": "B", "point": P[j].tolist(), "residual": float(vabs[j])}]
    return CheckReport("hopf-conclusion", a_ok or b_ok, witnesses, [float(diff.max()), float(vabs.max())], tol,
                       int(P.shape[0]), {"rho": rho, "conclusion_A": a_ok, "conclusion_B": b_ok, "holds": holds})


@dataclass
class HopfRun:
    hypotheses: CheckReport
    conclusion: CheckReport
    matches: list = field(default_factory=list)
    variant: str = "sigma"

    @property
    def conjectured(self):
        """The bare Laplace block is a setting, not a claim; only the
        variants with the extra conditions assert the conclusion."""
        return self.variant != "laplace"

    @property
    def alarm(self):
        return bool(self.conjectured and self.hypotheses.passed and not self.conclusion.passed)

    @property
    def exit_code(self):
        return 2 if self.alarm else 0

    @property
    def verdict(self):
        if self.alarm:
            return "counterexample candidate for human review: hypotheses pass, no conclusion holds"
        if self.hypotheses.passed and not self.conclusion.passed:
            return "hypotheses pass without the extra conditions; conclusion not expected"
        if self.hypotheses.passed:
            return "consistent: hypotheses pass and a conclusion holds"
        return "consistent: hypotheses not satisfied"

    def to_dict(self):
        return {
            "hypotheses": self.hypotheses.to_dict(),
            "conclusion": self.conclusion.to_dict(),
            "variant": self.variant,
            "conjectured": self.conjectured,
            "alarm": self.alarm,
            "verdict": self.verdict,
            "matches": len(self.matches),
            "exit_code": self.exit_code,
        }


def run_hopf(pair, variant="sigma:1", grid=16, rho=0.1, tol=1e-9):
    hyp, matches = check_hopf_hypotheses(pair, variant, grid, tol)
    concl = check_hopf_conclusion(pair, rho, tol, variant, grid)
    kind = parse_variant(variant)[0] if isinstance(variant, str) else variant[0]
    return HopfRun(hyp, concl, matches, kind)


# --------------------------------------------------------------------------
# search


@dataclass
class SearchResult:
    best: object
    score: float | None
    candidates: list
    budget_exhausted: bool
    outside_scope: list

    def to_dict(self):
        return {
            "best": self.best,
            "score": self.score,
            "candidates": self.candidates,
            "budget_exhausted": self.budget_exhausted,
            "outside_conjecture4_scope": self.outside_scope,
            "note": "residuals for human review; no counterexample is claimed",
        }


def search_counterexample(family, budget=20, grid=12, variant="sigma:1", rho=0.1, tol=1e-9, max_order=8):
    """Scan a parametrized family for hypothesis-passing pairs that violate
    every conclusion.

    ``family`` is an iterable of (parameter, FunctionPair). Each candidate is
    scored by its conclusion violation (the smaller of the two conclusion
    residuals; the Omega-wide one for Laplace variants). Hypothesis-passing
    pairs whose u(t,0) or v(t,0) vanish to infinite order are listed as
    outside the finite-order scope.
    """
    items = iter(family)
    candidates, outside = [], []
    best, best_score = None, None
    exhausted = False
    count = 0
    for param, pair in items:
        if count >= budget:
            exhausted = True
            break
        count += 1
        run = run_hopf(pair, variant, grid, rho, tol)
        hyp_slack = max([0.0, *[w.get("residual", 0.0) for w in run.hypotheses.witnesses
                               if isinstance(w.get("residual", 0.0), (int, float))]])
        violation = min(r for r in run.conclusion.residuals)
        entry = {"param": param, "hypotheses_pass": run.hypotheses.passed, "hypothesis_slack": hyp_slack,
                 "conclusion_violation": violation, "conclusion": run.conclusion.params["holds"]}
        if run.hypotheses.passed:
            orders = (vanishing_order(pair.u, max_order), vanishing_order(pair.v, max_order))
            if None in orders:
                entry["outside_conjecture4_scope"] = True
                outside.append(param)
            if best_score is None or violation > best_score:
                best, best_score = param, violation
        candidates.append(entry)
    if count == 0:
        raise ValueError("empty family: budget spent with no candidates")
    return SearchResult(best, best_score, candidates, exhausted, outside)


def scaled_quadratic_family(alphas, n=2):
    """u = t^2, v = alpha t^2."""
    for a in alphas:
        yield float(a), FunctionPair.from_expressions("t**2", f"{sp.nsimplify(a)}*t**2", n, f"alpha={a}")


def flat_splice_family(betas, n=2):
    """u = v = beta t^2 + exp(-1/t^2): diagonal, flat when beta = 0."""
    for b in betas:
        e = f"{sp.nsimplify(b)}*t**2 + exp(-1/t**2)"
        yield float(b), FunctionPair.from_expressions(e, e, n, f"beta={b}")


SEARCH_FAMILIES = {"scaled-quadratic": scaled_quadratic_family, "flat-splice": flat_splice_family}
