"""Deformations x -> x + t V(x), weighted curvature areas, first-variation
identities, the potential A(q) = sqrt(1+|q|^2), the asymmetry functional
and smooth cutoffs near the rim of R.

Sign conventions: curvatures against the inner normal (unit sphere has
k = (1,...,1)) and the sum convention sigma_1 = k_1 + ... + k_n, so that

    d/dt  int_{M(t)} sigma_{m-1} dsigma = -m int_M V . nu sigma_m dsigma.

Two independent integration routes exist. The *surface* route uses the
global parametrization of a surface of revolution (the whole of M,
including its vertical part). The *graph* route integrates over the
disk R_delta with the radial substitution of :func:`disk_rule`, and adds
the vertical strip analytically.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
import sympy as sp

from . import quadrature
from ._fd import richardson_central
from .curvature import curvatures_from_derivatives, pencil_eigvals, sigma_m
from .geometry import ClosedGraphPair, GeometryError, SurfacePatch, VerticalStrip
from .quadrature import QuadratureError

# --------------------------------------------------------------------------
# potential A


def potential_A(q):
    q = np.asarray(q, dtype=float)
    return np.sqrt(1.0 + np.sum(q * q, axis=-1))


def gradient_A(q):
    q = np.asarray(q, dtype=float)
    return q / potential_A(q)[..., None]


def hessian_A(q):
    q = np.asarray(q, dtype=float)
    s = 1.0 + np.sum(q * q, axis=-1)
    n = q.shape[-1]
    outer = q[..., :, None] * q[..., None, :]
    return (s[..., None, None] * np.eye(n) - outer) / s[..., None, None] ** 1.5


def monotone_gap(q1, q2):
    """[grad A(q1) - grad A(q2)] . (q1 - q2), positive for q1 != q2."""
    q1 = np.asarray(q1, dtype=float)
    q2 = np.asarray(q2, dtype=float)
    return np.sum((gradient_A(q1) - gradient_A(q2)) * (q1 - q2), axis=-1)


@dataclass(frozen=True)
class Potential:
    """The convex potential A(q) = sqrt(1 + |q|^2)."""

    def __call__(self, q):
        return potential_A(q)

    gradient = staticmethod(gradient_A)
    hessian = staticmethod(hessian_A)
    gap = staticmethod(monotone_gap)

    @staticmethod
    def hessian_lower_bound(q):
        q = np.asarray(q, dtype=float)
        return (1.0 + np.sum(q * q, axis=-1)) ** -1.5


# --------------------------------------------------------------------------
# fields


class DeformationError(GeometryError):
    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


@dataclass(frozen=True, eq=False)
class VerticalField:
    """V(x) = v(x') e_{n+1}.

    ``grad`` and ``hess`` give derivatives of v; ``support_radius`` (with
    ``support_center``) declares v = 0 outside that ball.
    """

    v: Callable
    grad: Callable
    hess: Callable
    support_center: np.ndarray | None = None
    support_radius: float | None = None
    label: str = "vertical"

    @property
    def compact(self):
        return self.support_radius is not None

    def vector(self, X):
        X = np.asarray(X, dtype=float)
        out = np.zeros_like(X)
        out[..., -1] = self.v(X[..., :-1])
        return out

    def vanishes_near_rim(self, pair, delta):
        if not self.compact:
            return False
        d = np.linalg.norm(np.asarray(self.support_center) - pair.center)
        return d + self.support_radius <= pair.radius - delta + 1e-15


@dataclass(frozen=True)
class RadialField:
    """V(x) = x - origin; used only as an analytic oracle."""

    origin: np.ndarray | None = None
    label: str = "radial"

    def vector(self, X):
        X = np.asarray(X, dtype=float)
        return X if self.origin is None else X - self.origin


def constant_field(value=1.0, n=2):
    value = float(value)
    return VerticalField(
        lambda x: np.full(np.shape(x)[:-1], value),
        lambda x: np.zeros(np.shape(x)),
        lambda x: np.zeros(np.shape(x) + (np.shape(x)[-1],)),
        label=f"const:{value!r}",
    )


def bump_field(center, radius, amplitude=1.0):
    """Smooth bump a*exp(1 - 1/(1 - |x'-c|^2/r^2)) supported in B(c, r)."""
    c = np.asarray(center, dtype=float)
    r2 = float(radius) ** 2

    def parts(x):
        d = np.asarray(x, dtype=float) - c
        s = np.sum(d * d, axis=-1) / r2
        inside = s < 1.0
        g = np.where(inside, 1.0 - s, 1.0)
        val = np.where(inside, amplitude * np.exp(1.0 - 1.0 / g), 0.0)
        return d, s, g, inside, val

    def v(x):
        return parts(x)[4]

    def grad(x):
        d, s, g, inside, val = parts(x)
        # d/dx exp(1 - 1/g) = val * (-1/g^2) * (2 d / r2)
        coef = np.where(inside, -val * 2.0 / (r2 * g * g), 0.0)
        return coef[..., None] * d

    def hess(x):
        d, s, g, inside, val = parts(x)
        n = d.shape[-1]
        a = np.where(inside, -2.0 / (r2 * g * g), 0.0)
        # grad = val * a * d with a = -2/(r2 g^2); da/dx = -8 d /(r2^2 g^3)
        da = np.where(inside, -8.0 / (r2 * r2 * g**3), 0.0)
        outer = d[..., :, None] * d[..., None, :]
        return val[..., None, None] * (
            (a * a)[..., None, None] * outer + a[..., None, None] * np.eye(n) + da[..., None, None] * outer
        )

    return VerticalField(v, grad, hess, c, float(radius), f"bump:{c.tolist()},{float(radius)!r},{amplitude!r}")


# --------------------------------------------------------------------------
# cutoff


class Cutoff:
    """chi(x') = S((R - delta - |x' - c|) / delta) for a C^order smoothstep S
    (or a C^infinity exponential one): chi = 1 on R_{2 delta}, chi = 0
    outside R_delta."""

    def __init__(self, center, radius, delta, order=3):
        if not delta > 0:
            raise ValueError("delta must be positive")
        if not 2.0 * delta < radius:
            raise ValueError(f"delta={delta} too large for region radius {radius}")
        self.center = np.asarray(center, dtype=float)
        self.radius = float(radius)
        self.delta = float(delta)
        self.order = order
        x = sp.Symbol("x", real=True)
        if order == "exp":
            e = lambda y: sp.exp(-1 / y)  # noqa: E731
            S = e(x) / (e(x) + e(1 - x))
        else:
            N = int(order)
            if N < 1:
                raise ValueError("smoothstep order must be >= 1")
            C = sp.factorial(2 * N + 1) / sp.factorial(N) ** 2
            S = sp.integrate(C * x**N * (1 - x) ** N, (x, 0, x))
        derivs = [S, sp.diff(S, x), sp.diff(S, x, 2)]
        self._S = [sp.lambdify(x, d, "numpy") for d in derivs]
        grid = np.linspace(1e-6, 1 - 1e-6, 20001)
        self.slope_bound = float(np.max(np.abs(self._step(grid, 1))))

    def _step(self, a, order):
        a = np.asarray(a, dtype=float)
        inner = (a > 0) & (a < 1)
        ac = np.where(inner, a, 0.5)
        with np.errstate(all="ignore"):
            val = np.broadcast_to(np.asarray(self._S[order](ac), dtype=float), a.shape)
        if order == 0:
            return np.where(inner, val, np.where(a >= 1, 1.0, 0.0))
        return np.where(inner, val, 0.0)

    def _arg(self, x):
        d = np.asarray(x, dtype=float) - self.center
        rho = np.linalg.norm(d, axis=-1)
        return d, rho, (self.radius - self.delta - rho) / self.delta

    def __call__(self, x):
        return self._step(self._arg(x)[2], 0)

    def gradient(self, x):
        d, rho, a = self._arg(x)
        xhat = d / np.where(rho > 0, rho, 1.0)[..., None]
        return (-self._step(a, 1) / self.delta)[..., None] * xhat

    def hessian(self, x):
        d, rho, a = self._arg(x)
        n = d.shape[-1]
        safe = np.where(rho > 0, rho, 1.0)
        xhat = d / safe[..., None]
        outer = xhat[..., :, None] * xhat[..., None, :]
        s1, s2 = self._step(a, 1), self._step(a, 2)
        return (s2 / self.delta**2)[..., None, None] * outer - (s1 / (self.delta * safe))[..., None, None] * (
            np.eye(n) - outer
        )

    @property
    def gradient_bound(self):
        """C / delta with C = max |S'|."""
        return self.slope_bound / self.delta


def build_cutoff(region, delta, order=3):
    """Cutoff for a pair (or a (center, radius) tuple)."""
    if isinstance(region, ClosedGraphPair):
        return Cutoff(region.center, region.radius, delta, order)
    center, radius = region
    return Cutoff(center, radius, delta, order)


def cutoff_sum_field(pair: ClosedGraphPair, delta, order=3):
    """v = chi * (f1 + f2), the test field built from the symmetry defect."""
    chi = build_cutoff(pair, delta, order)

    def sums(x, k):
        a = pair.graph(x, "upper", k)
        b = pair.graph(x, "lower", k)
        return a, b

    def v(x):
        x = np.asarray(x, dtype=float)
        c = chi(x)
        out = np.zeros(c.shape)
        on = c > 0
        if np.any(on):
            (f1, _, _), (f2, _, _) = sums(x[on], 0)
            out[on] = c[on] * (f1 + f2)
        return out

    def grad(x):
        x = np.asarray(x, dtype=float)
        c = chi(x)
        out = np.zeros(x.shape)
        on = c > 0
        if np.any(on):
            (f1, g1, _), (f2, g2, _) = sums(x[on], 1)
            out[on] = chi.gradient(x[on]) * (f1 + f2)[..., None] + c[on][..., None] * (g1 + g2)
        return out

    def hess(x):
        x = np.asarray(x, dtype=float)
        c = chi(x)
        n = x.shape[-1]
        out = np.zeros(x.shape + (n,))
        on = c > 0
        if np.any(on):
            (f1, g1, h1), (f2, g2, h2) = sums(x[on], 2)
            s, gs, hs = f1 + f2, g1 + g2, h1 + h2
            gc = chi.gradient(x[on])
            out[on] = (
                chi.hessian(x[on]) * s[..., None, None]
                + gc[..., :, None] * gs[..., None, :]
                + gs[..., :, None] * gc[..., None, :]
                + c[on][..., None, None] * hs
            )
        return out

    return VerticalField(v, grad, hess, pair.center.copy(), pair.radius - delta, f"cutoff-sum:{delta!r}")


# --------------------------------------------------------------------------
# deformation


class _ShiftedSheet:
    def __init__(self, base, field, t):
        self.base, self.field, self.t = base, field, t

    def evaluate(self, xp, order=2):
        f, g, h = self.base.evaluate(xp, order)
        f = f + self.t * self.field.v(xp)
        if order >= 1:
            g = g + self.t * self.field.grad(xp)
        if order >= 2:
            h = h + self.t * self.field.hess(xp)
        return f, g, h


class DeformedSurface:
    """Image of a parametrized surface under x -> x + t V(x)."""

    def __init__(self, base, field, t):
        self.base, self.field, self.t = base, field, float(t)
        self.n = base.n
        self.name = getattr(base, "name", "surface")

    @property
    def diameter(self):
        return self.base.diameter

    @property
    def quadrature_start(self):
        return self.base.quadrature_start

    @property
    def quadrature_max(self):
        return self.base.quadrature_max

    def _patch(self, patch):
        t, F = self.t, self.field
        if isinstance(F, RadialField):
            o = 0.0 if F.origin is None else F.origin
            return SurfacePatch(
                lambda u: patch.embed(u) + t * (patch.embed(u) - o),
                patch.lower, patch.upper,
                lambda u: (1.0 + t) * patch.tangents(u),
                lambda u: (1.0 + t) * patch.second_derivatives(u),
                patch.orientation, patch.scale,
            )
        n = self.n

        def embed(u):
            X = patch.embed(u)
            return X + t * F.vector(X)

        def jac(u):
            X, dX = patch.embed(u), patch.tangents(u)
            gv = F.grad(X[..., :n])
            out = dX.copy()
            out[..., n, :] += t * np.einsum("...a,...ai->...i", gv, dX[..., :n, :])
            return out

        def hess(u):
            X, dX, d2X = patch.embed(u), patch.tangents(u), patch.second_derivatives(u)
            gv, hv = F.grad(X[..., :n]), F.hess(X[..., :n])
            out = d2X.copy()
            out[..., n, :, :] += t * (
                np.einsum("...a,...aij->...ij", gv, d2X[..., :n, :, :])
                + np.einsum("...ai,...ab,...bj->...ij", dX[..., :n, :], hv, dX[..., :n, :])
            )
            return out

        return SurfacePatch(embed, patch.lower, patch.upper, jac, hess, patch.orientation, patch.scale)

    def quadrature(self, level):
        return [(self._patch(p), u, w) for p, u, w in self.base.quadrature(level)]


def deform(pair: ClosedGraphPair, V, t):
    """Pair for M(t) = {x + t V(x)}: graphs f_i + t v; the strip moves only
    when v does not vanish near the rim."""
    t = float(t)
    if not abs(t) < 1:
        raise DeformationError("deformation parameter must satisfy |t| < 1")
    if isinstance(V, RadialField):
        raise DeformationError("radial oracle fields act on parametrized surfaces only (use surface_integral)")
    surface = None if pair.surface is None else DeformedSurface(pair.surface, V, t)
    strip = pair.strip
    if strip is not None and not V.vanishes_near_rim(pair, 0.0):
        rim = pair.center.copy()
        rim[0] += pair.radius
        shift = t * float(V.v(rim[None])[0])
        strip = VerticalStrip(strip.lower + shift, strip.upper + shift)
    new = replace(pair, upper=_ShiftedSheet(pair.upper, V, t), lower=_ShiftedSheet(pair.lower, V, t),
                  strip=strip, surface=surface)
    xp, _ = new.interior_grid(17)
    f1, f2 = new.heights(xp)
    bad = np.flatnonzero(~(f1 > f2))
    if bad.size:
        raise DeformationError("deformed graphs cross", witness=xp[bad[0]].tolist())
    return new


# --------------------------------------------------------------------------
# integrals


def disk_rule(center, radius, n, level, breaks=()):
    """Quadrature over the ball B(center, radius) in R^n.

    The radius is split at ``breaks``; on each piece [a, b] the substitution
    r = b - (b - a)(1 - tau)^2 clusters nodes toward b, which turns the
    square-root rim singularity of graph integrands into a smooth one.
    """
    edges = [0.0, *sorted(float(b) for b in breaks if 0 < b < radius), float(radius)]
    tau, wt = quadrature.gauss_legendre(0.0, 1.0, level)
    rs, ws = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        r = b - (b - a) * (1.0 - tau) ** 2
        rs.append(r)
        ws.append(wt * 2.0 * (b - a) * (1.0 - tau) * r ** (n - 1))
    r, wr = np.concatenate(rs), np.concatenate(ws)
    dirs, wd = quadrature.sphere_rule(n, level)
    nodes = (r[:, None, None] * dirs[None, :, :]).reshape(-1, n) + np.asarray(center, dtype=float)
    return nodes, np.outer(wr, wd).ravel()


def _sigma(k, m):
    return np.ones(k.shape[:-1]) if m == 0 else sigma_m(k, m)


def _surface_sum(surface, level, integrand):
    """sum over quadrature nodes of integrand(X, k, nu) * density * w."""
    total = []
    for patch, u, w in surface.quadrature(level):
        dX, d2X = patch.tangents(u), patch.second_derivatives(u)
        k, nu, dens = curvatures_from_derivatives(dX, d2X, patch.orientation)
        X = patch.embed(u)
        total.append(w * dens * integrand(X, k, nu))
    return float(np.sum(np.concatenate(total)))


def _graph_sum(pair, level, delta, integrand, rule=None):
    """Sum over both sheets of integrand(xp, k, nu, W) * W on R_delta, or
    on the disk of ``rule(level)`` when given."""
    xp, w = disk_rule(pair.center, pair.radius - delta, pair.n, level) if rule is None else rule(level)
    total = 0.0
    for which, sign in (("upper", -1.0), ("lower", 1.0)):
        _, g, h = pair.graph(xp, which, 2)
        W = np.sqrt(1.0 + np.sum(g * g, axis=-1))
        first = np.eye(pair.n) + g[..., :, None] * g[..., None, :]
        k = pencil_eigvals(first, sign * h / W[..., None, None])
        nu = np.concatenate([-sign * g, np.full(W.shape + (1,), sign)], axis=-1) / W[..., None]
        total = total + np.sum(w * W * integrand(xp, k, nu, W))
    return float(total)


def _strip_term(pair, m):
    if pair.strip is None or pair.strip.height == 0:
        return 0.0
    n, R = pair.n, pair.radius
    k = np.array([1.0 / R] * (n - 1) + [0.0])
    return pair.strip.height * quadrature.sphere_area(n) * R ** (n - 1) * float(_sigma(k, m - 1))


def _is_local(pair, V):
    return isinstance(V, VerticalField) and V.vanishes_near_rim(pair, 0.0)


def _local_rule(pair, V):
    """Polar rule on the support disk of a compactly supported field."""
    return lambda lv: disk_rule(V.support_center, V.support_radius, pair.n, lv)


def _method(pair, method, V=None):
    """Integration route: 'surface', 'graph', or 'local' (the support disk
    of a field vanishing near the rim, where S(t) - S(0) lives)."""
    if method == "auto":
        if V is not None and _is_local(pair, V):
            return "local"
        return "surface" if getattr(pair, "surface", None) is not None else "graph"
    if method == "surface" and getattr(pair, "surface", None) is None:
        raise GeometryError("no global parametrization available; use the graph route")
    if method == "local" and not (V is not None and _is_local(pair, V)):
        raise GeometryError("the local route needs a field supported inside R")
    if method not in ("surface", "graph", "local"):
        raise ValueError(f"unknown integration method {method!r}")
    return method


def _levels(pair, method):
    if method == "surface":
        s = pair.surface
        return s.quadrature_start, s.quadrature_max[pair.n]
    return 16, {1: 4096, 2: 512, 3: 64}[pair.n]


def _first_agreement(evaluate, start, top, rtol, what):
    lv, prev = start, evaluate(start)
    while lv < top:
        lv *= 2
        cur = evaluate(lv)
        if abs(cur - prev) <= rtol * abs(cur):
            return lv
        prev = cur
    raise QuadratureError(f"{what} did not converge up to level {top}")


def weighted_area(pair, m=1, delta=0.0, method="auto", level=None, rtol=1e-11):
    """S_{m-1} = integral of sigma_{m-1} over M (m = 1 gives the area).

    The surface route integrates over all of M and ignores ``delta``; the
    graph route integrates both sheets over R_delta and adds the vertical
    strip. With ``level`` given, that single quadrature level is used;
    otherwise levels double until two agree to ``rtol``.
    """
    if not 1 <= m <= pair.n + 1:
        raise ValueError(f"m must lie in 1..{pair.n + 1}")
    method = _method(pair, method)
    if method == "surface":
        def evaluate(lv):
            return _surface_sum(pair.surface, lv, lambda X, k, nu: _sigma(k, m - 1))
    else:
        strip = _strip_term(pair, m)

        def evaluate(lv):
            return _graph_sum(pair, lv, delta, lambda xp, k, nu, W: _sigma(k, m - 1)) + strip
    if level is not None:
        return evaluate(level)
    start, top = _levels(pair, method)
    return quadrature.integrate_by_doubling(evaluate, start, top, rtol)[0]


def converged_level(pair, m=1, method="auto", rtol=1e-12):
    method = _method(pair, method)
    start, top = _levels(pair, method)
    return _first_agreement(lambda lv: weighted_area(pair, m, 0.0, method, lv), start, top, rtol, "weighted area")


def _area_at(pair, V, m, method):
    """(t, level) -> S_{m-1}(M(t)); on the local route only the part over
    the support disk, which carries all of the t-dependence."""
    if method == "local":
        rule = _local_rule(pair, V)
        return lambda t, lv: _graph_sum(deform(pair, V, t), lv, 0.0,
                                        lambda xp, k, nu, W: _sigma(k, m - 1), rule)
    return lambda t, lv: weighted_area(_surface_for(pair, V, t), m, 0.0, method, lv)


def _surface_for(pair, V, t):
    if isinstance(V, RadialField):
        if pair.surface is None:
            raise GeometryError("radial oracle needs a parametrized surface")
        return replace(pair, surface=DeformedSurface(pair.surface, V, t))
    return deform(pair, V, t)


def first_variation_fd(pair, V, m=1, h=None, method="auto", level=None, rtol=1e-6):
    """Central-difference derivative of S_{m-1}(t) at t = 0 with one
    Richardson step; returns (estimate, error estimate).

    All evaluations at one level share the quadrature rule, so its error
    largely cancels in the differences. Without ``level`` the level doubles
    (starting where S_{m-1}(0) has converged) until two successive slopes
    agree to ``rtol`` relative to max(|slope|, 1e-3 S(0)/diam).
    """
    method = _method(pair, method, V)
    if isinstance(V, RadialField) and method != "surface":
        raise GeometryError("radial oracle requires the surface route")
    h = 1e-4 * pair.diameter if h is None else float(h)
    area = _area_at(pair, V, m, method)

    def at(lv):
        return richardson_central(lambda t: area(t, lv), 0.0, h)

    if level is not None:
        return at(level)
    start, top = _levels(pair, method)
    lv = min(_first_agreement(lambda k: area(0.0, k), start, top, 1e-12, "weighted area"), top // 2)
    floor = 1e-3 * abs(area(0.0, lv)) / pair.diameter
    prev = at(lv)
    while lv < top:
        lv *= 2
        cur = at(lv)
        if abs(cur[0] - prev[0]) <= rtol * max(abs(cur[0]), floor):
            return cur
        prev = cur
    raise QuadratureError(f"finite-difference slope did not settle up to level {top}: {prev[0]!r}")


def first_variation_integral(pair, V, m=1, method="auto", level=None, rtol=1e-9, delta=0.0):
    """-m * integral over M of V.nu sigma_m (nu the inner unit normal)."""
    if not 1 <= m <= pair.n:
        raise ValueError(f"m must lie in 1..{pair.n}")
    method = _method(pair, method, V)
    rule = _local_rule(pair, V) if method == "local" else None
    if method == "surface":
        def evaluate(lv):
            return -m * _surface_sum(
                pair.surface, lv, lambda X, k, nu: np.sum(V.vector(X) * nu, axis=-1) * sigma_m(k, m))
    else:
        if isinstance(V, RadialField):
            raise GeometryError("radial oracle requires the surface route")

        def evaluate(lv):
            return -m * _graph_sum(
                pair, lv, delta,
                lambda xp, k, nu, W: V.v(xp) * nu[..., -1] * sigma_m(k, m), rule)
    if level is not None:
        return evaluate(level)
    start, top = _levels(pair, method)
    return quadrature.integrate_by_doubling(evaluate, start, top, rtol, atol=1e-13)[0]


def first_variation_scale(pair, V, m=1, method="auto", level=None):
    """m * integral of |V.nu sigma_m|, the natural size of the first variation."""
    method = _method(pair, method, V)
    level = level or _levels(pair, method)[0] * 4
    if method == "surface":
        return m * _surface_sum(pair.surface, level,
                                lambda X, k, nu: np.abs(np.sum(V.vector(X) * nu, axis=-1) * sigma_m(k, m)))
    rule = _local_rule(pair, V) if method == "local" else None
    return m * _graph_sum(pair, level, 0.0, lambda xp, k, nu, W: np.abs(V.v(xp) * nu[..., -1] * sigma_m(k, m)),
                          rule)


@dataclass
class DeformationTrace:
    """S_{m-1}(t) samples with the finite-difference and integral slopes."""

    m: int
    t: list
    values: list
    fd_derivative: float
    fd_error: float
    integral: float
    scale: float
    level: int
    field_label: str = ""
    residual: float = field(init=False)

    def __post_init__(self):
        self.residual = abs(self.fd_derivative - self.integral)

    @property
    def relative_residual(self):
        return self.residual / self.scale if self.scale > 0 else self.residual

    def rows(self):
        return [(t, s) for t, s in zip(self.t, self.values)]

    def to_dict(self):
        return {
            "m": self.m, "t": self.t, "values": self.values, "fd_derivative": self.fd_derivative,
            "fd_error": self.fd_error, "integral": self.integral, "residual": self.residual,
            "scale": self.scale, "relative_residual": self.relative_residual, "level": self.level,
            "field": self.field_label,
        }


def deformation_trace(pair, V, m=1, h=None, ts=None, method="auto"):
    method = _method(pair, method, V)
    h = 1e-4 * pair.diameter if h is None else float(h)
    ts = list(np.linspace(-5 * h, 5 * h, 11)) if ts is None else [float(t) for t in ts]
    area = _area_at(pair, V, m, method)
    if method == "local":
        # full value at t = 0 plus the t-dependent part over the support
        start, top = _levels(pair, "graph")
        level = _first_agreement(lambda k: area(0.0, k), start, top, 1e-12, "weighted area")
        base = weighted_area(pair, m) - area(0.0, level)
        values = [base + area(t, level) for t in ts]
    else:
        level = converged_level(pair, m, method)
        values = [area(t, level) for t in ts]
    fd, err = first_variation_fd(pair, V, m, h, method)
    integral = first_variation_integral(pair, V, m, method)
    scale = first_variation_scale(pair, V, m, method, level)
    label = getattr(V, "label", "")
    return DeformationTrace(m, [float(t) for t in ts], values, float(fd), float(err), float(integral),
                            float(scale), level, label)


# --------------------------------------------------------------------------
# asymmetry functional


def asymmetry_integrand(pair, xp):
    _, g1, _ = pair.graph(xp, "upper", 1)
    _, g2, _ = pair.graph(xp, "lower", 1)
    return monotone_gap(g1, -g2)


def asymmetry_functional(pair, delta=None, level=None, rtol=1e-10):
    """J = integral over R_delta of monotone_gap(grad f1, -grad f2).

    Returns (J, level used)."""
    delta = pair.default_delta() if delta is None else float(delta)

    def evaluate(lv):
        xp, w = disk_rule(pair.center, pair.radius - delta, pair.n, lv)
        return float(np.sum(w * asymmetry_integrand(pair, xp)))

    if level is not None:
        return evaluate(level), level
    start, top = _levels(pair, "graph")
    return quadrature.integrate_by_doubling(evaluate, start, top, rtol, atol=1e-14)


def cutoff_variation(pair, delta, order=3, level=None, rtol=1e-10):
    """Graph-route first variation (m = 1) of the field chi*(f1+f2):
    the quantity whose sign is compared with J."""
    V = cutoff_sum_field(pair, delta, order)
    breaks = (pair.radius - 2 * delta,)

    def evaluate(lv):
        xp, w = disk_rule(pair.center, pair.radius - delta, pair.n, lv, breaks)
        total = 0.0
        for which, sign in (("upper", -1.0), ("lower", 1.0)):
            _, g, h = pair.graph(xp, which, 2)
            W = np.sqrt(1.0 + np.sum(g * g, axis=-1))
            first = np.eye(pair.n) + g[..., :, None] * g[..., None, :]
            k = pencil_eigvals(first, sign * h / W[..., None, None])
            total = total + np.sum(w * V.v(xp) * sign * sigma_m(k, 1))
        return -float(total)

    if level is not None:
        return evaluate(level), level
    start, top = _levels(pair, "graph")
    return quadrature.integrate_by_doubling(evaluate, start, top, rtol, atol=1e-14)


__all__ = [
    "Potential", "potential_A", "gradient_A", "hessian_A", "monotone_gap",
    "VerticalField", "RadialField", "constant_field", "bump_field", "Cutoff", "build_cutoff",
    "cutoff_sum_field", "deform", "DeformedSurface", "DeformationError", "disk_rule", "weighted_area",
    "converged_level", "first_variation_fd", "first_variation_integral", "first_variation_scale",
    "DeformationTrace", "deformation_trace", "asymmetry_integrand", "asymmetry_functional",
    "cutoff_variation",
]
