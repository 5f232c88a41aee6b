"""Closed hypersurfaces in R^{n+1}: parametrized patches, surfaces of
revolution about the vertical axis, implicit surfaces, and the two-graph
decomposition M = M1 u M2 u M^ over the projected region R.

Coordinates split as X = (x', x_{n+1}); "vertical" always means the last
axis. Surfaces of revolution are described by the squared radius
q(z) = rho(z)^2 of their cross-sections, given symbolically so that every
derivative is exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import mpmath
import numpy as np
import sympy as sp

from . import quadrature
from ._fd import STEP1, STEP2, fd_hessian, fd_jacobian

ZETA = sp.Symbol("z", real=True)
_S = sp.Symbol("s", real=True)
MP_DPS = 50
DEFAULT_CONTAINS_RTOL = 1e-9


class GeometryError(ValueError):
    pass


class DegenerateImmersionError(GeometryError):
    pass


class GraphDecompositionError(GeometryError):
    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = None if witness is None else np.asarray(witness, dtype=float)


def cofactor_normal(dX):
    """Generalized cross product of the n columns of ``dX`` (..., n+1, n).

    The norm of the result is sqrt(det(dX^T dX)).
    """
    dim = dX.shape[-2]
    comps = [(-1) ** i * np.linalg.det(np.delete(dX, i, axis=-2)) for i in range(dim)]
    return np.stack(comps, axis=-1)


# --------------------------------------------------------------------------
# patches


@dataclass(frozen=True, eq=False)
class SurfacePatch:
    """A parametrized piece of hypersurface u -> X(u) over a parameter box.

    ``jacobian`` returns (..., n+1, n) and ``hessian`` (..., n+1, n, n); when
    absent, central differences with step eps^(1/3)*scale (first) and
    eps^(1/4)*scale (second) are used. ``orientation`` (+1/-1) selects the
    inner normal from the cofactor normal.
    """

    embed: Callable
    lower: tuple
    upper: tuple
    jacobian: Callable | None = None
    hessian: Callable | None = None
    orientation: int = 1
    scale: float = 1.0

    @property
    def dim(self):
        return len(self.lower)

    def point(self, u):
        return self.embed(np.asarray(u, dtype=float))

    def tangents(self, u):
        u = np.asarray(u, dtype=float)
        if self.jacobian is not None:
            return self.jacobian(u)
        return fd_jacobian(self.embed, u, STEP1 * self.scale)

    def second_derivatives(self, u):
        u = np.asarray(u, dtype=float)
        if self.hessian is not None:
            return self.hessian(u)
        return fd_hessian(self.embed, u, STEP2 * self.scale)

    def normal(self, u):
        dX = self.tangents(u)
        N = cofactor_normal(dX) * self.orientation
        norm = np.linalg.norm(N, axis=-1, keepdims=True)
        floor = 1e-13 * max(1.0, float(np.max(np.abs(dX)))) ** dX.shape[-1]
        if np.any(~(norm > floor)):
            raise DegenerateImmersionError("tangent frame is rank deficient")
        return N / norm


def inner_normal(patch: SurfacePatch, u):
    """Unit normal pointing into the enclosed open set G."""
    return patch.normal(u)


# --------------------------------------------------------------------------
# profiles and surfaces of revolution


def _lambdify(args, expr, module="numpy"):
    return sp.lambdify(args, expr, modules=module, cse=(module == "numpy"))


def _eval(fn, x):
    x = np.asarray(x, dtype=float)
    with np.errstate(all="ignore"):
        out = fn(x)
    return np.broadcast_to(np.asarray(out, dtype=float), x.shape).copy()


class Profile:
    """Squared cross-section radius q(z) >= 0 on [lo, hi] with simple zeros
    at both ends, in local (unit) coordinates.

    The meridian is parametrized by s in [0, pi] through
    z(s) = mid - half*cos(s) and rho(s) = half*sin(s)*sqrt(q/((z-lo)(hi-z))),
    which is smooth up to the poles.
    """

    def __init__(self, q, lo, hi):
        expr = sp.sympify(q, locals={"z": ZETA}) if isinstance(q, str) else q
        self.expr = sp.nsimplify(expr, rational=True)
        self.lo = sp.nsimplify(lo, rational=True)
        self.hi = sp.nsimplify(hi, rational=True)
        if not self.hi > self.lo:
            raise GeometryError("profile interval is empty")
        self.lo_f = float(self.lo)
        self.hi_f = float(self.hi)
        derivs = [self.expr] + [sp.diff(self.expr, ZETA, k) for k in range(1, 5)]
        self._q = [_lambdify(ZETA, d) for d in derivs]
        self._q_mp = [_lambdify(ZETA, d, "mpmath") for d in derivs[:2]]
        reduced = sp.cancel(sp.together(self.expr / ((ZETA - self.lo) * (self.hi - ZETA))))
        mid = (self.lo + self.hi) / 2
        half = (self.hi - self.lo) / 2
        zs = mid - half * sp.cos(_S)
        rs = half * sp.sin(_S) * sp.sqrt(reduced.subs(ZETA, zs))
        exprs = [zs, sp.diff(zs, _S), sp.diff(zs, _S, 2), rs, sp.diff(rs, _S), sp.diff(rs, _S, 2)]
        self._meridian = [_lambdify(_S, e) for e in exprs]

    def q(self, z, order=0):
        return _eval(self._q[order], z)

    def q_mp(self, z, order=0):
        return self._q_mp[order](mpmath.mpf(z) if not isinstance(z, mpmath.mpf) else z)

    def rho(self, z):
        return np.sqrt(np.maximum(self.q(z), 0.0))

    def meridian(self, s):
        """z, z', z'', rho, rho', rho'' as functions of the meridian parameter."""
        return [_eval(f, s) for f in self._meridian]

    @cached_property
    def critical_points(self):
        """Interior zeros of q' as (z, kind) with kind 'max' or 'min', refined
        by bisection in 50-digit arithmetic."""
        z = np.linspace(self.lo_f, self.hi_f, 8001)[1:-1]
        sgn = np.sign(np.nan_to_num(self.q(z, 1), nan=0.0, posinf=0.0, neginf=0.0))
        nz = np.flatnonzero(sgn != 0)
        out = []
        for a, b in zip(nz[:-1], nz[1:]):
            if sgn[a] != sgn[b]:
                out.append((float(self._refine_critical(z[a], z[b])), "max" if sgn[a] > 0 else "min"))
        return tuple(out)

    def _refine_critical(self, a, b):
        with mpmath.workdps(MP_DPS):
            lo, hi = mpmath.mpf(a), mpmath.mpf(b)
            slo = self._slope_sign(lo)
            for _ in range(200):
                mid = (lo + hi) / 2
                sm = self._slope_sign(mid)
                if sm == 0:
                    return mid
                if sm == slo:
                    lo = mid
                else:
                    hi = mid
            return (lo + hi) / 2

    def _slope_sign(self, z):
        try:
            return mpmath.sign(self._q_mp[1](z))
        except ZeroDivisionError:
            return 0

    @property
    def unimodal(self):
        cps = self.critical_points
        return len(cps) == 1 and cps[0][1] == "max"

    @cached_property
    def z_star(self):
        """Height of the widest cross-section (global maximum of q)."""
        maxima = [float(z) for z, kind in self.critical_points if kind == "max"]
        if not maxima:
            raise GeometryError("profile has no interior maximum")
        return max(maxima, key=lambda z: float(self.q(z)))

    @cached_property
    def rho_max(self):
        return float(self.rho(self.z_star))

    def validate(self):
        """Embeddedness of the closed surface: q > 0 inside, simple end zeros."""
        z = np.linspace(self.lo_f, self.hi_f, 8001)[1:-1]
        qv = self.q(z)
        if not np.all(qv > 0):
            bad = z[np.argmin(qv)]
            raise GeometryError(f"profile q(z) <= 0 at interior height z={bad:.6g}")
        top = float(np.max(qv))
        for zc, kind in self.critical_points:
            if kind == "min" and not float(self.q(zc)) > 1e-12 * top:
                raise GeometryError(f"profile q(z) <= 0 at interior height z={zc:.6g}")
        for end, sign in ((self.lo_f, 1.0), (self.hi_f, -1.0)):
            if abs(float(self.q(end))) > 1e-12:
                raise GeometryError(f"profile does not close at z={end}: q={float(self.q(end))}")
            if not sign * float(self.q(end, 1)) > 0:
                raise GeometryError(f"profile does not close transversally at z={end}")

    def branch_solve(self, r2, upper):
        """Heights z on the upper (z >= z*) or lower branch with q(z) = r2.

        Vectorized bisection; NaN where r2 exceeds the maximal q.
        """
        r2 = np.asarray(r2, dtype=float)
        zs = self.z_star
        qmax = float(self.q(zs))
        if upper:
            lo = np.full(r2.shape, zs)
            hi = np.full(r2.shape, self.hi_f)
        else:
            lo = np.full(r2.shape, self.lo_f)
            hi = np.full(r2.shape, zs)
        target = np.minimum(r2, qmax)
        for _ in range(64):
            mid = 0.5 * (lo + hi)
            above = self.q(mid) > target
            move_lo = above if upper else ~above
            lo = np.where(move_lo, mid, lo)
            hi = np.where(move_lo, hi, mid)
        z = 0.5 * (lo + hi)
        return np.where(r2 <= qmax * (1 + 1e-15), z, np.nan)

    def curvatures(self, z):
        """Closed-form (meridian, parallel) curvatures at heights z against
        the inner normal, from q and its derivatives."""
        q0, q1, q2 = self.q(z), self.q(z, 1), self.q(z, 2)
        root = np.sqrt(4.0 * q0 + q1 * q1)
        meridian = 2.0 * (q1 * q1 - 2.0 * q0 * q2) / root**3
        parallel = 2.0 / root
        return meridian, parallel


def _angle_frame(n, angles, sign=1.0):
    """omega(angles) on S^{n-1} with first and second angle derivatives."""
    if n == 1:
        shape = np.shape(angles)[:-1]
        om = np.full(shape + (1,), sign)
        return om, np.zeros(shape + (1, 0)), np.zeros(shape + (1, 0, 0))
    if n == 2:
        phi = angles[..., 0]
        c, s = np.cos(phi), np.sin(phi)
        om = np.stack([c, s], axis=-1)
        d = np.stack([-s, c], axis=-1)[..., None]
        dd = (-om)[..., None, None]
        return om, d, dd
    if n == 3:
        th, ph = angles[..., 0], angles[..., 1]
        st, ct, sp_, cp = np.sin(th), np.cos(th), np.sin(ph), np.cos(ph)
        z0 = np.zeros_like(th)
        om = np.stack([st * cp, st * sp_, ct], axis=-1)
        d_th = np.stack([ct * cp, ct * sp_, -st], axis=-1)
        d_ph = np.stack([-st * sp_, st * cp, z0], axis=-1)
        dd_tt = -om
        dd_tp = np.stack([-ct * sp_, ct * cp, z0], axis=-1)
        dd_pp = np.stack([-st * cp, -st * sp_, z0], axis=-1)
        d = np.stack([d_th, d_ph], axis=-1)
        dd = np.stack(
            [np.stack([dd_tt, dd_tp], axis=-1), np.stack([dd_tp, dd_pp], axis=-1)], axis=-1
        )
        return om, d, dd
    raise GeometryError(f"surfaces of revolution implemented for n <= 3, got n={n}")


@dataclass(frozen=True)
class VerticalStrip:
    """The vertical part M^ over the boundary of R: heights [lower, upper]."""

    lower: float
    upper: float

    @property
    def height(self):
        return self.upper - self.lower


class RevolutionSurface:
    """Closed hypersurface of revolution about the vertical axis in R^{n+1}.

    World coordinates are ``center + scale * local`` where the local
    surface is |x'| = rho(z) for z in the profile interval.
    """

    def __init__(self, profile: Profile, n=2, center=None, scale=1.0, name="revolution"):
        if n not in (1, 2, 3):
            raise GeometryError(f"n must be 1, 2 or 3, got {n}")
        if not scale > 0:
            raise GeometryError("scale must be positive")
        self.profile = profile
        self.n = int(n)
        self.center = np.zeros(n + 1) if center is None else np.asarray(center, dtype=float)
        if self.center.shape != (n + 1,):
            raise GeometryError(f"center must have {n + 1} coordinates")
        self.scale = float(scale)
        self.name = name

    # -- basic geometry ------------------------------------------------------

    @property
    def axis(self):
        return self.center[: self.n]

    def to_local_z(self, z):
        return (np.asarray(z, dtype=float) - self.center[self.n]) / self.scale

    def to_world_z(self, zeta):
        return self.center[self.n] + self.scale * np.asarray(zeta, dtype=float)

    @property
    def z_range(self):
        return float(self.to_world_z(self.profile.lo_f)), float(self.to_world_z(self.profile.hi_f))

    @property
    def rho_max(self):
        return self.scale * self.profile.rho_max

    @property
    def z_star(self):
        return float(self.to_world_z(self.profile.z_star))

    @property
    def diameter(self):
        lo, hi = self.z_range
        return max(hi - lo, 2.0 * self.rho_max)

    def radius_at(self, z):
        return self.scale * self.profile.rho(self.to_local_z(z))

    def depth(self, X):
        """Signed horizontal depth: positive inside G, zero on M."""
        X = np.asarray(X, dtype=float)
        zeta = self.to_local_z(X[..., self.n])
        r = np.linalg.norm(X[..., : self.n] - self.axis, axis=-1)
        inside_band = (zeta >= self.profile.lo_f) & (zeta <= self.profile.hi_f)
        zc = np.clip(zeta, self.profile.lo_f, self.profile.hi_f)
        d = self.scale * self.profile.rho(zc) - r
        gap = self.scale * np.maximum(self.profile.lo_f - zeta, zeta - self.profile.hi_f)
        return np.where(inside_band, d, -np.hypot(np.maximum(-d, 0.0), gap))

    def contains(self, X, tol=None):
        tol = DEFAULT_CONTAINS_RTOL * self.diameter if tol is None else tol
        return self.depth(X) >= -tol

    @property
    def horizontal_normal_heights(self):
        """World heights where the outer normal is horizontal, with kind."""
        return [(float(self.to_world_z(float(z))), kind) for z, kind in self.profile.critical_points]

    def curvatures_at_height(self, z):
        """Closed-form principal curvatures at world heights, shape (..., n):
        the meridian curvature followed by n-1 copies of the parallel one."""
        km, kp = self.profile.curvatures(self.to_local_z(z))
        cols = [km] + [kp] * (self.n - 1)
        return np.stack(cols, axis=-1) / self.scale

    def centroid(self):
        """Centroid of the enclosed body (on the axis)."""
        zl, wl = quadrature.gauss_legendre(self.profile.lo_f, self.profile.hi_f, 200)
        vol = self.profile.rho(zl) ** self.n
        zc = np.sum(wl * vol * zl) / np.sum(wl * vol)
        return np.concatenate([self.axis, [float(self.to_world_z(zc))]])

    # -- parametrization -----------------------------------------------------

    def _patch(self, sign=1.0):
        n, lam, c = self.n, self.scale, self.center
        prof = self.profile

        def parts(u):
            s = u[..., 0]
            zz, dz, ddz, r, dr, ddr = prof.meridian(s)
            om, dom, ddom = _angle_frame(n, u[..., 1:], sign)
            return zz, dz, ddz, r, dr, ddr, om, dom, ddom

        def embed(u):
            u = np.asarray(u, dtype=float)
            zz, _, _, r, _, _, om, _, _ = parts(u)
            X = np.concatenate([r[..., None] * om, zz[..., None]], axis=-1)
            return c + lam * X

        def jac(u):
            u = np.asarray(u, dtype=float)
            zz, dz, _, r, dr, _, om, dom, _ = parts(u)
            col_s = np.concatenate([dr[..., None] * om, dz[..., None]], axis=-1)
            cols_a = np.concatenate(
                [r[..., None, None] * dom, np.zeros(dom.shape[:-2] + (1, dom.shape[-1]))], axis=-2
            )
            return lam * np.concatenate([col_s[..., None], cols_a], axis=-1)

        def hess(u):
            u = np.asarray(u, dtype=float)
            zz, dz, ddz, r, dr, ddr, om, dom, ddom = parts(u)
            d = n
            H = np.zeros(u.shape[:-1] + (n + 1, d, d))
            H[..., :n, 0, 0] = ddr[..., None] * om
            H[..., n, 0, 0] = ddz
            if d > 1:
                H[..., :n, 0, 1:] = dr[..., None, None] * dom
                H[..., :n, 1:, 0] = dr[..., None, None] * dom
                H[..., :n, 1:, 1:] = r[..., None, None, None] * ddom
            return lam * H

        lower = [0.0] + ([0.0] if n == 2 else [0.0, 0.0] if n == 3 else [])
        upper = [math.pi] + ([2 * math.pi] if n == 2 else [math.pi, 2 * math.pi] if n == 3 else [])
        SurfacePatch(embed, tuple(lower), tuple(upper), jac, hess, 1, lam)
        u_mid = np.array([0.5 * (a + b) for a, b in zip(lower, upper)])
        N = cofactor_normal(jac(u_mid))
        radial = embed(u_mid)[: n] - c[:n]
        orient = -1 if float(np.dot(N[:n], radial)) > 0 else 1
        return SurfacePatch(embed, tuple(lower), tuple(upper), jac, hess, orient, lam)

    @cached_property
    def patches(self):
        if self.n == 1:
            return (self._patch(1.0), self._patch(-1.0))
        return (self._patch(),)

    def quadrature(self, level):
        """List of (patch, parameter nodes, weights) covering M once.

        Gauss-Legendre in the meridian parameter (and the polar angle when
        n = 3), trapezoid in the periodic azimuth.
        """
        s, ws = quadrature.gauss_legendre(0.0, math.pi, level)
        out = []
        for patch in self.patches:
            if self.n == 1:
                u, w = s[:, None], ws
            elif self.n == 2:
                phi, wp = quadrature.periodic_trapezoid(2 * level)
                S, P = np.meshgrid(s, phi, indexing="ij")
                u = np.stack([S, P], axis=-1).reshape(-1, 2)
                w = np.outer(ws, wp).ravel()
            else:
                th, wt = quadrature.gauss_legendre(0.0, math.pi, level)
                phi, wp = quadrature.periodic_trapezoid(2 * level)
                S, T, P = np.meshgrid(s, th, phi, indexing="ij")
                u = np.stack([S, T, P], axis=-1).reshape(-1, 3)
                w = (ws[:, None, None] * wt[None, :, None] * wp[None, None, :]).ravel()
            out.append((patch, u, w))
        return out

    quadrature_start = 16
    quadrature_max = {1: 4096, 2: 512, 3: 64}

    def direction_samples(self, grid):
        if self.n == 1:
            return np.array([[1.0], [-1.0]])
        if self.n == 2:
            phi = 2 * math.pi * np.arange(grid) / grid
            return np.stack([np.cos(phi), np.sin(phi)], axis=-1)
        dirs, _ = quadrature.sphere_rule(3, max(2, grid // 2))
        return dirs

    def sample_points(self, grid):
        """Points of M on a meridian x direction grid (poles included)."""
        s = np.linspace(0.0, math.pi, grid)
        zz, _, _, r, _, _ = self.profile.meridian(s)
        r = np.where(np.isfinite(r), r, 0.0)
        r[[0, -1]] = 0.0
        zz[[0, -1]] = [self.profile.lo_f, self.profile.hi_f]
        dirs = self.direction_samples(grid)
        Xp = self.axis + self.scale * r[:, None, None] * dirs[None, :, :]
        Z = np.broadcast_to(self.to_world_z(zz)[:, None, None], Xp.shape[:-1] + (1,))
        return np.concatenate([Xp, Z], axis=-1).reshape(-1, self.n + 1)

    def sample_curvatures(self, grid):
        """Closed-form principal curvatures along the meridian (they do not
        depend on the direction)."""
        s = np.linspace(0.0, math.pi, grid)[1:-1]
        zz, *_ = self.profile.meridian(s)
        z = np.concatenate([[self.profile.lo_f + 1e-9], zz, [self.profile.hi_f - 1e-9]])
        return self.to_world_z(z), self.curvatures_at_height(self.to_world_z(z))

    def tangency_points(self, grid):
        """Points of M with horizontal outer normal and those normals."""
        pts, normals, kinds = [], [], []
        dirs = self.direction_samples(grid)
        for z, kind in self.horizontal_normal_heights:
            rho = float(self.radius_at(z))
            for d in dirs:
                pts.append(np.concatenate([self.axis + rho * d, [z]]))
                normals.append(d)
                kinds.append(kind)
        return np.array(pts).reshape(-1, self.n + 1), np.array(normals).reshape(-1, self.n), kinds


# --------------------------------------------------------------------------
# implicit surfaces (used for brute-force decomposition checks)


@dataclass(frozen=True, eq=False)
class ImplicitSurface:
    """Level set {F = 0} with F < 0 in G, inside a bounding box.

    ``projection`` = (center', radius) declares pi(M) to be a ball, which is
    needed to build a graph pair from the surface.
    """

    n: int
    level: Callable
    lower: tuple
    upper: tuple
    gradient: Callable | None = None
    projection: tuple | None = None
    name: str = "implicit"

    @property
    def diameter(self):
        return float(np.linalg.norm(np.subtract(self.upper, self.lower)))

    def depth(self, X):
        X = np.asarray(X, dtype=float)
        g = self._grad(X)
        return -self.level(X) / np.maximum(np.linalg.norm(g, axis=-1), 1e-300)

    def contains(self, X, tol=None):
        tol = DEFAULT_CONTAINS_RTOL * self.diameter if tol is None else tol
        return self.depth(X) >= -tol

    def _grad(self, X):
        if self.gradient is not None:
            return self.gradient(X)
        return fd_jacobian(lambda Y: self.level(Y)[..., None], X, STEP1 * self.diameter)[..., 0, :]


def horizontal_torus(major=1.0, minor=0.25, n=2):
    """Torus of revolution about the horizontal x_1 axis (n = 2)."""
    if n != 2:
        raise GeometryError("the torus family is defined for n = 2")

    def level(X):
        X = np.asarray(X, dtype=float)
        rho = np.hypot(X[..., 1], X[..., 2])
        return (rho - major) ** 2 + X[..., 0] ** 2 - minor**2

    def grad(X):
        X = np.asarray(X, dtype=float)
        rho = np.maximum(np.hypot(X[..., 1], X[..., 2]), 1e-300)
        f = 2 * (rho - major) / rho
        return np.stack([2 * X[..., 0], f * X[..., 1], f * X[..., 2]], axis=-1)

    b = major + minor
    return ImplicitSurface(2, level, (-minor, -b, -b), (minor, b, b), grad, None, "torus")


def implicit_ellipsoid(axes, center=None):
    """Axis-aligned ellipsoid sum((x_i - c_i)/a_i)^2 = 1 as an implicit surface.

    The horizontal semi-axes must agree so that pi(M) is a ball.
    """
    axes = np.asarray(axes, dtype=float)
    n = axes.size - 1
    c = np.zeros(n + 1) if center is None else np.asarray(center, dtype=float)
    if not np.allclose(axes[:n], axes[0]):
        raise GeometryError("horizontal semi-axes must agree")

    def level(X):
        return np.sum(((np.asarray(X) - c) / axes) ** 2, axis=-1) - 1.0

    def grad(X):
        return 2.0 * (np.asarray(X) - c) / axes**2

    return ImplicitSurface(
        n, level, tuple(c - axes), tuple(c + axes), grad, (c[:n], float(axes[0])), "implicit-ellipsoid"
    )


# --------------------------------------------------------------------------
# graph sheets


class RevolutionSheet:
    """Upper (f1) or lower (f2) height function of a unimodal surface of
    revolution, with analytic gradient and Hessian."""

    def __init__(self, surface: RevolutionSurface, upper: bool):
        self.surface = surface
        self.upper = upper

    def evaluate(self, xp, order=2):
        s = self.surface
        prof, lam = s.profile, s.scale
        xp = np.asarray(xp, dtype=float)
        d = xp - s.axis
        dist = np.linalg.norm(d, axis=-1)
        r = dist / lam
        zeta = prof.branch_solve(r * r, self.upper)
        f = s.center[s.n] + lam * zeta
        if order == 0:
            return f, None, None
        q1 = prof.q(zeta, 1)
        with np.errstate(divide="ignore", invalid="ignore"):
            a = 2.0 / q1
        grad = a[..., None] * d / lam
        if order == 1:
            return f, grad, None
        q2 = prof.q(zeta, 2)
        with np.errstate(divide="ignore", invalid="ignore"):
            fpp = a - 4.0 * r * r * q2 / q1**3
            xhat = np.where(dist[..., None] > 0, d / dist[..., None], 0.0)
        eye = np.eye(s.n)
        outer = xhat[..., :, None] * xhat[..., None, :]
        hess = ((fpp - a)[..., None, None] * outer + a[..., None, None] * eye) / lam
        return f, grad, hess


class FunctionSheet:
    """Height function from callables; missing derivatives by differences."""

    def __init__(self, f, grad=None, hess=None, scale=1.0):
        self.f, self.grad, self.hess, self.scale = f, grad, hess, scale

    def _grad(self, xp):
        if self.grad is not None:
            return np.asarray(self.grad(xp), dtype=float)
        return fd_jacobian(lambda y: np.asarray(self.f(y))[..., None], xp, STEP1 * self.scale)[..., 0, :]

    def evaluate(self, xp, order=2):
        xp = np.asarray(xp, dtype=float)
        f = np.asarray(self.f(xp), dtype=float)
        if order == 0:
            return f, None, None
        g = self._grad(xp)
        if order == 1:
            return f, g, None
        if self.hess is not None:
            h = np.asarray(self.hess(xp), dtype=float)
        else:
            h = fd_jacobian(self._grad, xp, STEP1 * self.scale)
            h = 0.5 * (h + np.swapaxes(h, -1, -2))
        return f, g, h


class ImplicitSheet:
    """Extreme root of F(x', .) along vertical lines; gradient by implicit
    differentiation, Hessian by differences of the gradient."""

    def __init__(self, surface: ImplicitSurface, upper: bool, samples=257):
        self.surface, self.upper, self.samples = surface, upper, samples

    def _height(self, xp):
        s = self.surface
        n = s.n
        xp = np.asarray(xp, dtype=float)
        zs = np.linspace(s.lower[n], s.upper[n], self.samples)
        flat = xp.reshape(-1, n)
        X = np.concatenate(
            [np.repeat(flat[:, None, :], zs.size, axis=1), np.broadcast_to(zs[None, :, None], (flat.shape[0], zs.size, 1))],
            axis=-1,
        )
        F = s.level(X)
        inside = F < 0
        out = np.full(flat.shape[0], np.nan)
        for i in range(flat.shape[0]):
            idx = np.flatnonzero(inside[i])
            if idx.size == 0:
                continue
            j = idx[-1] if self.upper else idx[0]
            a, b = (zs[j], zs[min(j + 1, zs.size - 1)]) if self.upper else (zs[max(j - 1, 0)], zs[j])
            fa = lambda z: float(s.level(np.concatenate([flat[i], [z]])))  # noqa: E731
            for _ in range(80):
                mid = 0.5 * (a + b)
                if (fa(mid) < 0) == (fa(a) < 0):
                    a = mid
                else:
                    b = mid
            out[i] = 0.5 * (a + b)
        return out.reshape(xp.shape[:-1])

    def _grad(self, xp):
        xp = np.asarray(xp, dtype=float)
        f = self._height(xp)
        X = np.concatenate([xp, f[..., None]], axis=-1)
        g = self.surface._grad(X)
        return -g[..., :-1] / g[..., -1:]

    def evaluate(self, xp, order=2):
        xp = np.asarray(xp, dtype=float)
        f = self._height(xp)
        if order == 0:
            return f, None, None
        g = self._grad(xp)
        if order == 1:
            return f, g, None
        h = fd_jacobian(self._grad, xp, STEP1 * self.surface.diameter)
        return f, g, 0.5 * (h + np.swapaxes(h, -1, -2))


# --------------------------------------------------------------------------
# graph pairs


@dataclass(frozen=True, eq=False)
class ClosedGraphPair:
    """Closed surface as graphs f1 > f2 over the ball R = B(center, radius)
    in R^n plus the vertical strip over the boundary of R.

    ``surface`` optionally carries a global parametrization used for
    quadrature over all of M; without it integrals run over R_delta plus the
    analytic strip contribution.
    """

    n: int
    radius: float
    upper: object
    lower: object
    center: np.ndarray = None
    strip: VerticalStrip | None = None
    s_prime_radius: float | None = None
    surface: object = None
    name: str = "pair"

    def __post_init__(self):
        c = np.zeros(self.n) if self.center is None else np.asarray(self.center, dtype=float)
        object.__setattr__(self, "center", c)
        if not self.radius > 0:
            raise GeometryError("region radius must be positive")

    @classmethod
    def from_functions(cls, n, radius, f1, f2, grad1=None, grad2=None, hess1=None, hess2=None,
                       center=None, strip=None, s_prime_radius=None, name="pair"):
        scale = 2.0 * radius
        return cls(n, radius, FunctionSheet(f1, grad1, hess1, scale), FunctionSheet(f2, grad2, hess2, scale),
                   center, strip, s_prime_radius, None, name)

    @property
    def sheets(self):
        return (self.upper, self.lower)

    def sheet(self, which):
        return self.upper if which in (0, "upper") else self.lower

    def graph(self, xp, which="upper", order=2):
        sheet = self.upper if which in ("upper", 0) else self.lower
        return sheet.evaluate(xp, order)

    def heights(self, xp):
        return self.upper.evaluate(xp, 0)[0], self.lower.evaluate(xp, 0)[0]

    @property
    def diameter(self):
        if self.surface is not None:
            return float(self.surface.diameter)
        xp = self.interior_grid(9, 0.0)[0]
        f1, f2 = self.heights(xp)
        return max(2.0 * self.radius, float(np.nanmax(f1) - np.nanmin(f2)))

    def default_delta(self):
        return 1e-3 * 2.0 * self.radius

    def interior_grid(self, grid, delta=None):
        """Cartesian grid points of R_delta in grid-index (C) order.

        Returns (points, indices). An odd ``grid`` makes every point survive
        the refinement grid -> 2*grid - 1.
        """
        delta = self.default_delta() if delta is None else delta
        axis = np.linspace(-self.radius, self.radius, grid)
        mesh = np.meshgrid(*([axis] * self.n), indexing="ij")
        pts = np.stack(mesh, axis=-1).reshape(-1, self.n)
        idx = np.stack(np.meshgrid(*([np.arange(grid)] * self.n), indexing="ij"), axis=-1).reshape(-1, self.n)
        keep = np.linalg.norm(pts, axis=-1) <= self.radius - delta + 1e-15 * self.radius
        return pts[keep] + self.center, idx[keep]

    def graph_curvatures(self, xp, which="upper"):
        """Principal curvatures of a sheet against the inner normal:
        downward on the upper graph, upward on the lower one."""
        from .curvature import pencil_eigvals

        _, g, h = self.graph(xp, which, 2)
        W = np.sqrt(1.0 + np.sum(g * g, axis=-1))
        first = np.eye(self.n) + g[..., :, None] * g[..., None, :]
        sign = -1.0 if which in ("upper", 0) else 1.0
        second = sign * h / W[..., None, None]
        return pencil_eigvals(first, second)

    def contains(self, X, tol=None):
        return contains(self, X, tol)


def contains(pair: ClosedGraphPair, X, tol=None):
    """Membership in the closure of G: x' in R and f2 - tol <= x_{n+1} <= f1 + tol."""
    X = np.asarray(X, dtype=float)
    tol = DEFAULT_CONTAINS_RTOL * pair.diameter if tol is None else tol
    xp = X[..., : pair.n] - pair.center
    dist = np.linalg.norm(xp, axis=-1)
    in_r = dist <= pair.radius + tol
    scale = np.where(dist > pair.radius, pair.radius / np.maximum(dist, 1e-300), 1.0)
    xc = xp * scale[..., None] + pair.center
    f1, f2 = pair.heights(xc)
    z = X[..., pair.n]
    lo, hi = f2, f1
    if pair.strip is not None:
        on_rim = dist >= pair.radius - tol
        lo = np.where(on_rim, np.minimum(lo, pair.strip.lower), lo)
        hi = np.where(on_rim, np.maximum(hi, pair.strip.upper), hi)
    return in_r & (z >= lo - tol) & (z <= hi + tol)


def graph_patch(pair: ClosedGraphPair, which="upper"):
    """Patch x' -> (x', f(x')) over the bounding box of R, inner-oriented."""
    n = pair.n

    def embed(u):
        f = pair.graph(u, which, 0)[0]
        return np.concatenate([u, f[..., None]], axis=-1)

    def jac(u):
        g = pair.graph(u, which, 1)[1]
        eye = np.broadcast_to(np.eye(n), g.shape[:-1] + (n, n))
        return np.concatenate([eye, g[..., None, :]], axis=-2)

    def hess(u):
        h = pair.graph(u, which, 2)[2]
        z = np.zeros(h.shape[:-2] + (n, n, n))
        return np.concatenate([z, h[..., None, :, :]], axis=-3)

    lower = tuple(pair.center - pair.radius)
    upper = tuple(pair.center + pair.radius)
    want = -1.0 if which in ("upper", 0) else 1.0
    N = cofactor_normal(jac(pair.center))
    orient = 1 if np.sign(N[-1]) == want else -1
    return SurfacePatch(embed, lower, upper, jac, hess, orient, 2.0 * pair.radius)


def count_sheets(surface, xp, samples=2049):
    """Number of crossings of M by the vertical line through each x'."""
    n = surface.n
    if isinstance(surface, RevolutionSurface):
        zlo, zhi = surface.z_range
    else:
        zlo, zhi = surface.lower[n], surface.upper[n]
    pad = 1e-3 * (zhi - zlo)
    zs = np.linspace(zlo - pad, zhi + pad, samples)
    xp = np.atleast_2d(np.asarray(xp, dtype=float))
    out = np.empty(xp.shape[0], dtype=int)
    chunk = max(1, 2**20 // samples)
    for start in range(0, xp.shape[0], chunk):
        block = xp[start:start + chunk]
        X = np.concatenate(
            [np.repeat(block[:, None, :], samples, axis=1),
             np.broadcast_to(zs[None, :, None], (block.shape[0], samples, 1))],
            axis=-1,
        )
        inside = surface.depth(X) > 0
        out[start:start + chunk] = np.sum(inside[:, 1:] != inside[:, :-1], axis=-1)
    return out


def decompose_graphs(surface, grid=None, samples=2049) -> ClosedGraphPair:
    """Split a closed surface into upper/lower graphs over R = pi(M).

    A brute-force crossing count along vertical lines over a grid of x'
    rejects surfaces with more than two sheets, reporting the first offending
    x' as witness.
    """
    if isinstance(surface, ClosedGraphPair):
        return surface
    n = surface.n
    if grid is None:
        grid = 17 if n == 3 else 33
    if isinstance(surface, RevolutionSurface):
        lo = surface.axis - surface.rho_max
        hi = surface.axis + surface.rho_max
    else:
        lo = np.asarray(surface.lower[:n])
        hi = np.asarray(surface.upper[:n])
    axes = [np.linspace(a, b, grid) for a, b in zip(lo, hi)]
    xp = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n)
    counts = count_sheets(surface, xp, samples)
    bad = np.flatnonzero(counts > 2)
    if bad.size:
        w = xp[bad[0]]
        raise GraphDecompositionError(
            f"{surface.name}: vertical line through x'={np.round(w, 6).tolist()} crosses M "
            f"{int(counts[bad[0]])} times", witness=w)
    if isinstance(surface, RevolutionSurface):
        if not surface.profile.unimodal:
            mins = [z for z, k in surface.horizontal_normal_heights if k == "min"]
            z = mins[0] if mins else surface.z_star
            r = 0.5 * (float(surface.radius_at(z)) + surface.rho_max)
            w = surface.axis.copy()
            w[0] += r
            raise GraphDecompositionError(
                f"{surface.name}: profile is not unimodal; more than two sheets near x'={w.tolist()}",
                witness=w)
        zs = surface.z_star
        return ClosedGraphPair(
            n, surface.rho_max, RevolutionSheet(surface, True), RevolutionSheet(surface, False),
            surface.axis.copy(), VerticalStrip(zs, zs), None, surface, surface.name)
    if surface.projection is None:
        raise GraphDecompositionError(f"{surface.name}: projection region must be declared as a ball")
    c, radius = surface.projection
    return ClosedGraphPair(
        n, float(radius), ImplicitSheet(surface, True), ImplicitSheet(surface, False),
        np.asarray(c, dtype=float), None, None, None, surface.name)
