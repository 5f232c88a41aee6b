"""Hypothesis checkers: the curvature ordering along vertical segments,
Conditions S, S' and T, and the necessary conditions for a monotone
Lipschitz extension of the mean curvature.

Every checker accepts either a :class:`ClosedGraphPair` or a closed
surface; surfaces are decomposed on demand where two graphs are needed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath
import numpy as np

from .curvature import CurvatureFunctionSpec, mean_curvature
from .geometry import (
    MP_DPS,
    ClosedGraphPair,
    GeometryError,
    ImplicitSurface,
    RevolutionSurface,
    contains,
    decompose_graphs,
)
from .report import CheckReport

HYPOTHESIS_RTOL = 1e-8
SEGMENT_SAMPLES = 33
MAX_WITNESSES = 50


@dataclass(frozen=True)
class VerticalPair:
    """Vertically aligned points (x', A) and (x', B) of M with A <= B."""

    xp: np.ndarray
    A: float
    B: float
    segment_in_closure: bool
    index: tuple


def as_pair(obj) -> ClosedGraphPair:
    return obj if isinstance(obj, ClosedGraphPair) else decompose_graphs(obj)


def _surface(obj):
    if isinstance(obj, ClosedGraphPair):
        return obj.surface
    return obj


def _diameter(obj):
    return float(obj.diameter)


def as_curvature_spec(c):
    if c is None:
        return CurvatureFunctionSpec("mean")
    if isinstance(c, str):
        return CurvatureFunctionSpec.parse(c)
    return c


# --------------------------------------------------------------------------
# vertical pairs and the curvature ordering


def _segment_flags(pair, xp, f1, f2, samples, tol):
    theta = (np.arange(1, samples + 1) / (samples + 1))[None, :]
    z = f2[:, None] + theta * (f1 - f2)[:, None]
    X = np.concatenate([np.repeat(xp[:, None, :], samples, axis=1), z[..., None]], axis=-1)
    return np.all(contains(pair, X, tol), axis=-1)


def enumerate_vertical_pairs(pair, grid=21, delta=None, segment_samples=SEGMENT_SAMPLES, tol=None):
    """Vertical pairs (x', f2(x')), (x', f1(x')) over the grid points of R_delta."""
    pair = as_pair(pair)
    xp, idx = pair.interior_grid(grid, delta)
    f1, f2 = pair.heights(xp)
    flags = _segment_flags(pair, xp, f1, f2, segment_samples, tol)
    return [
        VerticalPair(xp[i].copy(), float(f2[i]), float(f1[i]), bool(flags[i]), tuple(int(j) for j in idx[i]))
        for i in range(xp.shape[0])
    ]


def sheet_values(pair, c, xp):
    """Curvature function c evaluated on both graphs at the given x'."""
    c = as_curvature_spec(c)
    c.validate(pair.n)
    with np.errstate(all="ignore"):
        k1 = pair.graph_curvatures(xp, "upper")
        k2 = pair.graph_curvatures(xp, "lower")
        v1, v2 = np.asarray(c(k1), dtype=float), np.asarray(c(k2), dtype=float)
    return k1, k2, v1, v2


def check_main_assumption(pair, c=None, grid=21, tol=None, delta=None, segment_samples=SEGMENT_SAMPLES,
                          rtol=HYPOTHESIS_RTOL):
    """Curvature ordering c(x', f1) <= c(x', f2) + tol over vertical pairs
    whose connecting segment lies in the closed body.

    Without ``tol`` the tolerance is ``rtol`` times the largest |c| seen.
    """
    pair = as_pair(pair)
    c = as_curvature_spec(c)
    xp, idx = pair.interior_grid(grid, delta)
    f1, f2 = pair.heights(xp)
    inside = _segment_flags(pair, xp, f1, f2, segment_samples, None)
    _, _, top, bottom = sheet_values(pair, c, xp)
    ok = np.isfinite(top) & np.isfinite(bottom)
    scale = float(np.max(np.abs(np.concatenate([top[ok], bottom[ok]])), initial=0.0))
    tol = rtol * max(scale, 1e-300) if tol is None else float(tol)
    resid = top - bottom
    active = ok & inside
    bad = np.flatnonzero(active & (resid > tol))
    witnesses = [
        {
            "index": idx[i].tolist(),
            "x_prime": xp[i].tolist(),
            "lower_point": [*xp[i].tolist(), float(f2[i])],
            "upper_point": [*xp[i].tolist(), float(f1[i])],
            "c_upper": float(top[i]),
            "c_lower": float(bottom[i]),
            "residual": float(resid[i]),
        }
        for i in bad[:MAX_WITNESSES]
    ]
    worst = float(np.max(resid[active])) if np.any(active) else 0.0
    equality = float(np.max(np.abs(resid[active]))) if np.any(active) else 0.0
    return CheckReport(
        name=f"main-assumption[{c.name}]",
        passed=bad.size == 0,
        witnesses=witnesses,
        residuals=[worst, equality],
        tolerance=tol,
        samples=int(np.sum(active)),
        params={
            "grid": grid,
            "delta": pair.default_delta() if delta is None else delta,
            "curvature": c.name,
            "violations": int(bad.size),
            "skipped": int(np.sum(~ok)),
            "segments_outside_closure": int(np.sum(ok & ~inside)),
            "max_upper_minus_lower": worst,
            "max_abs_difference": equality,
        },
        notes=["residuals = [max c(upper)-c(lower), max |c(upper)-c(lower)|]"],
    )


# --------------------------------------------------------------------------
# Conditions S and S'


def _tangencies(obj, grid):
    """Points of M with horizontal outer normal: (points, normals', kinds)."""
    surf = _surface(obj)
    if isinstance(surf, RevolutionSurface):
        return surf.tangency_points(grid)
    if isinstance(obj, ClosedGraphPair):
        n = obj.n
        dirs = _directions(n, grid)
        if obj.strip is not None:
            heights = [obj.strip.lower, obj.strip.upper]
        else:
            rim = obj.center + (obj.radius * (1 - 1e-9)) * dirs
            f1, f2 = obj.heights(rim)
            heights = None
        pts, normals = [], []
        for j, d in enumerate(dirs):
            x = obj.center + obj.radius * d
            hs = heights if heights is not None else [f2[j], f1[j]]
            for h in sorted(set(float(v) for v in hs)):
                pts.append(np.concatenate([x, [h]]))
                normals.append(d)
        return np.array(pts), np.array(normals), ["rim"] * len(pts)
    raise GeometryError("tangency search needs a surface of revolution or a graph pair")


def _directions(n, grid):
    from .quadrature import sphere_rule

    if n == 1:
        return np.array([[1.0], [-1.0]])
    if n == 2:
        phi = 2 * math.pi * np.arange(grid) / grid
        return np.stack([np.cos(phi), np.sin(phi)], axis=-1)
    return sphere_rule(n, max(2, grid // 2))[0]


def surface_samples(obj, grid):
    """Sample points of M, shape (N, n+1)."""
    surf = _surface(obj)
    if isinstance(surf, RevolutionSurface):
        return surf.sample_points(grid)
    pair = as_pair(obj)
    xp, _ = pair.interior_grid(grid, 0.0)
    f1, f2 = pair.heights(xp)
    return np.concatenate([np.c_[xp, f1], np.c_[xp, f2]], axis=0)


def check_condition_S(obj, grid=41, tol=None):
    """M lies on one side of every vertical tangent hyperplane."""
    diam = _diameter(obj)
    tol = HYPOTHESIS_RTOL * diam if tol is None else float(tol)
    pts, normals, kinds = _tangencies(obj, grid)
    if len(pts) == 0:
        return CheckReport("condition-S", True, tolerance=tol, notes=["no horizontal-normal points: vacuous"])
    X = surface_samples(obj, grid)
    n = X.shape[1] - 1
    witnesses, worst = [], -np.inf
    for j in range(len(pts)):
        side = (X[:, :n] - pts[j, :n]) @ normals[j]
        i = int(np.argmax(side))
        worst = max(worst, float(side[i]))
        if side[i] > tol and len(witnesses) < MAX_WITNESSES:
            witnesses.append({
                "tangency_point": pts[j].tolist(),
                "normal": normals[j].tolist(),
                "kind": kinds[j],
                "crossing_point": X[i].tolist(),
                "residual": float(side[i]),
            })
    return CheckReport(
        "condition-S", not witnesses, witnesses, [worst], tol, len(pts) * X.shape[0],
        {"grid": grid, "tangencies": len(pts)},
    )


def _interior_depth(obj, X):
    """Positive inside G (a lower bound on distance-like depth), <= 0 elsewhere."""
    surf = _surface(obj)
    if isinstance(surf, (RevolutionSurface, ImplicitSurface)):
        return surf.depth(X)
    pair = obj
    xp = X[..., : pair.n]
    dist = np.linalg.norm(xp - pair.center, axis=-1)
    inside_r = dist < pair.radius
    scale = np.where(inside_r, 1.0, pair.radius * (1 - 1e-12) / np.maximum(dist, 1e-300))
    f1, f2 = pair.heights(pair.center + (xp - pair.center) * scale[..., None])
    z = X[..., pair.n]
    d = np.minimum(np.minimum(pair.radius - dist, f1 - z), z - f2)
    return np.where(inside_r, d, -1.0)


def _horizontal_bound(obj):
    """Center and radius of a horizontal disk containing pi(M)."""
    surf = _surface(obj)
    if isinstance(surf, RevolutionSurface):
        return surf.axis, surf.rho_max
    if isinstance(surf, ImplicitSurface):
        lo, hi = np.asarray(surf.lower[:-1]), np.asarray(surf.upper[:-1])
        return 0.5 * (lo + hi), 0.5 * float(np.linalg.norm(hi - lo))
    return obj.center, obj.radius


def _cap_directions(pole, alpha, grid):
    """Unit vectors within angle ``alpha`` of ``pole`` (n = 2 or 3)."""
    n = pole.size
    if n == 1:
        return np.array([pole, -pole]) if alpha >= math.pi / 2 else pole[None]
    if n == 2:
        perp = np.array([-pole[1], pole[0]])
        psi = np.linspace(-alpha, alpha, grid)
        return np.cos(psi)[:, None] * pole + np.sin(psi)[:, None] * perp
    basis = np.linalg.svd(pole[None, :])[2][1:]
    theta = np.linspace(0.0, alpha, max(2, grid // 2))
    phi = 2 * math.pi * np.arange(grid) / grid
    T, P = np.meshgrid(theta, phi, indexing="ij")
    dirs = (np.cos(T)[..., None] * pole + np.sin(T)[..., None]
            * (np.cos(P)[..., None] * basis[0] + np.sin(P)[..., None] * basis[1]))
    return dirs.reshape(-1, 3)


def _cylinder_points(obj, touch_xp, normal, r, zs, grid):
    """Cylinder surface points that can lie over pi(M): the arc of the ring
    |x' - (touch + r normal)| = r inside the bounding disk, times heights."""
    n = touch_xp.size
    axis_xp = touch_xp + r * normal
    c, rb = _horizontal_bound(obj)
    D = float(np.linalg.norm(axis_xp - c))
    inward = (c - axis_xp) / D if D > 0 else -normal
    cos_a = (D * D + r * r - (rb * 1.001) ** 2) / (2 * D * r) if D > 0 else -1.0
    alpha = math.acos(min(1.0, max(-1.0, cos_a)))
    ring = axis_xp + r * _cap_directions(inward, alpha, grid)
    X = np.concatenate(
        [np.repeat(ring[None], zs.size, 0), np.broadcast_to(zs[:, None, None], (zs.size, ring.shape[0], 1))],
        axis=-1,
    )
    return axis_xp, X.reshape(-1, n + 1)


def _z_extent(obj):
    surf = _surface(obj)
    if isinstance(surf, RevolutionSurface):
        return surf.z_range
    if isinstance(surf, ImplicitSurface):
        return surf.lower[-1], surf.upper[-1]
    xp, _ = obj.interior_grid(17, 0.0)
    f1, f2 = obj.heights(xp)
    return float(np.nanmin(f2)), float(np.nanmax(f1))


def check_condition_S_prime(obj, r, grid=41, tol=None, find_max_r=False, r_max=None):
    """The vertical cylinder of radius r touching M from outside at each
    horizontal-normal point must not meet G.

    Cylinder surface points are sampled on a ring x height grid; a sample
    with depth > tol inside G is a witness. With ``find_max_r`` the largest
    passing radius up to ``r_max`` is located by bisection.
    """
    if not r > 0:
        raise ValueError("cylinder radius must be positive")
    diam = _diameter(obj)
    tol = HYPOTHESIS_RTOL * diam if tol is None else float(tol)
    pts, normals, kinds = _tangencies(obj, grid)
    zlo, zhi = _z_extent(obj)

    def scan(radius, collect):
        zs = np.linspace(zlo, zhi, grid)
        witnesses, worst, count = [], -np.inf, 0
        for j in range(len(pts)):
            n = pts.shape[1] - 1
            axis_xp, X = _cylinder_points(obj, pts[j, :n], normals[j], radius, zs, grid)
            depth = _interior_depth(obj, X)
            count += X.shape[0]
            i = int(np.argmax(depth))
            worst = max(worst, float(depth[i]))
            if depth[i] > tol:
                if not collect:
                    return False, [], worst, count
                if len(witnesses) < MAX_WITNESSES:
                    witnesses.append({
                        "tangency_point": pts[j].tolist(),
                        "normal": normals[j].tolist(),
                        "kind": kinds[j],
                        "cylinder_axis": axis_xp.tolist(),
                        "point_in_G": X[i].tolist(),
                        "residual": float(depth[i]),
                    })
        return not witnesses, witnesses, worst, count

    passed, witnesses, worst, count = scan(float(r), True)
    params = {"r": float(r), "grid": grid, "tangencies": len(pts)}
    notes = [] if len(pts) else ["no horizontal-normal points: vacuous"]
    if find_max_r:
        hi = float(r_max) if r_max is not None else 10.0 * diam
        if scan(hi, False)[0]:
            params["max_r"] = hi
            notes.append("passes up to the search bound")
        else:
            lo = 0.0
            for _ in range(40):
                mid = 0.5 * (lo + hi)
                if scan(mid, False)[0]:
                    lo = mid
                else:
                    hi = mid
            params["max_r"] = lo
    return CheckReport("condition-S'", passed, witnesses, [worst], tol, count, params, notes)


# --------------------------------------------------------------------------
# Condition T


def contact_order(profile, z_bar, side=1, decades=(-4.0, -1.0), points=13):
    """Order of contact of the vertical tangent line at height ``z_bar``.

    The horizontal gap rho(z_bar) - rho(z_bar + side*h) is evaluated in
    50-digit arithmetic and its log-log slope fitted over three decades of
    h. Returns (rounded order or None when not finite, raw slope).
    """
    lo, hi = profile.lo_f, profile.hi_f
    L = 0.5 * min(z_bar - lo, hi - z_bar)
    q = profile._q_mp[0]
    with mpmath.workdps(MP_DPS):
        zb = mpmath.mpf(z_bar)
        q0 = q(zb)
        r0 = mpmath.sqrt(q0)
        xs, ys = [], []
        for e in np.linspace(decades[0], decades[1], points):
            h = mpmath.mpf(L) * mpmath.power(10, mpmath.mpf(float(e)))
            z = zb + side * h
            qz = q(z)
            gap = (q0 - qz) / (r0 + mpmath.sqrt(qz))
            if gap == 0:
                return None, math.inf
            xs.append(float(mpmath.log(h)))
            ys.append(float(mpmath.log(abs(gap))))
    slope = float(np.polyfit(xs, ys, 1)[0])
    return int(round(slope)), slope


def check_condition_T(obj, max_order=8, grid=8):
    """Finite-order contact (at most ``max_order``) of every vertical
    tangent line, estimated on both sides of each tangency height."""
    surf = _surface(obj)
    if not isinstance(surf, RevolutionSurface):
        raise GeometryError("condition T needs a surface of revolution (profile access)")
    prof = surf.profile
    witnesses, orders, slopes = [], [], []
    for z_bar, kind in prof.critical_points:
        for side in (-1, 1):
            order, slope = contact_order(prof, z_bar, side)
            orders.append(order)
            slopes.append(slope)
            if order is None or order > max_order:
                witnesses.append({
                    "height": float(surf.to_world_z(z_bar)),
                    "side": side,
                    "kind": kind,
                    "order": "not finite at tested precision" if order is None or not math.isfinite(slope) else order,
                    "slope": slope,
                })
    finite = [o for o in orders if o is not None]
    notes = [] if orders else ["no vertical tangencies: vacuous"]
    if witnesses:
        notes.append("contact order above max_order: not finite at tested precision")
    return CheckReport(
        "condition-T", not witnesses, witnesses, slopes, float(max_order),
        len(orders) * len(surf.direction_samples(grid)),
        {"max_order": max_order, "orders": [o if o is not None else "inf" for o in orders],
         "max_finite_order": max(finite) if finite else None},
        notes,
    )


# --------------------------------------------------------------------------
# monotone extension (necessary conditions)


def check_monotone_extension_necessary(obj, L=None, grid=21, tol=None, delta=None, max_points=1500):
    """(a) H(x', f1) <= H(x', f2) + tol for every vertical pair (no segment
    condition); (b) Lipschitz quotient of H over sampled point pairs <= L.

    The default budget L is 1e3 / diam^2.
    """
    pair = as_pair(obj)
    diam = _diameter(pair)
    L = 1e3 / diam**2 if L is None else float(L)
    xp, idx = pair.interior_grid(grid, delta)
    f1, f2 = pair.heights(xp)
    k1 = pair.graph_curvatures(xp, "upper")
    k2 = pair.graph_curvatures(xp, "lower")
    h1, h2 = mean_curvature(k1), mean_curvature(k2)
    scale = float(np.max(np.abs(np.concatenate([h1, h2]))))
    tol = HYPOTHESIS_RTOL * max(scale, 1e-300) if tol is None else float(tol)
    resid = h1 - h2
    bad = np.flatnonzero(resid > tol)
    witnesses = [
        {"condition": "a", "index": idx[i].tolist(), "x_prime": xp[i].tolist(),
         "upper_point": [*xp[i].tolist(), float(f1[i])], "lower_point": [*xp[i].tolist(), float(f2[i])],
         "H_upper": float(h1[i]), "H_lower": float(h2[i]), "residual": float(resid[i])}
        for i in bad[:MAX_WITNESSES]
    ]
    X = np.concatenate([np.c_[xp, f1], np.c_[xp, f2]])
    H = np.concatenate([h1, h2])
    stride = max(1, int(math.ceil(X.shape[0] / max_points)))
    X, H = X[::stride], H[::stride]
    quotient, arg = 0.0, (0, 0)
    for i in range(X.shape[0] - 1):
        d = np.linalg.norm(X[i + 1:] - X[i], axis=-1)
        with np.errstate(divide="ignore", invalid="ignore"):
            qv = np.where(d > 0, np.abs(H[i + 1:] - H[i]) / d, 0.0)
        j = int(np.argmax(qv))
        if qv[j] > quotient:
            quotient, arg = float(qv[j]), (i, i + 1 + j)
    if quotient > L:
        witnesses.append({"condition": "b", "points": [X[arg[0]].tolist(), X[arg[1]].tolist()],
                          "quotient": quotient, "budget": L, "residual": quotient - L})
    return CheckReport(
        "monotone-extension", not witnesses, witnesses, [float(np.max(resid)), quotient], tol,
        int(xp.shape[0]),
        {"grid": grid, "L": L, "lipschitz_quotient": quotient, "ordering_violations": int(bad.size)},
        ["residuals = [max H(upper)-H(lower), Lipschitz quotient]"],
    )
