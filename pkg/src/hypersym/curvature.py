"""Principal curvatures, elementary symmetric curvature functions and the
admissibility test for general curvature functions g(k).

Sign convention: curvatures are measured against the inner unit normal, so
a convex body has k >= 0 and the unit sphere has k = (1, ..., 1).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ._fd import STEP1, STEP2
from .report import CheckReport


class CurvatureError(ValueError):
    pass


# --------------------------------------------------------------------------
# small symmetric eigenproblems


def jacobi_eigh(a, vectors=False, tol=1e-15, max_sweeps=50):
    """Cyclic Jacobi iteration on a batch of symmetric matrices.

    Parameters
    ----------
    a : array_like, shape (..., n, n)
        Symmetric matrices.
    vectors : bool
        Also accumulate eigenvectors (as columns).

    Returns
    -------
    w : ndarray, shape (..., n)
        Eigenvalues in ascending order.
    v : ndarray, shape (..., n, n)
        Only when ``vectors`` is true.
    """
    a = np.array(a, dtype=float, copy=True)
    n = a.shape[-1]
    batch = a.shape[:-2]
    v = np.broadcast_to(np.eye(n), a.shape).copy() if vectors else None
    for _ in range(max_sweeps):
        off = sum(a[..., p, q] ** 2 for p in range(n) for q in range(p + 1, n)) if n > 1 else 0.0
        diag = np.sum(a[..., np.arange(n), np.arange(n)] ** 2, axis=-1)
        if np.all(off <= (tol**2) * np.maximum(diag, np.finfo(float).tiny)):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[..., p, q]
                active = apq != 0.0
                # a tiny apq gives theta = inf and hence a zero rotation
                with np.errstate(all="ignore"):
                    theta = (a[..., q, q] - a[..., p, p]) / (2.0 * apq)
                    t = np.sign(theta) / (np.abs(theta) + np.hypot(theta, 1.0))
                t = np.where(theta == 0.0, 1.0, t)
                t = np.where(active, t, 0.0)
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                c_ = c[..., None]
                s_ = s[..., None]
                col_p = a[..., :, p].copy()
                col_q = a[..., :, q].copy()
                a[..., :, p] = c_ * col_p - s_ * col_q
                a[..., :, q] = s_ * col_p + c_ * col_q
                row_p = a[..., p, :].copy()
                row_q = a[..., q, :].copy()
                a[..., p, :] = c_ * row_p - s_ * row_q
                a[..., q, :] = s_ * row_p + c_ * row_q
                if vectors:
                    vp = v[..., :, p].copy()
                    vq = v[..., :, q].copy()
                    v[..., :, p] = c_ * vp - s_ * vq
                    v[..., :, q] = s_ * vp + c_ * vq
    w = a[..., np.arange(n), np.arange(n)]
    order = np.argsort(w, axis=-1)
    w = np.take_along_axis(w, order, axis=-1)
    if not vectors:
        return w
    v = np.take_along_axis(v, order[..., None, :], axis=-1)
    del batch
    return w, v


def pencil_eigvals(first, second):
    """Eigenvalues of the pencil (first, second) with ``first`` positive
    definite: Cholesky reduction to L^-1 second L^-T, then Jacobi."""
    first = np.asarray(first, dtype=float)
    second = np.asarray(second, dtype=float)
    try:
        low = np.linalg.cholesky(first)
    except np.linalg.LinAlgError as exc:
        raise CurvatureError("first fundamental form is not positive definite") from exc
    y = np.linalg.solve(low, second)
    c = np.linalg.solve(low, np.swapaxes(y, -1, -2))
    c = 0.5 * (c + np.swapaxes(c, -1, -2))
    return jacobi_eigh(c)


# --------------------------------------------------------------------------
# curvature vectors and symmetric functions


@dataclass(frozen=True)
class CurvatureVector:
    """Principal curvatures at one point, ascending, against the inner normal."""

    k: np.ndarray
    orientation: str = "inner"

    def __post_init__(self):
        k = np.sort(np.asarray(self.k, dtype=float).ravel())
        if k.size < 1 or not np.all(np.isfinite(k)):
            raise CurvatureError(f"invalid curvature vector {self.k!r}")
        object.__setattr__(self, "k", k)

    @property
    def n(self):
        return self.k.size

    def mean(self):
        return mean_curvature(self.k)

    def sigma(self, m):
        return float(sigma_m(self.k, m))

    def in_gamma(self, m):
        return bool(in_gamma_m(self.k, m))

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.k, dtype=dtype)


def _as_k(k):
    if isinstance(k, CurvatureVector):
        return k.k
    return np.asarray(k, dtype=float)


def mean_curvature(k):
    """Arithmetic mean of the principal curvatures (last axis)."""
    k = _as_k(k)
    return np.mean(k, axis=-1)


def sigma_m(k, m):
    """m-th elementary symmetric function of the last axis of ``k``.

    ``m = 0`` returns ones. Direct expansion for n <= 3; otherwise the
    coefficients of prod_i (1 + k_i x) are accumulated one factor at a time.
    """
    k = _as_k(k)
    n = k.shape[-1]
    if not 0 <= m <= n:
        raise CurvatureError(f"m={m} out of range for n={n}")
    if m == 0:
        return np.ones(k.shape[:-1])
    if n <= 3:
        return _sigma_direct(k, m)
    return elementary_symmetric(k)[..., m]


def _sigma_direct(k, m):
    n = k.shape[-1]
    if m == 1:
        return np.sum(k, axis=-1)
    if m == n:
        return np.prod(k, axis=-1)
    # n == 3, m == 2
    return k[..., 0] * k[..., 1] + k[..., 0] * k[..., 2] + k[..., 1] * k[..., 2]


def elementary_symmetric(k):
    """All sigma_0..sigma_n along the last axis, shape (..., n+1)."""
    k = _as_k(k)
    n = k.shape[-1]
    e = np.zeros(k.shape[:-1] + (n + 1,))
    e[..., 0] = 1.0
    for i in range(n):
        ki = k[..., i]
        for j in range(i + 1, 0, -1):
            e[..., j] = e[..., j] + ki * e[..., j - 1]
    return e


def sigma_m_bruteforce(k, m):
    """Sum over all m-subsets; exponential cost, used as a test oracle."""
    k = list(np.asarray(_as_k(k), dtype=float).ravel())
    if m == 0:
        return 1.0
    return float(sum(math.prod(c) for c in itertools.combinations(k, m)))


def in_gamma_m(k, m):
    """True where sigma_j(k) > 0 for every j = 1..m (exact sign, no margin)."""
    k = _as_k(k)
    n = k.shape[-1]
    if not 1 <= m <= n:
        raise CurvatureError(f"m={m} out of range for n={n}")
    e = elementary_symmetric(k) if n > 3 else None
    ok = np.ones(k.shape[:-1], dtype=bool)
    for j in range(1, m + 1):
        s = e[..., j] if e is not None else _sigma_direct(k, j)
        ok &= s > 0.0
    return ok


def g_m(k, m):
    """sigma_m ** (1/m); NaN outside the cone where sigma_m <= 0."""
    s = sigma_m(k, m)
    with np.errstate(invalid="ignore"):
        return np.where(s > 0, np.abs(s) ** (1.0 / m), np.nan)


def _sigma_without(k, drop, m):
    """sigma_m of k with the coordinates in ``drop`` removed."""
    keep = [i for i in range(k.shape[-1]) if i not in drop]
    if m < 0 or m > len(keep):
        return np.zeros(k.shape[:-1])
    if m == 0:
        return np.ones(k.shape[:-1])
    return elementary_symmetric(k[..., keep])[..., m]


def sigma_gradient(k, m):
    k = _as_k(k)
    n = k.shape[-1]
    return np.stack([_sigma_without(k, (i,), m - 1) for i in range(n)], axis=-1)


def sigma_hessian(k, m):
    k = _as_k(k)
    n = k.shape[-1]
    out = np.zeros(k.shape[:-1] + (n, n))
    for i in range(n):
        for j in range(i + 1, n):
            h = _sigma_without(k, (i, j), m - 2)
            out[..., i, j] = h
            out[..., j, i] = h
    return out


@dataclass(frozen=True)
class CurvatureFunctionSpec:
    """A symmetric curvature function g(k) with gradient and Hessian.

    ``kind`` is one of ``mean``, ``sigma``, ``gm`` or ``custom``. For the
    custom kind supply ``func`` and optionally ``grad``/``hess`` (finite
    differences otherwise) and a ``cone`` predicate.
    """

    kind: str = "mean"
    m: int = 1
    func: Callable | None = field(default=None, compare=False)
    grad: Callable | None = field(default=None, compare=False)
    hess: Callable | None = field(default=None, compare=False)
    cone: Callable | None = field(default=None, compare=False)
    label: str = ""

    def __post_init__(self):
        if self.kind not in ("mean", "sigma", "gm", "custom"):
            raise CurvatureError(f"unknown curvature kind {self.kind!r}")
        if self.kind in ("sigma", "gm") and self.m < 1:
            raise CurvatureError("m must be >= 1")
        if self.kind == "custom" and self.func is None:
            raise CurvatureError("custom curvature function needs func")

    @classmethod
    def parse(cls, text):
        """Parse ``mean``, ``sigma:m`` or ``gm:m``."""
        text = text.strip().lower()
        if text in ("mean", "h"):
            return cls("mean")
        name, _, arg = text.partition(":")
        if name in ("sigma", "gm") and arg:
            return cls(name, int(arg))
        raise CurvatureError(f"cannot parse curvature spec {text!r}")

    @property
    def name(self):
        if self.label:
            return self.label
        return {"mean": "mean", "sigma": f"sigma:{self.m}", "gm": f"gm:{self.m}"}.get(
            self.kind, "custom"
        )

    def validate(self, n):
        if self.kind in ("sigma", "gm") and not 1 <= self.m <= n:
            raise CurvatureError(f"m={self.m} out of range for n={n}")

    def __call__(self, k):
        k = _as_k(k)
        if self.kind == "mean":
            return mean_curvature(k)
        if self.kind == "sigma":
            return sigma_m(k, self.m)
        if self.kind == "gm":
            return g_m(k, self.m)
        return np.asarray(self.func(k), dtype=float)

    def gradient(self, k):
        k = _as_k(k)
        n = k.shape[-1]
        if self.kind == "mean":
            return np.full(k.shape, 1.0 / n)
        if self.kind == "sigma":
            return sigma_gradient(k, self.m)
        if self.kind == "gm":
            s = sigma_m(k, self.m)[..., None]
            return (1.0 / self.m) * s ** (1.0 / self.m - 1.0) * sigma_gradient(k, self.m)
        if self.grad is not None:
            return np.asarray(self.grad(k), dtype=float)
        return _fd_vector_grad(self.func, k)

    def hessian(self, k):
        k = _as_k(k)
        n = k.shape[-1]
        if self.kind == "mean":
            return np.zeros(k.shape + (n,))
        if self.kind == "sigma":
            return sigma_hessian(k, self.m)
        if self.kind == "gm":
            m = self.m
            s = sigma_m(k, m)[..., None, None]
            g = sigma_gradient(k, m)
            outer = g[..., :, None] * g[..., None, :]
            return (1.0 / m) * s ** (1.0 / m - 1.0) * sigma_hessian(k, m) + (
                (1.0 / m) * (1.0 / m - 1.0) * s ** (1.0 / m - 2.0) * outer
            )
        if self.hess is not None:
            return np.asarray(self.hess(k), dtype=float)
        return _fd_vector_hess(self.func, k)

    def in_cone(self, k):
        """Membership in the declared open cone Gamma."""
        k = _as_k(k)
        if self.kind in ("sigma", "gm"):
            return in_gamma_m(k, self.m)
        if self.kind == "custom" and self.cone is not None:
            return np.asarray(self.cone(k), dtype=bool)
        return np.ones(k.shape[:-1], dtype=bool)


def _fd_vector_grad(func, k, h=None):
    k = np.asarray(k, dtype=float)
    n = k.shape[-1]
    h = STEP1 * max(1.0, float(np.max(np.abs(k)))) if h is None else h
    out = np.empty(k.shape)
    for i in range(n):
        e = np.zeros(n)
        e[i] = h
        out[..., i] = (np.asarray(func(k + e)) - np.asarray(func(k - e))) / (2 * h)
    return out


def _fd_vector_hess(func, k, h=None):
    k = np.asarray(k, dtype=float)
    n = k.shape[-1]
    h = STEP2 * max(1.0, float(np.max(np.abs(k)))) if h is None else h
    f = lambda x: np.asarray(func(x), dtype=float)  # noqa: E731
    f0 = f(k)
    out = np.empty(k.shape + (n,))
    for i in range(n):
        ei = np.zeros(n)
        ei[i] = h
        out[..., i, i] = (f(k + ei) - 2 * f0 + f(k - ei)) / h**2
        for j in range(i + 1, n):
            ej = np.zeros(n)
            ej[j] = h
            v = (f(k + ei + ej) - f(k + ei - ej) - f(k - ei + ej) + f(k - ei - ej)) / (4 * h**2)
            out[..., i, j] = out[..., j, i] = v
    return out


def check_g_admissible(spec: CurvatureFunctionSpec, samples, tol=1e-10, max_witnesses=25):
    """Check positivity of dg/dk_i and negative semidefiniteness of the
    Hessian of g at each sample.

    Samples outside the declared cone are flagged in ``params`` and skipped;
    they do not fail the check. Concavity witnesses carry the top Hessian
    eigenvector as the offending direction eta.
    """
    k = np.atleast_2d(_as_k(samples))
    spec.validate(k.shape[-1])
    inside = spec.in_cone(k)
    flagged = np.flatnonzero(~inside)
    kin = k[inside]
    witnesses = []
    residuals = []
    if kin.size:
        grad = spec.gradient(kin)
        hess = spec.hessian(kin)
        scale = np.maximum(1.0, np.max(np.abs(hess), axis=(-1, -2)))
        w, vecs = jacobi_eigh(hess, vectors=True)
        top = w[:, -1]
        gmin = np.min(grad, axis=-1)
        idx_in = np.flatnonzero(inside)
        for row, i in enumerate(idx_in):
            residuals.append({"min_gradient": gmin[row], "max_hessian_eigenvalue": top[row]})
            if not gmin[row] > 0.0:
                witnesses.append(
                    {"sample": k[i], "kind": "monotonicity", "value": gmin[row],
                     "coordinate": int(np.argmin(grad[row]))}
                )
            if top[row] > tol * scale[row]:
                eta = vecs[row, :, -1]
                eta = eta * np.sign(eta[np.argmax(np.abs(eta))])
                witnesses.append(
                    {"sample": k[i], "kind": "concavity", "value": top[row], "direction": eta}
                )
    return CheckReport(
        name=f"g-admissible[{spec.name}]",
        passed=not witnesses,
        witnesses=witnesses[:max_witnesses],
        residuals=residuals,
        tolerance=tol,
        samples=int(kin.shape[0]),
        params={"outside_cone": flagged.tolist(), "violations": len(witnesses)},
        notes=(["samples outside the declared cone were skipped"] if flagged.size else []),
    )


# --------------------------------------------------------------------------
# curvature of parametrized hypersurfaces


def fundamental_forms(patch, u):
    """First and second fundamental forms of ``patch`` at ``u``.

    The second form is <d^2 X, nu> with nu the inner unit normal.
    """
    u = np.asarray(u, dtype=float)
    dX = patch.tangents(u)
    d2X = patch.second_derivatives(u)
    nu = patch.normal(u)
    first = np.einsum("...ai,...aj->...ij", dX, dX)
    second = np.einsum("...aij,...a->...ij", d2X, nu)
    return first, second


def curvatures_from_derivatives(dX, d2X, orientation=1):
    """Principal curvatures, inner normal and area density from embedding
    derivatives ``dX`` (..., n+1, n) and ``d2X`` (..., n+1, n, n)."""
    from .geometry import cofactor_normal

    N = cofactor_normal(dX) * orientation
    density = np.linalg.norm(N, axis=-1)
    nu = N / density[..., None]
    first = np.einsum("...ai,...aj->...ij", dX, dX)
    second = np.einsum("...aij,...a->...ij", d2X, nu)
    return pencil_eigvals(first, second), nu, density


def curvature_field(patch, u):
    """Principal curvatures at a batch of parameters, shape (..., n)."""
    first, second = fundamental_forms(patch, u)
    return pencil_eigvals(first, second)


def principal_curvatures(patch, u) -> CurvatureVector:
    u = np.asarray(u, dtype=float)
    if u.ndim != 1:
        raise ValueError("principal_curvatures takes one parameter point; see curvature_field")
    return CurvatureVector(curvature_field(patch, u))


def gauss_map_oracle(patch, u, h=1e-4):
    """Principal curvatures from finite differences of the Gauss map.

    Uses only first derivatives of the embedding: II_ij = -<d_i X, d_j nu>
    with d_j nu from central differences at h and h/2 plus one Richardson
    step. Eigenvalues come from ``numpy.linalg.eigvals`` so that neither the
    analytic second derivatives nor the Jacobi solver is involved.
    """
    u = np.asarray(u, dtype=float)
    d = u.shape[-1]
    dX = patch.tangents(u)

    def dnu(step):
        cols = []
        for j in range(d):
            e = np.zeros(d)
            e[j] = step
            cols.append((patch.normal(u + e) - patch.normal(u - e)) / (2 * step))
        return np.stack(cols, axis=-1)

    d1, d2 = dnu(h), dnu(h / 2)
    dn = d2 + (d2 - d1) / 3.0
    second = -np.einsum("...ai,...aj->...ij", dX, dn)
    second = 0.5 * (second + np.swapaxes(second, -1, -2))
    first = np.einsum("...ai,...aj->...ij", dX, dX)
    shape = np.linalg.solve(first, second)
    return np.sort(np.real(np.linalg.eigvals(shape)), axis=-1)
