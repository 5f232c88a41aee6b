"""Gauss-Legendre tensor rules, ball rules and refinement by doubling.

All rules return ``(nodes, weights)`` with nodes stacked along the first
axis so that an integral is ``np.sum(weights * f(nodes))``. ``np.sum`` uses
pairwise summation, which keeps results bit-stable for a fixed rule.
"""

from __future__ import annotations

import math

import numpy as np
from numpy.polynomial.legendre import leggauss


class QuadratureError(RuntimeError):
    """Raised when successive refinement levels fail to agree."""


def gauss_legendre(a, b, n):
    x, w = leggauss(n)
    half = 0.5 * (b - a)
    return half * x + 0.5 * (a + b), half * w


def periodic_trapezoid(n, period=2.0 * math.pi):
    nodes = np.arange(n) * (period / n)
    return nodes, np.full(n, period / n)


def sphere_area(n):
    """Area of the unit sphere S^{n-1} in R^n (2 for n=1)."""
    return 2.0 * math.pi ** (n / 2) / math.gamma(n / 2)


def sphere_rule(n, level):
    """Directions on S^{n-1} and weights summing to ``sphere_area(n)``."""
    if n == 1:
        return np.array([[1.0], [-1.0]]), np.array([1.0, 1.0])
    if n == 2:
        phi, w = periodic_trapezoid(2 * level)
        return np.stack([np.cos(phi), np.sin(phi)], axis=-1), w
    if n == 3:
        c, wc = gauss_legendre(-1.0, 1.0, level)
        phi, wp = periodic_trapezoid(2 * level)
        C, P = np.meshgrid(c, phi, indexing="ij")
        S = np.sqrt(1.0 - C**2)
        dirs = np.stack([S * np.cos(P), S * np.sin(P), C], axis=-1).reshape(-1, 3)
        return dirs, np.outer(wc, wp).ravel()
    raise ValueError(f"sphere rule implemented for n <= 3, got n={n}")


def ball_rule(radius, n, level, center=None):
    """Quadrature on the closed ball of ``radius`` in R^n.

    The radial variable is r = radius * (1 - (1 - tau)^2), which clusters
    nodes at the rim. Integrands behaving like sqrt(rim distance), as graph
    gradients of closed surfaces do, become smooth in tau.
    """
    tau, wt = gauss_legendre(0.0, 1.0, level)
    r = radius * (1.0 - (1.0 - tau) ** 2)
    wr = wt * 2.0 * radius * (1.0 - tau) * r ** (n - 1)
    dirs, wd = sphere_rule(n, level)
    nodes = (r[:, None, None] * dirs[None, :, :]).reshape(-1, n)
    weights = np.outer(wr, wd).ravel()
    if center is not None:
        nodes = nodes + np.asarray(center, dtype=float)
    return nodes, weights


def integrate_by_doubling(evaluate, start=16, max_level=512, rtol=1e-11, atol=0.0):
    """Evaluate ``evaluate(level)`` at doubling levels until two agree.

    Returns ``(value, level)``; raises :class:`QuadratureError` when the
    largest level is reached without agreement.
    """
    level = start
    prev = cur = evaluate(level)
    while level < max_level:
        level *= 2
        prev, cur = cur, evaluate(level)
        if abs(cur - prev) <= rtol * abs(cur) + atol:
            return cur, level
    raise QuadratureError(
        f"no agreement up to level {max_level}: last two values {prev!r}, {cur!r}"
    )
