"""Finite-difference helpers shared by the geometry and variation code."""

from __future__ import annotations

import numpy as np

EPS = np.finfo(float).eps
STEP1 = EPS ** (1.0 / 3.0)
STEP2 = EPS ** (1.0 / 4.0)


def fd_jacobian(func, u, h):
    """Central-difference Jacobian.

    ``func`` maps ``(..., d)`` to ``(..., D)``; the result has shape
    ``(..., D, d)``.
    """
    u = np.asarray(u, dtype=float)
    d = u.shape[-1]
    cols = []
    for i in range(d):
        e = np.zeros(d)
        e[i] = h
        cols.append((func(u + e) - func(u - e)) / (2.0 * h))
    return np.stack(cols, axis=-1)


def fd_hessian(func, u, h):
    """Central second differences, shape ``(..., D, d, d)``."""
    u = np.asarray(u, dtype=float)
    d = u.shape[-1]
    f0 = func(u)
    out = np.empty(f0.shape + (d, d))
    for i in range(d):
        ei = np.zeros(d)
        ei[i] = h
        out[..., i, i] = (func(u + ei) - 2.0 * f0 + func(u - ei)) / h**2
        for j in range(i + 1, d):
            ej = np.zeros(d)
            ej[j] = h
            mixed = (
                func(u + ei + ej) - func(u + ei - ej) - func(u - ei + ej) + func(u - ei - ej)
            ) / (4.0 * h**2)
            out[..., i, j] = mixed
            out[..., j, i] = mixed
    return out


def richardson_central(func, x, h):
    """Derivative of a scalar function by central differences at h and h/2
    with one Richardson step.

    Returns ``(estimate, error_estimate)``.
    """
    d1 = (func(x + h) - func(x - h)) / (2.0 * h)
    d2 = (func(x + h / 2) - func(x - h / 2)) / h
    return d2 + (d2 - d1) / 3.0, abs(d2 - d1) / 3.0
