"""Catalog of analytic test surfaces addressable by name and parameters."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import sympy as sp

from .geometry import (
    ZETA,
    ClosedGraphPair,
    GeometryError,
    Profile,
    RevolutionSurface,
    decompose_graphs,
    horizontal_torus,
)


class FamilyError(ValueError):
    pass


@dataclass(frozen=True)
class FamilySpec:
    """Family name, shape parameters and placement (center, uniform scale)."""

    name: str
    params: dict = field(default_factory=dict)
    n: int = 2
    center: tuple | None = None
    scale: float = 1.0

    def to_dict(self):
        return {
            "name": self.name,
            "params": dict(sorted(self.params.items())),
            "n": self.n,
            "center": None if self.center is None else [float(c) for c in self.center],
            "scale": float(self.scale),
        }

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        unknown = set(data) - {"name", "params", "n", "center", "scale"}
        if unknown:
            raise FamilyError(f"unknown surface keys: {sorted(unknown)}")
        if "name" not in data:
            raise FamilyError("surface entry needs a 'name'")
        center = data.get("center")
        return cls(
            str(data["name"]),
            dict(data.get("params", {})),
            int(data.get("n", 2)),
            None if center is None else tuple(float(c) for c in center),
            float(data.get("scale", 1.0)),
        )


def _rat(x):
    """Exact rational for a parameter, rounded to 12 significant digits."""
    if isinstance(x, str):
        return sp.nsimplify(sp.sympify(x), rational=True)
    return sp.nsimplify(float("%.12g" % float(x)), rational=True)


z = ZETA


def _sphere(p):
    radius = float(p.get("radius", 1.0))
    if not radius > 0:
        raise FamilyError("sphere radius must be positive")
    return 1 - z**2, -1, 1, radius


def _ellipsoid(p):
    a, b = _rat(p.get("a", 2.0)), _rat(p.get("b", 1.0))
    if not (a > 0 and b > 0):
        raise FamilyError("ellipsoid semi-axes must be positive")
    return a**2 * (1 - z**2 / b**2), -b, b, 1.0


def _pear(p):
    eps = _rat(p.get("eps", 0.1))
    if not abs(eps) <= sp.Rational(1, 4):
        raise FamilyError("pear asymmetry |eps| must be at most 0.25 to stay embedded and unimodal")
    return (1 - z**2) * (1 + eps * z * (1 - z**2)) ** 2, -1, 1, 1.0


def _bumped(p):
    beta = _rat(p.get("beta", 0.2))
    zb = _rat(p.get("z0", 0.4))
    w = _rat(p.get("width", 0.3))
    if not (w > 0 and beta > -1):
        raise FamilyError("bumped-sphere needs width > 0 and beta > -1")
    return (1 - z**2) * (1 + beta * sp.exp(-(((z - zb) / w) ** 2))), -1, 1, 1.0


def _dumbbell(p):
    nu = _rat(p.get("neck", 0.05))
    if not nu > 0:
        raise FamilyError("dumbbell neck parameter must be positive")
    return 4 * (1 - z**2) * (nu + z**2), -1, 1, 1.0


def _flat_splice(p):
    return 1 - sp.exp(1 - 1 / z**2), -1, 1, 1.0


def _random_symmetric(p):
    seed = int(p.get("seed", 0))
    rng = np.random.default_rng(seed)
    for _ in range(1000):
        a = _rat(round(rng.uniform(-0.6, 0.6), 6))
        b = _rat(round(rng.uniform(-0.3, 0.3), 6))
        q = (1 - z**2) * (1 + a * z**2 + b * z**4)
        prof = Profile(q, -1, 1)
        try:
            prof.validate()
        except GeometryError:
            continue
        if prof.unimodal:
            return q, -1, 1, 1.0
    raise FamilyError(f"no unimodal profile drawn for seed {seed}")


def _custom(p):
    if "q" not in p:
        raise FamilyError("custom profile needs parameter q (expression in z)")
    q = sp.sympify(str(p["q"]), locals={"z": z})
    extra = q.free_symbols - {z}
    if extra:
        raise FamilyError(f"custom profile has unknown symbols {sorted(map(str, extra))}")
    return q, _rat(p.get("z0", -1)), _rat(p.get("z1", 1)), 1.0


_REVOLUTION = {
    "sphere": (_sphere, "round sphere; radius", {"radius": 1.0}),
    "ellipsoid-of-revolution": (_ellipsoid, "horizontal semi-axis a, vertical semi-axis b", {"a": 2.0, "b": 1.0}),
    "pear": (_pear, "egg shape rho(z)=sqrt(1-z^2)(1+eps z(1-z^2)); asymmetric for eps != 0", {"eps": 0.1}),
    "bumped-sphere": (_bumped, "sphere with a Gaussian bulge at height z0", {"beta": 0.2, "z0": 0.4, "width": 0.3}),
    "dumbbell": (_dumbbell, "two lobes joined by a neck (negative control)", {"neck": 0.05}),
    "flat-splice": (_flat_splice, "profile flattened by exp(-1/z^2) at the equator (negative control)", {}),
    "random-symmetric": (_random_symmetric, "seeded mirror-symmetric unimodal profile", {"seed": 0}),
    "custom": (_custom, "user profile q(z)=rho^2 on [z0, z1]", {"q": "1 - z**2", "z0": -1, "z1": 1}),
}
_ALIASES = {"ellipsoid": "ellipsoid-of-revolution", "custom-revolution-profile": "custom"}


def catalog():
    """Name -> (description, default parameters) for every family."""
    out = {name: (desc, dict(defaults)) for name, (_, desc, defaults) in _REVOLUTION.items()}
    out["torus"] = ("torus about a horizontal axis (not graph-decomposable)", {"major": 1.0, "minor": 0.25})
    return out


def _coerce(spec):
    if isinstance(spec, FamilySpec):
        return spec
    if isinstance(spec, str):
        return FamilySpec(spec)
    return FamilySpec.from_dict(spec)


def make_surface(spec):
    """Build the closed surface for a catalog entry."""
    spec = _coerce(spec)
    name = _ALIASES.get(spec.name, spec.name)
    params = dict(spec.params)
    if name == "torus":
        if spec.n != 2:
            raise FamilyError("torus is defined for n = 2")
        return horizontal_torus(float(params.get("major", 1.0)), float(params.get("minor", 0.25)))
    if name not in _REVOLUTION:
        raise FamilyError(f"unknown family {spec.name!r}; known: {sorted(catalog())}")
    builder, _, defaults = _REVOLUTION[name]
    unknown = set(params) - set(defaults)
    if unknown:
        raise FamilyError(f"unknown parameters for {name}: {sorted(unknown)}")
    q, lo, hi, base_scale = builder(params)
    if not spec.scale > 0:
        raise FamilyError("scale must be positive")
    profile = Profile(q, lo, hi)
    try:
        profile.validate()
    except GeometryError as exc:
        raise FamilyError(f"{name}: {exc}") from exc
    center = None if spec.center is None else np.asarray(spec.center, dtype=float)
    try:
        return RevolutionSurface(profile, spec.n, center, base_scale * spec.scale, name)
    except GeometryError as exc:
        raise FamilyError(str(exc)) from exc


def make_family(spec) -> ClosedGraphPair:
    """Catalog entry as a two-graph pair; non-decomposable shapes raise
    :class:`~hypersym.geometry.GraphDecompositionError`."""
    return decompose_graphs(make_surface(spec))
