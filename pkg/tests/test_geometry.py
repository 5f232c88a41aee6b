import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hypersym.families import FamilyError, FamilySpec, catalog, make_family, make_surface
from hypersym.geometry import (
    ClosedGraphPair,
    DegenerateImmersionError,
    GeometryError,
    GraphDecompositionError,
    Profile,
    SurfacePatch,
    contains,
    count_sheets,
    decompose_graphs,
    graph_patch,
    implicit_ellipsoid,
    inner_normal,
)


def _disk(n, grid=9):
    pts = np.stack(np.meshgrid(*[np.linspace(-0.9, 0.9, grid)] * n, indexing="ij"), -1).reshape(-1, n)
    return pts[np.linalg.norm(pts, axis=-1) < 0.9]


@pytest.mark.parametrize("n", [1, 2, 3])
def test_sphere_heights(n):
    pair = make_family({"name": "sphere", "n": n})
    xp = _disk(n)
    f1, f2 = pair.heights(xp)
    expected = np.sqrt(1 - np.sum(xp**2, -1))
    assert np.allclose(f1, expected, atol=1e-12) and np.allclose(f2, -expected, atol=1e-12)


def test_ellipsoid_heights_and_derivatives():
    pair = make_family({"name": "ellipsoid", "params": {"a": 2, "b": 1}})
    xp = 2 * _disk(2)
    f, g, h = pair.graph(xp, "upper")
    root = np.sqrt(1 - np.sum(xp**2, -1) / 4)
    assert np.allclose(f, root, atol=1e-12)
    assert np.allclose(g, -xp / (4 * root[:, None]), atol=1e-10)
    # Hessian of sqrt(1 - |x|^2/4) at the origin is -I/4
    assert np.allclose(pair.graph(np.zeros((1, 2)), "upper")[2], -0.25 * np.eye(2), atol=1e-12)
    assert pair.radius == pytest.approx(2.0)


def test_sphere_inner_normal_points_to_center():
    surf = make_surface({"name": "sphere", "params": {"radius": 1.5}, "center": [0.2, -0.1, 0.4]})
    patch = surf.patches[0]
    u = np.array([[0.4, 1.0], [2.0, 4.0]])
    X = patch.point(u) - surf.center
    assert np.allclose(inner_normal(patch, u), -X / np.linalg.norm(X, axis=-1, keepdims=True), atol=1e-13)


def test_graph_patch_normals_point_inward():
    pair = make_family("ellipsoid")
    xp = np.array([[0.3, -0.5], [1.2, 0.4]])
    for which, sign in (("upper", 1.0), ("lower", -1.0)):
        _, g, _ = pair.graph(xp, which)
        W = np.sqrt(1 + np.sum(g**2, -1, keepdims=True))
        expected = sign * np.concatenate([g, -np.ones((2, 1))], -1) / W
        assert np.allclose(inner_normal(graph_patch(pair, which), xp), expected, atol=1e-12)


@pytest.mark.parametrize("n", [1, 2, 3])
@pytest.mark.parametrize("name", ["sphere", "ellipsoid", "pear", "bumped-sphere"])
def test_inner_normal_points_into_body(name, n):
    surf = make_surface({"name": name, "n": n})
    for patch, u, _ in surf.quadrature(4):
        X = patch.point(u)
        nu = inner_normal(patch, u)
        h = 1e-4 * surf.diameter
        assert np.all(surf.depth(X + h * nu) > 0)
        assert np.all(surf.depth(X - h * nu) < 0)


def test_contains_examples():
    pair = make_family("sphere")
    pts = np.array([[0, 0, 0], [0, 0, 1.0], [0, 0, 1.001], [1.0, 0, 0], [0.8, 0.7, 0.0]])
    assert contains(pair, pts).tolist() == [True, True, False, True, False]


PEAR = make_family("pear")


@given(st.floats(0.05, 0.95), st.floats(0, 2 * math.pi), st.floats(-0.99, 0.99))
def test_contains_is_monotone_under_shrinking(r, phi, w):
    pair = PEAR
    surf = pair.surface
    z = float(surf.to_world_z(w))
    rho = float(surf.radius_at(z))
    X = np.array([r * rho * math.cos(phi), r * rho * math.sin(phi), z])
    assert contains(pair, X)
    assert contains(pair, 0.5 * X + 0.5 * surf.centroid())


@pytest.mark.parametrize("n", [1, 2, 3])
def test_decomposition_reassembles_the_surface(n):
    surf = make_surface({"name": "pear", "n": n})
    pair = decompose_graphs(surf)
    for patch, u, _ in surf.quadrature(6):
        X = patch.point(u)
        f1, f2 = pair.heights(X[:, :n])
        gap = np.minimum(np.abs(X[:, n] - f1), np.abs(X[:, n] - f2))
        assert np.nanmax(gap) < 1e-9
    zs = surf.z_star
    assert pair.strip.lower == pair.strip.upper == pytest.approx(zs)


def test_torus_decomposition_fails_with_witness():
    with pytest.raises(GraphDecompositionError) as err:
        make_family("torus")
    w = err.value.witness
    assert w is not None and w.shape == (2,)
    torus = make_surface("torus")
    assert count_sheets(torus, w)[0] > 2


def test_dumbbell_is_not_graph_decomposable():
    with pytest.raises(GraphDecompositionError):
        make_family("dumbbell")


def test_implicit_ellipsoid_matches_revolution_family():
    imp = decompose_graphs(implicit_ellipsoid([2.0, 2.0, 1.0]))
    rev = make_family("ellipsoid")
    xp = np.array([[0.5, 0.3], [1.0, -1.2]])
    for which in ("upper", "lower"):
        a, b = imp.graph(xp, which), rev.graph(xp, which)
        assert np.allclose(a[0], b[0], atol=1e-12)
        assert np.allclose(a[1], b[1], atol=1e-8)
        assert np.allclose(a[2], b[2], atol=1e-5)


def test_from_functions_finite_difference_derivatives():
    pair = ClosedGraphPair.from_functions(
        2, 1.0, lambda x: 1 - np.sum(x**2, -1) / 2, lambda x: -1 + np.sum(x**2, -1) / 2)
    f, g, h = pair.graph(np.array([[0.2, 0.3]]), "upper")
    assert np.allclose(g, [[-0.2, -0.3]], atol=1e-9)
    assert np.allclose(h, -np.eye(2), atol=1e-6)


def test_interior_grid_is_nested_under_refinement():
    pair = make_family("sphere")
    coarse, _ = pair.interior_grid(9)
    fine, _ = pair.interior_grid(17)
    fine_set = {tuple(np.round(p, 12)) for p in fine}
    assert all(tuple(np.round(p, 12)) in fine_set for p in coarse)


def test_degenerate_patch_raises():
    flat = SurfacePatch(lambda u: np.stack([u[..., 0], u[..., 0], 0 * u[..., 0]], -1), (0, 0), (1, 1))
    with pytest.raises(DegenerateImmersionError):
        flat.normal(np.array([0.5, 0.5]))


def test_profile_validation():
    with pytest.raises(GeometryError):
        Profile("1 - z**2", 1, -1)
    with pytest.raises(GeometryError):
        Profile("(1 - z**2)*(z - 0.1)**2", -1, 1).validate()


@pytest.mark.parametrize("spec, message", [
    ({"name": "pear", "params": {"eps": 0.3}}, "at most 0.25"),
    ({"name": "blob"}, "unknown family"),
    ({"name": "sphere", "params": {"radius": 1, "tilt": 2}}, "unknown parameters"),
    ({"name": "custom", "params": {"q": "1 - z**2 + a"}}, "unknown symbols"),
    ({"name": "custom", "params": {"q": "(1 - z**2)*(z**2 - 0.25)"}}, "q(z) <= 0"),
    ({"name": "sphere", "oops": 1}, "unknown surface keys"),
    ({"name": "sphere", "scale": -1}, "scale"),
])
def test_family_errors(spec, message):
    with pytest.raises(FamilyError, match=message.replace("(", r"\(").replace(")", r"\)")):
        make_surface(spec)


def test_family_spec_roundtrip():
    spec = FamilySpec("pear", {"eps": 0.2}, 3, (0.0, 0.0, 0.0, 1.0), 2.0)
    assert FamilySpec.from_dict(spec.to_dict()) == spec


def test_catalog_lists_every_family_with_defaults():
    cat = catalog()
    for name in ("sphere", "ellipsoid-of-revolution", "pear", "torus", "custom"):
        assert name in cat
    for name, (_, defaults) in cat.items():
        if name in ("torus", "dumbbell", "flat-splice"):
            continue
        make_surface({"name": name, "params": defaults})


def test_random_symmetric_is_seeded_and_symmetric():
    a = make_surface({"name": "random-symmetric", "params": {"seed": 3}})
    b = make_surface({"name": "random-symmetric", "params": {"seed": 3}})
    z = np.linspace(-0.9, 0.9, 11)
    assert np.array_equal(a.radius_at(z), b.radius_at(z))
    assert np.allclose(a.radius_at(z), a.radius_at(-z), atol=1e-14)
