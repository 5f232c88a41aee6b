"""Acceptance criteria 1-12, each at its stated tolerance and runtime bound.

Every test carries a ``criterion`` marker; conftest prints one PASS/FAIL
line per criterion at the end of the run.
"""

import json
import math
import time

import numpy as np
import pytest

from hypersym import conditions, hopf, symmetry, variation
from hypersym.curvature import (
    CurvatureFunctionSpec,
    check_g_admissible,
    curvature_field,
    gauss_map_oracle,
    in_gamma_m,
)
from hypersym.families import FamilySpec, catalog, make_family, make_surface
from hypersym.suite import SuiteConfig, run_suite

EIGHT_PI = 8 * math.pi


class Timer:
    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.start


def crit(number, title):
    return pytest.mark.criterion(number, title)


# 1 ----------------------------------------------------------------------------

C1 = crit(1, "curvature exactness on the unit sphere")


@C1
def test_sphere_principal_curvatures_exact_and_oracle():
    with Timer() as clock:
        patch = make_surface("sphere").patches[0]
        rng = np.random.default_rng(1)
        u = np.column_stack([rng.uniform(0.05, math.pi - 0.05, 1000), rng.uniform(0, 2 * math.pi, 1000)])
        k = curvature_field(patch, u)
        oracle = gauss_map_oracle(patch, u)
    assert k.shape == (1000, 2)
    assert np.max(np.abs(k - 1.0)) <= 1e-10
    assert np.max(np.abs(oracle - k)) <= 1e-6
    assert clock.elapsed < 1.0


# 2 ----------------------------------------------------------------------------

C2 = crit(2, "variational identity (sum convention)")


@C2
@pytest.mark.parametrize("m", [1, 2])
def test_sphere_radial_field_first_variation(m):
    pair = make_family("sphere")
    V = variation.RadialField()
    with Timer() as clock:
        fd, _ = variation.first_variation_fd(pair, V, m)
        integral = variation.first_variation_integral(pair, V, m)
    assert abs(fd - EIGHT_PI) <= 1e-5 * EIGHT_PI
    assert abs(integral - EIGHT_PI) <= 1e-5 * EIGHT_PI
    assert abs(fd - integral) <= 1e-5 * EIGHT_PI
    assert clock.elapsed < 10.0


@C2
def test_ellipsoid_vertical_bump_first_variation():
    pair = make_family({"name": "ellipsoid", "params": {"a": 2, "b": 1}})
    V = variation.bump_field([0.3, 0.2], 0.5)
    with Timer() as clock:
        trace = variation.deformation_trace(pair, V, 1)
    assert trace.relative_residual <= 1e-4
    assert clock.elapsed < 10.0


# 3 ----------------------------------------------------------------------------

C3 = crit(3, "translation invariance for v = 1")


@C3
@pytest.mark.parametrize("family", ["sphere", "ellipsoid", "pear"])
@pytest.mark.parametrize("m", [1, 2])
def test_constant_field_leaves_weighted_area_fixed(family, m):
    pair = make_family(family)
    S = variation.weighted_area(pair, m)
    fd, _ = variation.first_variation_fd(pair, variation.constant_field(1.0, pair.n), m)
    assert abs(fd) <= 1e-8 * abs(S)


# 4 ----------------------------------------------------------------------------

C4 = crit(4, "curvature equality between the sheets")


@C4
@pytest.mark.parametrize("family", ["sphere", "ellipsoid"])
@pytest.mark.parametrize("c", ["mean", "sigma:2"])
def test_curvature_equality_on_symmetric_families(family, c):
    rep = symmetry.curvature_equality_check(make_family(family), c, delta=1e-3, tol=1e-8)
    assert rep.passed, rep.witnesses[:3]
    assert rep.residuals[0] <= 1e-8


# 5 ----------------------------------------------------------------------------

C5 = crit(5, "asymmetry functional")


@C5
@pytest.mark.parametrize("spec", ["sphere", "ellipsoid", {"name": "random-symmetric", "params": {"seed": 3}},
                                  {"name": "sphere", "params": {"radius": 2.0}, "center": [0.1, 0, 0.4]}])
def test_asymmetry_vanishes_on_symmetric_families(spec):
    J, _ = variation.asymmetry_functional(make_family(spec))
    assert J <= 1e-10


@C5
def test_asymmetry_positive_and_stable_on_pear():
    pair = make_family({"name": "pear", "params": {"eps": 0.1}})
    values = [variation.asymmetry_functional(pair, level=lv)[0] for lv in (32, 64, 128)]
    assert min(values) >= 1e-4
    for coarse, fine in zip(values, values[1:]):
        assert abs(coarse - fine) <= 0.05 * abs(fine)
    xp, _ = pair.interior_grid(81)
    assert np.min(variation.asymmetry_integrand(pair, xp)) >= -1e-14


# 6 ----------------------------------------------------------------------------

C6 = crit(6, "monotone gradient of A")


@C6
@pytest.mark.parametrize("n", [2, 3])
def test_monotone_gap_positive_on_random_pairs(n):
    rng = np.random.default_rng(6 + n)

    def ball(count):
        d = rng.normal(size=(count, n))
        d /= np.linalg.norm(d, axis=1, keepdims=True)
        return d * 10.0 * rng.uniform(0, 1, (count, 1)) ** (1.0 / n)

    q1, q2 = ball(10_000), ball(10_000)
    assert np.all(np.any(q1 != q2, axis=1))
    assert np.all(variation.monotone_gap(q1, q2) > 0)


@C6
def test_hessian_of_A_lower_bound():
    rng = np.random.default_rng(66)
    q = rng.uniform(-1, 1, (10_000, 2))
    q *= (10.0 * rng.uniform(0, 1, (10_000, 1))) / np.maximum(np.linalg.norm(q, axis=1, keepdims=True), 1e-300)
    low = np.linalg.eigvalsh(variation.hessian_A(q))[:, 0]
    bound = (1.0 + np.sum(q * q, axis=1)) ** -1.5
    assert np.all(low >= bound - 1e-12)


# 7 ----------------------------------------------------------------------------

C7 = crit(7, "condition checkers")
_C7_CLOCK = []


@C7
def test_sphere_passes_every_condition():
    with Timer() as clock:
        surf = make_surface("sphere")
        pair = make_family("sphere")
        assert conditions.check_condition_S(surf).passed
        for r in (0.05, 0.5, 1.0):
            assert conditions.check_condition_S_prime(surf, r).passed
        rep_t = conditions.check_condition_T(surf)
        assert rep_t.passed and set(rep_t.params["orders"]) == {2}
        for c in ("mean", "sigma:1", "sigma:2", "gm:2"):
            assert conditions.check_main_assumption(pair, c).passed
    _C7_CLOCK.append(clock.elapsed)


@C7
def test_pear_main_assumption_witness_persists_under_refinement():
    with Timer() as clock:
        pair = make_family({"name": "pear", "params": {"eps": 0.1}})
        coarse = conditions.check_main_assumption(pair, "mean", grid=21)
        fine = conditions.check_main_assumption(pair, "mean", grid=41)
    assert not coarse.passed and not fine.passed
    # odd grids nest: every coarse witness is a node of the refined grid,
    # where it must still violate the ordering by more than 10 x tol
    fine_nodes = {tuple(np.round(x, 12)) for x in pair.interior_grid(41)[0]}
    for w in coarse.witnesses:
        assert tuple(np.round(w["x_prime"], 12)) in fine_nodes
    xp = np.array([w["x_prime"] for w in coarse.witnesses])
    _, _, upper, lower = conditions.sheet_values(pair, "mean", xp)
    assert np.all(upper - lower > 10 * fine.tolerance)
    _C7_CLOCK.append(clock.elapsed)


@C7
def test_dumbbell_fails_S_and_convexity():
    with Timer() as clock:
        surf = make_surface("dumbbell")
        rep_s = conditions.check_condition_S(surf)
        rep_c = symmetry.convexity_check(surf)
    assert not rep_s.passed and rep_s.witnesses
    assert not rep_c.passed
    assert abs(rep_c.witnesses[0]["location"][0]) < 0.1  # most negative curvature at the neck
    _C7_CLOCK.append(clock.elapsed)


@C7
def test_condition_checkers_total_runtime():
    assert len(_C7_CLOCK) == 3, "run the whole criterion-7 group"
    assert sum(_C7_CLOCK) < 30.0


# 8 ----------------------------------------------------------------------------

C8 = crit(8, "theorem pipelines")


@C8
def test_theorem_D_and_conjecture_1_pipelines():
    with Timer() as clock:
        surfaces = [FamilySpec("sphere"), FamilySpec("ellipsoid")]
        surfaces += [FamilySpec("random-symmetric", {"seed": s}) for s in range(5)]
        reports = [symmetry.verify_theorem_pipeline(make_surface(s), "D") for s in surfaces]
        for rep in reports:
            assert rep.consistent and not rep.alarm and rep.exit_code == 0, rep.to_dict()
            assert rep.hypotheses_pass and rep.conclusion_pass
        convex = []
        for name in sorted(catalog()):
            if name in ("custom", "torus"):
                continue
            surf = make_surface(name)
            if symmetry.convexity_check(surf).passed:
                convex.append(surf)
        assert {s.name for s in convex} >= {"sphere", "ellipsoid-of-revolution", "pear"}
        for surf in convex:
            rep = symmetry.verify_theorem_pipeline(surf, "conj1:2")
            assert rep.consistent and not rep.alarm and not rep.errors, rep.to_dict()
            assert "consistent with conjecture" in rep.verdict
    assert clock.elapsed < 120.0


# 9 ----------------------------------------------------------------------------

C9 = crit(9, "symmetry detection equivariance")


@C9
@pytest.mark.parametrize("name", ["sphere", "ellipsoid", "pear"])
@pytest.mark.parametrize("a", [0.7, -2.5, 13.0])
def test_vertical_translation_shifts_plane(name, a):
    base = symmetry.detect_symmetry_plane(make_family(name))
    moved = symmetry.detect_symmetry_plane(make_family({"name": name, "center": [0.0, 0.0, a]}))
    assert abs((moved.c - base.c) - a) <= 1e-12


@C9
def test_pear_detection_residual_large_and_stable():
    pair = make_family("pear")
    coarse = symmetry.detect_symmetry_plane(pair, grid=41)
    fine = symmetry.detect_symmetry_plane(pair, grid=81)
    assert not coarse.symmetric and not fine.symmetric
    assert coarse.residual > 1e-3 and fine.residual > 1e-3
    assert abs(coarse.residual - fine.residual) <= 0.05 * fine.residual


# 10 ---------------------------------------------------------------------------

C10 = crit(10, "Hopf harness")


@C10
def test_hopf_harness_examples():
    with Timer() as clock:
        diagonal = ["t**2 + t*y1**2", "t**2 + t**3/2 + t*y1**2", "3*t**2 + 2*t**3 + t*y1**2/2", "exp(-1/t**2)"]
        for expr in diagonal:
            pair = hopf.FunctionPair.from_expressions(expr, expr, 2)
            for variant in ("sigma:1", "sigma:2"):
                hyp, _ = hopf.check_hopf_hypotheses(pair, variant)
                assert hyp.passed, (expr, variant, hyp.params["items"])
            concl = hopf.check_hopf_conclusion(pair, rho=0.1)
            assert concl.passed and concl.params["holds"] == "A"
        zero = hopf.check_hopf_conclusion(hopf.builtin_pair("linear-zero"), rho=0.1)
        assert zero.params["holds"] == "B" and zero.params["conclusion_B"]
        assert [hopf.vanishing_order(f"t**{j}") for j in range(1, 7)] == [1, 2, 3, 4, 5, 6]
        assert hopf.vanishing_order("exp(-1/t**2)") is None
    assert clock.elapsed < 5.0


# 11 ---------------------------------------------------------------------------

C11 = crit(11, "Gamma cone properties")


@C11
def test_cone_nesting_random_samples():
    rng = np.random.default_rng(11)
    k = rng.normal(size=(10_000, 3)) * rng.uniform(0.1, 5, (10_000, 1))
    for m in (1, 2):
        inner, outer = in_gamma_m(k, m + 1), in_gamma_m(k, m)
        assert not np.any(inner & ~outer)
        assert inner.sum() > 100  # the samples actually exercise the nested cone


@C11
def test_g2_admissible_on_gamma2_samples():
    rng = np.random.default_rng(12)
    samples = []
    while len(samples) < 1000:
        k = rng.normal(size=(4000, 3)) + 0.5
        samples.extend(k[in_gamma_m(k, 2)])
    rep = check_g_admissible(CurvatureFunctionSpec("gm", 2), np.array(samples[:1000]))
    assert rep.passed and rep.samples == 1000


@C11
def test_raw_sigma2_fails_concavity_with_documented_direction():
    rep = check_g_admissible(CurvatureFunctionSpec("sigma", 2), np.array([[1.0, 1.0, 1.0]]))
    assert not rep.passed
    w = rep.witnesses[0]
    assert w["kind"] == "concavity" and abs(w["value"] - 2.0) <= 1e-12
    assert np.allclose(w["direction"], np.ones(3) / math.sqrt(3), atol=1e-12)


# 12 ---------------------------------------------------------------------------

C12 = crit(12, "reproducible suite reports")


@C12
def test_suite_reports_byte_identical(tmp_path):
    cfg = SuiteConfig.from_mapping({
        "seed": 5,
        "jobs": [
            {"id": "sphere-D", "kind": "verify", "surface": "sphere", "theorem": "D"},
            {"id": "ellipsoid-c1", "kind": "verify", "surface": "ellipsoid", "theorem": "conj1:2"},
            {"id": "pear-D", "kind": "verify", "surface": "pear", "theorem": "D"},
            {"id": "rand", "kind": "verify", "surface": {"name": "random-symmetric", "params": {"seed": 2}},
             "theorem": "B"},
            {"id": "hopf", "kind": "hopf", "pair": "diagonal-cubic", "variant": "op2:1"},
            {"id": "cones", "kind": "cone", "n": 3, "samples": 2000},
            {"id": "typo", "kind": "verify", "surface": "spehre", "theorem": "D"},
        ],
    })
    a = run_suite(cfg, tmp_path / "a", jobs=1)
    b = run_suite(cfg, tmp_path / "b", jobs=2)
    names = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert names == sorted(p.name for p in (tmp_path / "b").iterdir())
    for name in names:
        if name == "metadata.json":
            continue
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes(), name
    summary = json.loads((tmp_path / "a" / "summary.json").read_text())
    assert summary["seed"] == 5 and a.exit_code == b.exit_code == 1
    assert summary["errors"] == ["typo"]
