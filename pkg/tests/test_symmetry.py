import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hypersym.curvature import CurvatureError
from hypersym.families import make_family, make_surface
from hypersym.geometry import ClosedGraphPair
from hypersym.report import CheckReport
from hypersym.symmetry import (
    PipelineReport,
    SymmetryVerdict,
    convexity_check,
    curvature_equality_check,
    detect_symmetry_plane,
    gamma_image_check,
    parse_theorem,
    verify_theorem_pipeline,
)

PEAR = make_family("pear")


def test_sphere_plane_follows_center():
    pair = make_family({"name": "sphere", "center": [0.0, 0.0, 0.7]})
    v = detect_symmetry_plane(pair)
    assert v.symmetric and v.c == pytest.approx(0.7, abs=1e-12)
    assert v.to_dict()["c"] == v.c


@settings(max_examples=10)
@given(st.floats(-3, 3), st.floats(0.5, 2.0))
def test_ellipsoid_plane_height(z0, b):
    pair = make_family({"name": "ellipsoid", "params": {"a": 1.5, "b": b}, "center": [0.2, -0.1, z0]})
    v = detect_symmetry_plane(pair, grid=15)
    assert v.symmetric and v.c == pytest.approx(z0, abs=1e-10)


def test_pear_is_not_symmetric():
    v = detect_symmetry_plane(PEAR)
    assert not v.symmetric and v.residual > 100 * v.tolerance
    assert v.to_dict()["c"] is None and v.to_dict()["c_candidate"] == v.c


@pytest.mark.parametrize("c", ["mean", "sigma:2", "gm:2"])
def test_equality_on_symmetric_and_asymmetric(c):
    assert curvature_equality_check(make_family("ellipsoid"), c).passed
    rep = curvature_equality_check(PEAR, c)
    assert not rep.passed and rep.witnesses[0]["residual"] > rep.tolerance


def test_convexity():
    assert convexity_check(make_surface("ellipsoid")).passed
    rep = convexity_check(make_surface("dumbbell"))
    assert not rep.passed
    k = rep.witnesses[0]["curvatures"]
    assert min(k) == pytest.approx(-rep.witnesses[0]["residual"])


def test_gamma_image():
    assert gamma_image_check(make_surface("pear"), 2).passed
    assert not gamma_image_check(make_surface("dumbbell"), 2).passed


@pytest.mark.parametrize("text, expected", [
    ("A", ("A", None)), ("d", ("D", None)), ("conj1", ("conj1", 2)), ("conj1:3", ("conj1", 3)), ("conj2", ("conj2", None)),
])
def test_parse_theorem(text, expected):
    assert parse_theorem(text) == expected


@pytest.mark.parametrize("bad", ["E", "conj3", "theorem"])
def test_parse_theorem_rejects(bad):
    with pytest.raises(ValueError):
        parse_theorem(bad)


def test_sphere_D_consistent():
    rep = verify_theorem_pipeline(make_surface("sphere"), "D")
    assert rep.hypotheses_pass and rep.conclusion_pass and rep.exit_code == 0
    assert rep.verdict.startswith("consistent with theorem: hypotheses pass")


def test_pear_D_hypotheses_fail_without_equality_check():
    rep = verify_theorem_pipeline(make_surface("pear"), "D")
    assert not rep.hypotheses_pass and rep.equality is None
    assert rep.conclusion_pass is False and not rep.alarm and rep.exit_code == 0
    assert "not challenged" in rep.verdict


def test_ellipsoid_conj1_consistent_with_conjecture():
    rep = verify_theorem_pipeline(make_surface("ellipsoid"), "conj1:2")
    assert rep.verdict.startswith("consistent with conjecture: hypotheses pass")
    assert rep.equality.passed and rep.params["curvature"] == "sigma:2"


@pytest.mark.parametrize("theorem", ["A", "B", "C"])
def test_other_theorems_on_ellipsoid(theorem):
    rep = verify_theorem_pipeline(make_surface("ellipsoid"), theorem)
    assert rep.hypotheses_pass and rep.conclusion_pass and not rep.errors


def test_torus_reports_failed_decomposition_hypothesis():
    rep = verify_theorem_pipeline(make_surface("torus"), "D")
    first = rep.hypotheses[0]
    assert first.name == "graph-decomposition" and not first.passed
    assert rep.symmetry is None and rep.conclusion_pass is None and not rep.alarm
    # the tangency search of S' has no implicit-surface support: recorded, exit 1
    assert rep.errors and "check_condition_S_prime" in rep.errors[0] and rep.exit_code == 1


def test_conj1_order_out_of_range():
    with pytest.raises(CurvatureError):
        verify_theorem_pipeline(make_surface("sphere"), "conj1:3")


def test_alarm_report_structure():
    ok = CheckReport("h", True)
    rep = PipelineReport("conj2", "synthetic", [ok], SymmetryVerdict(False, 0.0, 1.0, 1e-6), None)
    assert rep.alarm and rep.exit_code == 2 and rep.verdict.startswith("INCONSISTENCY ALARM")
    d = rep.to_dict()
    assert d["alarm"] and d["exit_code"] == 2 and not d["consistent"]


def test_checker_errors_are_recorded():
    rep = verify_theorem_pipeline(make_family("pear"), "B", {"max_order": 8})
    # condition T needs profile access; a graph pair from a surface still has it
    assert not rep.errors
    bare = ClosedGraphPair.from_functions(
        2, 1.0, lambda x: np.sqrt(np.maximum(1 - np.sum(x**2, -1), 0)),
        lambda x: -np.sqrt(np.maximum(1 - np.sum(x**2, -1), 0)))
    rep = verify_theorem_pipeline(bare, "B")
    assert rep.errors and rep.exit_code == 1 and "check_condition_T" in rep.errors[0]
