import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hypersym.hopf import (
    BUILTIN_PAIRS,
    FunctionPair,
    HalfCylinderDomain,
    ScalarFunction,
    builtin_pair,
    check_hopf_conclusion,
    check_hopf_hypotheses,
    find_level_matches,
    flat_splice_family,
    graph_curvatures,
    parse_variant,
    run_hopf,
    scaled_quadratic_family,
    search_counterexample,
    vanishing_order,
)


# -- functions and curvatures ---------------------------------------------------------------


def test_scalar_function_derivatives():
    f = ScalarFunction(2, "t**2*y1 + sin(t)")
    v, g, h = f.evaluate(np.array([[0.5, 0.2]]))
    assert v[0] == pytest.approx(0.05 + np.sin(0.5))
    assert np.allclose(g[0], [2 * 0.5 * 0.2 + np.cos(0.5), 0.25])
    assert np.allclose(h[0], [[0.4 - np.sin(0.5), 1.0], [1.0, 0.0]])
    assert f.laplacian(np.array([[0.5, 0.2]]))[0] == pytest.approx(0.4 - np.sin(0.5))


def test_scalar_function_rejects_unknown_symbols():
    with pytest.raises(ValueError):
        ScalarFunction(2, "t + z")
    with pytest.raises(ValueError):
        ScalarFunction(2)


def test_removable_singularity_on_face_uses_limit():
    f = ScalarFunction(2, "exp(-1/t**2)")
    v, g, h = f.evaluate(np.array([[0.0, 0.3]]))
    assert v[0] == 0.0 and np.all(g == 0.0) and np.all(h == 0.0)


def test_callable_function_matches_symbolic():
    sym = ScalarFunction(2, "t**3 + t*y1**2")
    num = ScalarFunction.from_callable(2, lambda P: P[:, 0] ** 3 + P[:, 0] * P[:, 1] ** 2)
    P = np.array([[0.3, 0.2], [0.7, -0.5]])
    for a, b, atol in zip(sym.evaluate(P), num.evaluate(P), (0, 1e-9, 1e-6)):
        assert np.allclose(a, b, atol=atol)


def test_paraboloid_and_sphere_cap_curvatures():
    para = ScalarFunction(2, "(t**2 + y1**2)/2")
    assert np.allclose(graph_curvatures(para, [0.0, 0.0]).k, 1.0)
    cap = ScalarFunction(2, "2 - sqrt(4 - t**2 - y1**2)")
    assert np.allclose(graph_curvatures(cap, [0.3, -0.4]).k, 0.5, atol=1e-12)


# -- domain and matches ---------------------------------------------------------------


def test_domain_grid():
    dom = HalfCylinderDomain(2, 4)
    assert dom.t_nodes.tolist() == [0.0, 0.25, 0.5, 0.75]
    assert dom.y_nodes[:, 0].tolist() == [-0.5, 0.0, 0.5]
    assert dom.points().shape == (9, 2) and dom.face().shape == (3, 2)
    assert np.all(np.linalg.norm(HalfCylinderDomain(3, 6).y_nodes, axis=-1) < 1)


def test_identity_pair_matches_on_diagonal():
    matches, counts = find_level_matches(builtin_pair("identity"), 8)
    assert matches and np.all(counts == 1)
    for mt in matches:
        assert mt.t == pytest.approx(mt.s, abs=1e-15)


def test_linear_half_match_formula():
    matches, _ = find_level_matches(builtin_pair("linear-half"), 8)
    for mt in matches:
        assert mt.t == pytest.approx(mt.s / 2, abs=1e-15)


def test_matches_do_not_depend_on_variant():
    pair = builtin_pair("diagonal-cubic")
    _, m1 = check_hopf_hypotheses(pair, "sigma:1", grid=8)
    _, m2 = check_hopf_hypotheses(pair, "laplace", grid=8)
    assert [(a.t, a.s, a.y) for a in m1] == [(b.t, b.s, b.y) for b in m2]


def test_vanishing_orders():
    assert [vanishing_order(f"t**{j}") for j in range(1, 7)] == [1, 2, 3, 4, 5, 6]
    assert vanishing_order("exp(-1/t**2)") is None
    assert vanishing_order("t**2 + exp(-1/t**2)") == 2
    assert vanishing_order("t**9", max_order=8) is None


@pytest.mark.parametrize("text, parsed", [
    ("sigma:2", ("sigma", 2)), ("OP2:1", ("op2", 1)), ("laplace", ("laplace", None)), ("conj4", ("conj4", None)),
])
def test_parse_variant(text, parsed):
    assert parse_variant(text) == parsed


@pytest.mark.parametrize("bad", ["sigma", "op3:1", "poisson"])
def test_parse_variant_rejects(bad):
    with pytest.raises(ValueError):
        parse_variant(bad)


# -- hypotheses and conclusions ---------------------------------------------------------------


@pytest.mark.parametrize("name", ["diagonal-quadratic", "diagonal-cubic"])
@pytest.mark.parametrize("variant", ["sigma:1", "sigma:2", "laplace", "conj3", "conj4"])
def test_diagonal_pairs_are_consistent(name, variant):
    run = run_hopf(builtin_pair(name), variant, grid=8)
    assert run.hypotheses.passed and run.conclusion.params["holds"] == "A"
    assert run.exit_code == 0 and not run.alarm


@pytest.mark.parametrize("name", ["identity", "linear-zero"])
def test_linear_pairs_fail_only_the_derivative_condition(name):
    hyp, _ = check_hopf_hypotheses(builtin_pair(name), "sigma:1", grid=8)
    failed = [k for k, ok in hyp.params["items"].items() if not ok]
    assert failed == ["u_t(0,0)=0"]


def test_laplace_without_extra_conditions_is_not_a_claim():
    run = run_hopf(builtin_pair("linear-half"), "laplace", grid=8)
    assert run.hypotheses.passed and not run.conclusion.passed
    assert not run.alarm and run.exit_code == 0
    assert run.verdict == "hypotheses pass without the extra conditions; conclusion not expected"
    conj = run_hopf(builtin_pair("linear-half"), "conj3", grid=8)
    assert not conj.hypotheses.passed and conj.hypotheses.params["items"]["u_t(0,0)=0"] is False


def test_quad_scaled_sigma2_is_flagged_for_review():
    run = run_hopf(builtin_pair("quad-scaled"), "sigma:2", grid=8)
    assert run.alarm and run.exit_code == 2
    # sigma_2 vanishes on both cylindrical graphs: degenerate, outside Gamma_2
    assert run.hypotheses.params["gamma_m_at_matches"] is False
    assert run.to_dict()["verdict"].startswith("counterexample candidate")


def test_quad_scaled_sigma1_fails_comparison():
    hyp, _ = check_hopf_hypotheses(builtin_pair("quad-scaled"), "sigma:1", grid=8)
    assert hyp.params["items"]["comparison"] is False
    w = next(w for w in hyp.witnesses if w["item"] == "comparison")
    assert w["lhs"] > w["rhs"]


def test_flat_diagonal_fails_conj4_only_on_order():
    hyp, _ = check_hopf_hypotheses(builtin_pair("flat-diagonal"), "conj4", grid=8)
    items = hyp.params["items"]
    assert items["finite-vanishing-order"] is False
    assert [k for k, ok in items.items() if not ok] == ["finite-vanishing-order"]


def test_reflection_condition():
    # w(t) = v(t) for t >= 0 and u(-t) for t < 0 is smooth iff the odd Taylor terms cancel
    ok, _ = check_hopf_hypotheses(FunctionPair.from_expressions("t**2", "t**2"), "op2:1", grid=8)
    assert ok.params["items"]["reflection"] is True
    bad, _ = check_hopf_hypotheses(FunctionPair.from_expressions("t**2 + t**3", "t**2 + t**3"), "op2:1", grid=8)
    assert bad.params["items"]["reflection"] is False
    assert next(w for w in bad.witnesses if w["item"] == "reflection")["order"] == 3
    kink, _ = check_hopf_hypotheses(builtin_pair("diagonal-quadratic"), "op2:1", grid=8)
    w = next(w for w in kink.witnesses if w["item"] == "reflection")
    assert w["order"] == 1 and w["y"] != [0.0]


def test_m_out_of_range():
    with pytest.raises(ValueError):
        check_hopf_hypotheses(builtin_pair("identity", 2), "sigma:3")


def test_conclusion_B_and_rho_validation():
    rep = check_hopf_conclusion(builtin_pair("linear-zero"), 0.1)
    assert rep.params["holds"] == "B"
    with pytest.raises(ValueError):
        check_hopf_conclusion(builtin_pair("identity"), 0.0)


@settings(max_examples=12)
@given(st.floats(0.5, 2.0), st.floats(-0.5, 0.5), st.floats(0.0, 1.0))
def test_diagonal_family_property(a, b, c):
    e = f"{a}*t**2 + {b}*t**3 + {c}*t*y1**2"
    pair = FunctionPair.from_expressions(e, e, 2)
    run = run_hopf(pair, "sigma:1", grid=6)
    # u = v: comparison holds with equality and conclusion A holds
    assert run.hypotheses.params["items"]["comparison"] is True
    assert run.conclusion.params["holds"] == "A" and not run.alarm


def test_builtins_cover_all_dimensions():
    for name in BUILTIN_PAIRS:
        for n in (1, 2, 3):
            assert builtin_pair(name, n).n == n
    with pytest.raises(ValueError):
        builtin_pair("nope")


# -- search ---------------------------------------------------------------


def test_scaled_quadratic_search():
    res = search_counterexample(scaled_quadratic_family([0.25, 0.5, 1.0]), grid=6)
    passing = [c for c in res.candidates if c["hypotheses_pass"]]
    assert [c["param"] for c in passing] == [1.0] and passing[0]["conclusion"] == "A"
    assert not res.budget_exhausted and res.outside_scope == []


def test_flat_splice_search_flags_scope():
    res = search_counterexample(flat_splice_family([0.0, 1.0]), grid=6)
    assert res.outside_scope == [0.0]
    assert res.to_dict()["outside_conjecture4_scope"] == [0.0]


def test_search_budget_and_empty_family():
    res = search_counterexample(scaled_quadratic_family([0.5, 1.0, 2.0]), budget=2, grid=6)
    assert res.budget_exhausted and len(res.candidates) == 2
    with pytest.raises(ValueError):
        search_counterexample([], grid=6)
