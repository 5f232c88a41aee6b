import json
import math

import numpy as np
import pytest

from hypersym.report import CheckReport, dumps, emit_plotdata, to_jsonable


def test_failed_report_needs_witness():
    with pytest.raises(ValueError):
        CheckReport("x", False)
    assert not CheckReport("x", False, [{"residual": 1.0}])
    assert CheckReport("x", True)


def test_non_finite_values_become_strings():
    doc = to_jsonable({"a": np.array([1.0, np.inf, -np.inf, np.nan]), "b": np.int64(3), "c": np.bool_(True)})
    assert doc == {"a": [1.0, "inf", "-inf", "nan"], "b": 3, "c": True}
    json.loads(dumps(doc))


def test_floats_round_trip():
    x = 0.1 + 0.2
    assert json.loads(dumps({"x": x}))["x"] == x


def test_report_dict_shape():
    d = CheckReport("x", True, residuals=[np.float64(1e-17)], params={"k": np.arange(2)}).to_dict()
    assert d["pass"] is True and d["params"] == {"k": [0, 1]} and d["residuals"] == [1e-17]


def test_emit_plotdata(tmp_path):
    p = emit_plotdata([(0, math.pi), (1, 1 / 3)], tmp_path / "sub" / "x.csv", ["i", "v"])
    lines = p.read_text().splitlines()
    assert lines[0] == "i,v" and lines[1] == "0,3.1415926535897931"
    assert float(lines[2].split(",")[1]) == 1 / 3
    with pytest.raises(ValueError):
        emit_plotdata([], tmp_path / "y.csv", ["a"])
