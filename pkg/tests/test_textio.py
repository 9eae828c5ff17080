import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from nondiv import textio
from nondiv.exact_lattice import ExteriorVector
from nondiv.textio import ConfigError


def test_parse_entry():
    assert textio.parse_entry("3/4") == Fraction(3, 4)
    assert textio.parse_entry("2") == Fraction(2)
    assert isinstance(textio.parse_entry("0.5"), float)
    assert isinstance(textio.parse_entry("1e-3"), float)
    with pytest.raises(ValueError):
        textio.parse_entry(True)


def test_parse_matrices_blocks_and_comments():
    mats = textio.parse_matrices("# two matrices\n1 0\n0 1\n\n2 1/2  # exact\n0 1/2\n")
    assert len(mats) == 2 and mats[1].dtype == object and mats[1][0, 1] == Fraction(1, 2)
    assert textio.parse_matrices("1.5 0\n0 2\n")[0].dtype == float


def test_parse_matrices_errors_are_line_anchored():
    with pytest.raises(ConfigError) as exc:
        textio.parse_matrices("1 0\n0 1 2\n", "m.txt")
    assert str(exc.value).startswith("m.txt:2:")
    with pytest.raises(ConfigError) as exc:
        textio.parse_matrices("1 0\n\n\n1 x\n", "m.txt")
    assert exc.value.line == 4


def test_read_missing(tmp_path):
    with pytest.raises(ConfigError):
        textio.read_matrices(tmp_path / "nope.txt")


def test_vector_json_roundtrip():
    v = ExteriorVector(3, 2, {(0, 1): Fraction(3, 4), (1, 2): Fraction(-2)})
    obj = textio.vector_to_json(v)
    assert obj == {"degree": 2, "components": {"1,2": "3/4", "2,3": -2}}
    assert textio.vector_from_json(json.loads(json.dumps(obj)), 3) == v
    with pytest.raises(ValueError):
        textio.vector_from_json({"degree": 2, "components": {"1,1": 1}}, 3)
    with pytest.raises(ValueError):
        textio.vector_from_json({"degree": 1, "components": {"4": 1}}, 3)


def test_load_config_line_numbers(tmp_path):
    p = tmp_path / "c.json"
    p.write_text('{"schema": 1,\n "g": [[1, 2],\n [3 4]]}\n')
    with pytest.raises(ConfigError) as exc:
        textio.load_config(p)
    assert exc.value.line == 3
    p.write_text('{\n "schema": 7\n}\n')
    with pytest.raises(ConfigError) as exc:
        textio.load_config(p)
    assert exc.value.line == 2


def test_subgroup_from_json():
    H = textio.subgroup_from_json("sl2-unipotent")
    assert H.n == 2 and H.dim == 1
    H = textio.subgroup_from_json({"lie_basis": [[[1, 0, 0], [0, 1, 0], [0, 0, -2]]],
                                   "window": [0, 1], "stable_source": {"torus": [1, 1, -2]}})
    assert H.n == 3
    with pytest.raises(ValueError):
        textio.subgroup_from_json({"fixture": "nope"})


def test_dumps_format():
    text = textio.dumps({"a": 1.0, "b": 0.1, "c": Fraction(1, 3), "d": np.float64(2), "e": float("inf"),
                         "f": [1, 2], "g": np.array([[1.5]])})
    obj = json.loads(text)
    assert obj["schema"] == 1 and list(obj)[0] == "schema"
    assert '"a": 1.0' in text and '"b": 0.10000000000000001' in text
    assert obj["c"] == "1/3" and obj["e"] == "inf" and obj["g"] == [[1.5]]


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_dumps_float_roundtrip(x):
    assert json.loads(textio.dumps({"x": x}))["x"] == x
