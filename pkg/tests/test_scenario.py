import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from evotherm.exceptions import ParseError, ValidationError
from evotherm.scenario import (
    RECOVERED_FIELDS,
    TRAJECTORY_FIELDS,
    SourceProfile,
    bundled_scenarios,
    load_scenario,
    parse_scenario,
)

MINIMAL = {"grid": {"cells": [8]}}


def _doc(**sections):
    doc = json.loads(json.dumps(MINIMAL))
    doc.update(sections)
    return json.dumps(doc)


def test_minimal_document_defaults():
    sc = parse_scenario(json.dumps(MINIMAL))
    assert sc.name == "scenario" and sc.variant == "two_temperature"
    assert sc.grid.cells == (8,) and sc.grid.lengths == (1.0,)
    assert sc.axis.nu == 1.0 and sc.axis.dt == 1e-3 and sc.axis.t_start == 0.0
    assert sc.material["alpha"] == 0.1 and sc.material["lambda"] == 1.0
    assert sc.outputs == {"fields": list(TRAJECTORY_FIELDS), "recovered": list(RECOVERED_FIELDS),
                          "report": True}
    F, Q = sc.forcing()
    assert not np.any(F) and not np.any(Q)


@pytest.mark.parametrize("key", ["alpha", "beta", "eps", "kappa", "T0", "lambda", "rho0"])
def test_non_positive_material_values(key):
    with pytest.raises(ValidationError, match=f"{key} must be positive") as info:
        parse_scenario(_doc(material={key: -1.0}))
    assert info.value.path == f"material.{key}"
    with pytest.raises(ValidationError):
        parse_scenario(_doc(material={key: 0.0}))


def test_variant_specific_parameters_required():
    with pytest.raises(ValidationError, match="beta required for two_strain"):
        parse_scenario(_doc(variant="two_strain"))
    with pytest.raises(ValidationError, match="eps required for yosida"):
        parse_scenario(_doc(variant="yosida"))
    assert parse_scenario(_doc(variant="yosida", material={"eps": 0.1})).material["eps"] == 0.1
    with pytest.raises(ValidationError, match="unknown variant"):
        parse_scenario(_doc(variant="maxwell"))


def test_unknown_key_is_a_parse_error():
    with pytest.raises(ParseError, match="unknown key 'colour'"):
        parse_scenario(_doc(colour="red"))
    with pytest.raises(ParseError) as info:
        parse_scenario(_doc(material={"alhpa": 0.1}))
    assert info.value.path == "material"


def test_malformed_json_reports_line_and_column():
    with pytest.raises(ParseError) as info:
        parse_scenario('{\n  "grid": {"cells": [8]},\n  "name": \n}')
    assert info.value.path == "line 4 column 1"


def test_duplicate_key_rejected():
    with pytest.raises(ParseError, match="duplicate key 'grid'"):
        parse_scenario('{"grid": {"cells": [8]}, "grid": {"cells": [4]}}')


@pytest.mark.parametrize("sections, path", [
    (dict(material={"alpha": "0.1"}), "material.alpha"),
    (dict(material={"alpha": True}), "material.alpha"),
    (dict(time={"steps": 10.5}), "time.steps"),
    (dict(grid={"cells": 8}), "grid.cells"),
    (dict(outputs={"report": "yes"}), "outputs.report"),
    (dict(sources={"Q": {"profile": "gaussian-pulse", "center": [0.5], "direction": [1.0]}}),
     "sources.Q.direction"),
])
def test_wrong_types_are_parse_errors(sections, path):
    with pytest.raises(ParseError) as info:
        parse_scenario(_doc(**sections))
    assert info.value.path == path


def test_grid_and_time_validation():
    for grid in ({"cells": [1]}, {"cells": [4, 4, 4]}, {"dimension": 2, "cells": [4]}):
        with pytest.raises(ValidationError):
            parse_scenario(json.dumps({"grid": grid}))
    with pytest.raises(ParseError):
        parse_scenario(json.dumps({"name": "x"}))
    with pytest.raises(ValidationError):
        parse_scenario(_doc(time={"steps": 0}))
    with pytest.raises(ValidationError, match="dt must be positive"):
        parse_scenario(_doc(time={"dt": -1e-3}))
    with pytest.raises(ValidationError, match="unknown field"):
        parse_scenario(_doc(outputs={"recovered": ["entropy"]}))


def test_elasticity_forms():
    sc = parse_scenario(_doc(material={"elasticity": [1.0] * 8}))
    assert sc.build_material().C.shape == (8, 8)
    with pytest.raises(ValidationError, match="per-cell elasticity"):
        parse_scenario(_doc(material={"elasticity": [1.0] * 3}))
    with pytest.raises(ValidationError, match="2D grid"):
        parse_scenario(_doc(material={"elasticity": {"lame_lambda": 1.0, "lame_mu": 1.0}}))
    text = json.dumps({"grid": {"cells": [3, 3]},
                       "material": {"elasticity": [[3, 1, 0], [1, 3, 0], [0, 0, 2]]}})
    assert parse_scenario(text).build_material().C.shape == (27, 27)
    bad = json.dumps({"grid": {"cells": [3, 3]},
                      "material": {"elasticity": [[3, 1, 0], [2, 3, 0], [0, 0, 2]]}})
    with pytest.raises(ValidationError, match="symmetric"):
        parse_scenario(bad)


def test_indefinite_elasticity_parses_but_is_kept():
    # positivity of C is left to the well-posedness certificate
    C = [1.0] * 8
    C[3] = -0.5
    sc = parse_scenario(_doc(material={"elasticity": C}))
    assert sc.build_material().C[3, 3] == -0.5


def test_gaussian_pulse_profile():
    p = SourceProfile("gaussian-pulse", amplitude=2.0, center=(0.5,), width=0.1, onset=0.2, duration=0.1)
    t = np.array([0.1, 0.2, 0.25, 0.3, 0.4])
    assert np.allclose(p.time_factor(t), [0, 0, 1, 0, 0], rtol=0, atol=1e-15)
    x = np.array([[0.5], [0.6]])
    assert np.allclose(p.space_factor(x), [1.0, np.exp(-0.5)], rtol=0, atol=1e-15)
    assert np.allclose(p.sample([0.25], x), [[2.0, 2.0 * np.exp(-0.5)]], rtol=0, atol=1e-15)


def test_constant_patch_profile_and_direction():
    p = SourceProfile("constant-patch", lower=(0.2, 0.2), upper=(0.4, 0.4), onset=0.1)
    assert np.array_equal(p.time_factor([0.0, 0.1, 5.0]), [0.0, 1.0, 1.0])
    x = np.array([[0.3, 0.3], [0.5, 0.3]])
    assert np.array_equal(p.space_factor(x), [1.0, 0.0])
    stacked = p.sample([0.2], x, components=2)
    assert np.array_equal(stacked, [[1.0, 0.0, 0.0, 0.0]])
    q = SourceProfile("constant-patch", lower=(0.0, 0.0), upper=(1.0, 1.0), direction=(0.0, 3.0))
    assert np.array_equal(q.sample([0.0], x, components=2), [[0.0, 0.0, 3.0, 3.0]])
    limited = SourceProfile("constant-patch", lower=(0.0,), upper=(1.0,), duration=0.5)
    assert np.array_equal(limited.time_factor([0.0, 0.49, 0.5]), [1.0, 1.0, 0.0])


def test_source_validation():
    with pytest.raises(ValidationError, match="unknown profile"):
        parse_scenario(_doc(sources={"Q": {"profile": "ramp"}}))
    with pytest.raises(ValidationError, match="needs a center"):
        parse_scenario(_doc(sources={"Q": {"profile": "gaussian-pulse"}}))
    with pytest.raises(ValidationError, match="needs lower"):
        parse_scenario(_doc(sources={"Q": {"profile": "constant-patch", "upper": [1.0]}}))
    with pytest.raises(ParseError):
        parse_scenario(_doc(sources={"Q": {"profile": "gaussian-pulse", "center": [0.5, 0.5]}}))


def test_bundled_scenarios_load_and_assemble():
    names = bundled_scenarios()
    assert {"default_2T_1d", "default_2T_2d"} <= set(names)
    for name in names:
        sc = load_scenario(name)
        assert sc.name == name
        system = sc.build_system()
        J = sc.source(system)
        assert J.shape == (sc.axis.steps + 1, system.size) and np.any(J)
    assert load_scenario("default_2T_1d.json").name == "default_2T_1d"


def test_load_from_file_and_missing(tmp_path):
    path = tmp_path / "mine.json"
    path.write_text(_doc(name="mine"))
    assert load_scenario(str(path)).name == "mine"
    with pytest.raises(FileNotFoundError):
        load_scenario(str(tmp_path / "absent.json"))


def test_material_overrides():
    sc = load_scenario("default_2T_1d")
    m = sc.build_material(alpha=0.5, eps=0.2)
    assert m.alpha == 0.5 and m.eps == 0.2 and m.lam == 1.0


@settings(max_examples=30, deadline=None)
@given(key=st.sampled_from(["alpha", "beta", "eps", "kappa", "T0", "lambda", "rho0"]),
       value=st.floats(max_value=0.0, allow_nan=False, allow_infinity=False))
def test_any_non_positive_value_is_rejected(key, value):
    with pytest.raises(ValidationError, match="must be positive"):
        parse_scenario(_doc(material={key: value}))


@settings(max_examples=30, deadline=None)
@given(value=st.floats(min_value=1e-6, max_value=1e6))
def test_any_positive_alpha_is_accepted(value):
    assert parse_scenario(_doc(material={"alpha": value})).material["alpha"] == value


def test_bundled_scenarios_match_shipped_schema():
    jsonschema = pytest.importorskip("jsonschema")
    import pathlib
    from importlib import resources

    root = pathlib.Path(__file__).resolve().parents[1]
    schema = json.loads((root / "docs" / "scenario.schema.json").read_text())
    jsonschema.Draft202012Validator.check_schema(schema)
    validator = jsonschema.Draft202012Validator(schema)
    docs = [json.loads((resources.files("evotherm") / "scenarios" / f"{n}.json").read_text())
            for n in bundled_scenarios()]
    docs.append(json.loads((root / "tests" / "data" / "indefinite_C_1d.json").read_text()))
    for doc in docs:
        validator.validate(doc)
    assert not validator.is_valid({"grid": {"cells": [8]}, "colour": "red"})
