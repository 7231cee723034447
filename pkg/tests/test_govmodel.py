import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from govdisc.errors import ConfigError, CorruptionError, FormatError, SchemaError
from govdisc.featlib import evaluate_library
from govdisc.govmodel import (
    FIXTURE_FILES,
    PiecewiseToolModel,
    dumps_model,
    load_fixture,
    load_model,
    loads_model,
    pretty_print,
    reference_build_model,
    reference_tool_model,
    rhs_build,
    rhs_tool,
    save_model,
)
from govdisc.sparsereg import SparseModel
from govdisc.timeseries import Stage


def test_heating_rhs_hand_value(tool135):
    val = rhs_tool(tool135, Stage.HEAT, 100.0, {"omega": 135.0, "T_f": 10.0})
    assert val == pytest.approx(0.068005 + 0.207437 - 0.247874, abs=2e-6)
    assert val == pytest.approx(0.02757, abs=1e-5)


@pytest.mark.parametrize("stage", [Stage.COOL, "cool", "Cool", 1])
def test_cooling_rhs_at_zero_is_constant_term(tool135, stage):
    assert rhs_tool(tool135, stage, 0.0) == pytest.approx(0.3282, rel=1e-15)


def test_cooling_equilibrium(tool135):
    b1, b2, b3 = 0.3282, 0.0135, 6.0601e-6
    root = (-b2 + math.sqrt(b2 * b2 + 4 * b3 * b1)) / (2 * b3)
    assert root == pytest.approx(24.06, abs=0.01)
    assert abs(rhs_tool(tool135, "cool", root)) < 1e-12
    assert abs(rhs_tool(tool135, "cool", 24.06)) < 1e-3


def test_missing_input_channel(tool135):
    with pytest.raises(SchemaError, match="T_f"):
        rhs_tool(tool135, "heat", 100.0, {"omega": 135.0})


def test_build_rhs_examples(build135):
    c1, c2, c3, c4 = -6.3398e-10, -4.6003e-6, 2.1208e-7, 4.3869e-8
    assert rhs_build(build135, 100.0, 0.0, 0.0) == pytest.approx(-6.3398e-2, rel=1e-12)
    assert rhs_build(build135, 0.0, 0.0, 10.0) == pytest.approx(c4 * 1000, rel=1e-12)
    assert rhs_build(build135, 50.0, 300.0, 0.0) == pytest.approx(c1 * 50.0**4, rel=1e-12)
    T, Tt, d = 80.0, 250.0, 12.0
    expected = c1 * T**4 + c2 * Tt * d**2 + c3 * Tt**2 * d**2 + c4 * d**3
    assert rhs_build(build135, T, Tt, d) == pytest.approx(expected, rel=1e-12)
    with pytest.raises(ConfigError):
        rhs_build(build135, T, Tt, -1.0)


@settings(max_examples=50, deadline=None)
@given(st.floats(0, 600), st.floats(100, 400), st.floats(0, 120))
def test_rhs_equals_library_row_dot_coefficients(T, omega, tf):
    m = reference_tool_model("135")
    sub = m.heating
    row = evaluate_library(sub.library, {"T_tool": np.array([T]), "omega": np.array([omega]), "T_f": np.array([tf])})
    expected = float(row.values[0] @ sub.xi)
    got = rhs_tool(m, "heat", T, {"omega": omega, "T_f": tf})
    assert got == pytest.approx(expected, rel=1e-14, abs=1e-300)


@settings(max_examples=100, deadline=None)
@given(st.floats(24.1, 1000.0))
def test_cooling_negative_above_equilibrium(T):
    assert rhs_tool(reference_tool_model("135"), "cool", T) < 0


@settings(max_examples=100, deadline=None)
@given(st.floats(0.0, 24.0, exclude_max=True))
def test_cooling_positive_below_equilibrium(T):
    assert rhs_tool(reference_tool_model("135"), "cool", T) > 0


@pytest.mark.parametrize("name", ["135", "115", "135&115"])
def test_tool_round_trip(tmp_path, name):
    m = reference_tool_model(name)
    path = tmp_path / "m.model"
    save_model(m, path)
    back = load_model(path)
    assert back == m
    assert np.array_equal(back.heating.xi, m.heating.xi)
    assert np.array_equal(back.cooling.xi, m.cooling.xi)


def test_build_round_trip(tmp_path, build135):
    save_model(build135, tmp_path / "b.model")
    back = load_model(tmp_path / "b.model")
    assert back == build135
    assert np.array_equal(back.model.xi, build135.model.xi)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(allow_nan=False, allow_infinity=False, min_value=-1e300, max_value=1e300),
                min_size=3, max_size=3))
def test_round_trip_keeps_every_bit(coefs):
    m = reference_tool_model("135")
    lib = m.cooling.library
    terms = [({}, coefs[0]), ({"T_tool": 1}, coefs[1]), ({"T_tool": 2}, coefs[2])]
    cool = SparseModel.from_terms(lib, "T_tool", terms)
    model = PiecewiseToolModel(m.heating, cool)
    back = loads_model(dumps_model(model))
    assert np.array_equal(back.cooling.xi, cool.xi)


def test_unknown_format_version(tool135):
    text = dumps_model(tool135).replace("govdisc-model 1", "govdisc-model 9", 1)
    with pytest.raises(FormatError):
        loads_model(text)


def test_checksum_mismatch(tool135):
    text = dumps_model(tool135).replace("3.28199999999999992e-01", "3.28299999999999992e-01")
    with pytest.raises(CorruptionError):
        loads_model(text)


def test_hand_written_file_loads_with_expected_terms():
    import hashlib

    body = """[metadata]
kind = tool
[model heating]
state = T_tool
features = T_tool omega T_f
max_degree = 4
symbols = T_tool:T omega:ω
[terms heating]
omega^3 T_f^1 | 2.7640e-9
T_tool^1 omega^2 T_f^1 | 1.1382e-8
T_tool^3 omega^1 | -1.8361e-9
[model cooling]
state = T_tool
features = T_tool
max_degree = 4
symbols = T_tool:T
[terms cooling]
1 | 0.3282
T_tool^1 | -0.0135
T_tool^2 | -6.0601e-6
"""
    text = f"govdisc-model 1 sha256={hashlib.sha256(body.encode()).hexdigest()}\n" + body
    m = loads_model(text)
    ref = reference_tool_model("135")
    assert np.array_equal(m.heating.xi, ref.heating.xi)
    assert np.array_equal(m.cooling.xi, ref.cooling.xi)
    heat = pretty_print(m).splitlines()[0]
    for term in ("ω^3·T_f", "T·ω^2·T_f", "T^3·ω"):
        assert term in heat


def test_pretty_print_cooling(tool135):
    assert pretty_print(tool135.cooling) == "dT/dt = +3.2820e-1 −1.3500e-2·T −6.0601e-6·T^2"


def test_pretty_print_empty_support(tool135):
    empty = SparseModel.from_terms(tool135.cooling.library, "T_tool", [])
    assert pretty_print(empty) == "dT/dt = 0"


def test_pretty_print_build(build135):
    text = pretty_print(build135)
    assert text.startswith("dT_build/dt = ")
    assert text.count("·") >= 4 and len(text.split(" = ")[1].split(" ")) == 4
    for piece in ("−6.3398e-10·T_build^4", "−4.6003e-6·T_tool·d^2", "+2.1208e-7·T_tool^2·d^2", "+4.3869e-8·d^3"):
        assert piece in text


@pytest.mark.parametrize("name", sorted(FIXTURE_FILES))
def test_packaged_fixtures_match_reference(name):
    loaded = load_fixture(name)
    if name == "build":
        assert loaded.model == reference_build_model().model
    else:
        ref = reference_tool_model(name)
        assert loaded.heating == ref.heating and loaded.cooling == ref.cooling
