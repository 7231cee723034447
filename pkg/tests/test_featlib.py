import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from govdisc.errors import ConfigError, DataError, SchemaError
from govdisc.featlib import (
    DesignMatrix,
    TermSpec,
    build_library,
    evaluate_library,
    make_term,
    normalize_columns,
    term_to_string,
)


def test_degree_two_basis_order():
    lib = build_library(("T", "u"), 2)
    assert lib.names() == ["1", "T", "u", "T^2", "T·u", "u^2"]


@pytest.mark.parametrize("F,deg", [(1, 4), (3, 4), (5, 4), (2, 0), (4, 3)])
def test_library_size_stars_and_bars(F, deg):
    lib = build_library(tuple(f"x{i}" for i in range(F)), deg)
    assert lib.P == math.comb(F + deg, F)
    assert lib.terms[0] == TermSpec(())
    assert len(set(lib.terms)) == lib.P


def test_heating_library_has_35_terms():
    assert build_library(("T_tool", "omega", "T_f"), 4).P == 35


def test_duplicate_features_rejected():
    with pytest.raises(ConfigError):
        build_library(("T", "T"), 2)


def test_evaluate_rows():
    lib = build_library(("T", "u"), 2)
    np.testing.assert_array_equal(evaluate_library(lib, {"T": [2.0], "u": [3.0]}).values[0], [1, 2, 3, 4, 6, 9])
    np.testing.assert_array_equal(evaluate_library(lib, np.zeros((1, 2))).values[0], [1, 0, 0, 0, 0, 0])


def test_omega_cubed_torque_column():
    lib = build_library(("T_tool", "omega", "T_f"), 4)
    dm = evaluate_library(lib, {"T_tool": [100.0], "omega": [135.0], "T_f": [10.0]})
    assert dm.values[0, lib.index({"omega": 3, "T_f": 1})] == 2.460375e7


def test_missing_feature_is_schema_error():
    lib = build_library(("T", "u"), 1)
    with pytest.raises(SchemaError, match="u"):
        evaluate_library(lib, {"T": [1.0]})


def test_normalize_examples():
    lib = build_library(("x",), 1)
    dm = DesignMatrix(np.array([[1.0, 3], [1, 4], [1, 0], [1, 0]]), lib)
    prob = normalize_columns(dm, np.array([1.0, 0, 0, 0]))
    np.testing.assert_allclose(prob.matrix[:, 1], [0.6, 0.8, 0, 0])
    np.testing.assert_allclose(prob.matrix[:, 0], 0.5)
    np.testing.assert_allclose(prob.column_norms, [2, 5])


def test_zero_column_excluded_and_zero_target_rejected():
    lib = build_library(("x",), 1)
    dm = DesignMatrix(np.array([[1.0, 0], [1, 0]]), lib)
    prob = normalize_columns(dm, np.array([1.0, 2.0]))
    assert prob.excluded.tolist() == [False, True]
    with pytest.raises(DataError):
        normalize_columns(dm, np.zeros(2))


@pytest.mark.parametrize("powers,c,text", [
    ({}, 0.3282, "+3.2820e-1"),
    ({"omega": 3, "T_f": 1}, 2.764e-9, "+2.7640e-9·ω^3·T_f"),
    ({"T": 1}, -0.0135, "−1.3500e-2·T"),
])
def test_term_to_string(powers, c, text):
    term = make_term(("T", "omega", "T_f"), powers)
    assert term_to_string(term, c) == text


@settings(max_examples=50, deadline=None)
@given(st.floats(-10, 10), st.floats(-10, 10))
def test_evaluation_is_multiplicative(a, b):
    lib = build_library(("a", "b"), 2)
    row = evaluate_library(lib, {"a": [a], "b": [b]}).values[0]
    assert row[lib.index({"a": 1, "b": 1})] == pytest.approx(row[lib.index({"a": 1})] * row[lib.index({"b": 1})])


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_normalisation_round_trip_preserves_predictions(seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(20, 4)) * rng.uniform(0.01, 100, size=4)
    y = rng.normal(size=20)
    lib = build_library(("a", "b", "c"), 1)
    prob = normalize_columns(DesignMatrix(X, lib), y)
    np.testing.assert_allclose(np.linalg.norm(prob.matrix, axis=0), 1.0, atol=1e-12)
    xi_n = np.linalg.lstsq(prob.matrix, prob.target, rcond=None)[0]
    xi = prob.denormalize(xi_n)
    np.testing.assert_allclose(X @ xi, prob.matrix @ xi_n * prob.target_norm, rtol=1e-9, atol=1e-9)
