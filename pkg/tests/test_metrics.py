import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from govdisc.errors import MetricError
from govdisc.metrics import ComparisonRun, comparison_table, mape

series = st.lists(st.floats(1.0, 1000.0), min_size=1, max_size=50)


def test_identical_is_zero():
    assert mape([100.0, 200.0], [100.0, 200.0]).value == 0.0


def test_hand_value():
    assert mape([100.0, 200.0], [90.0, 220.0]).value == 10.0


def test_zero_sample_skipped():
    r = mape([0.0, 100.0], [5.0, 110.0])
    assert r.n_skipped == 1 and r.n_used == 1
    assert r.value == pytest.approx(10.0)


@pytest.mark.parametrize("measured", [[0.0, 0.0], [np.nan, 1e-7]])
def test_all_skipped_raises(measured):
    with pytest.raises(MetricError):
        mape(measured, [1.0, 1.0])


def test_length_mismatch():
    with pytest.raises(MetricError):
        mape([1.0, 2.0], [1.0])


def test_asymmetric():
    assert mape([100.0], [200.0]).value == 100.0
    assert mape([200.0], [100.0]).value == 50.0


@settings(max_examples=100, deadline=None)
@given(series, st.data())
def test_scale_invariance(xs, data):
    ys = data.draw(st.lists(st.floats(1.0, 1000.0), min_size=len(xs), max_size=len(xs)))
    X, Y = np.array(xs), np.array(ys)
    assert mape(3.7 * X, 3.7 * Y).value == pytest.approx(mape(X, Y).value, rel=1e-12, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(series, st.integers(0, 49), st.floats(0.01, 10.0))
def test_positive_when_any_sample_differs(xs, i, delta):
    X = np.array(xs)
    Y = X.copy()
    Y[i % len(X)] += delta
    assert mape(X, X).value == 0.0
    assert mape(X, Y).value > 0.0


def test_comparison_table_rows_and_layout():
    runs = [ComparisonRun("a", np.array([100.0, 200.0]), np.array([90.0, 220.0]), 0.5),
            ComparisonRun("b", np.array([1.0]), np.array([1.0]), 0.1)]
    table = comparison_table(runs)
    assert len(table) == 2
    assert table.rows[0].mape == 10.0
    csv = table.to_csv().splitlines()
    assert csv[0] == "run,mape_percent,n_used,simulation_time_s"
    assert csv[1] == "a,10.0000,2,0.5000"
    assert "Simulation time (s)" in table.to_text()


def test_empty_table():
    table = comparison_table([])
    assert len(table) == 0
    assert table.to_csv() == "run,mape_percent,n_used,simulation_time_s\n"


def test_self_simulation_row(small_synth):
    from govdisc.simulate import simulate_type2

    res = simulate_type2(small_synth.tool_model, small_synth.phased, float(small_synth.phased.data.T_tool[0]))
    row = comparison_table([ComparisonRun("self", res.measured, res.predicted, res.wall_time)]).rows[0]
    assert row.mape < 0.01
