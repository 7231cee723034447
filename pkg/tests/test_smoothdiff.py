import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from govdisc.errors import ConfigError
from govdisc.smoothdiff import (
    NO_SMOOTHING,
    SmootherConfig,
    derivative_target,
    differentiate,
    smooth,
    trim_edges,
)


def test_even_window_rejected():
    with pytest.raises(ConfigError):
        SmootherConfig(window=4)


def test_moving_average_interior_and_shrinking_edges():
    x = np.array([0.0, 1, 2, 3, 10, 5, 6])
    out = smooth(x, SmootherConfig(window=5))
    assert out[0] == 0.0  # window of one at the edge
    assert out[1] == pytest.approx(1.0)  # (0+1+2)/3
    assert out[3] == pytest.approx((1 + 2 + 3 + 10 + 5) / 5)
    assert out[-1] == 6.0


def test_smoothing_respects_segments():
    x = np.array([0.0, 0, 0, 100, 100, 100])
    seg = np.array([0, 0, 0, 1, 1, 1])
    out = smooth(x, SmootherConfig(window=3), seg)
    np.testing.assert_array_equal(out, x)


def test_none_method_is_identity():
    x = np.random.default_rng(0).normal(size=20)
    np.testing.assert_array_equal(smooth(x, NO_SMOOTHING), x)


def test_central_difference_exact_on_quadratic():
    t = np.arange(10.0)
    d = differentiate(t**2, t)
    np.testing.assert_allclose(d.values[1:-1], 2 * t[1:-1])
    assert not d.valid[0] and not d.valid[-1]
    assert d.valid[1:-1].all()


def test_difference_never_crosses_segment():
    t = np.arange(8.0)
    x = np.where(t < 4, t, 100 + t)
    seg = (t >= 4).astype(int)
    d = differentiate(x, t, seg)
    np.testing.assert_allclose(d.values[d.valid], 1.0)
    assert not d.valid[3] and not d.valid[4]


def test_short_segments_masked():
    t = np.arange(5.0)
    d = differentiate(t, t, np.array([0, 0, 1, 2, 2]))
    assert not d.valid.any()


def test_trim_edges():
    v = np.ones(10, dtype=bool)
    out = trim_edges(v, np.zeros(10, dtype=int), 2)
    np.testing.assert_array_equal(out, [0, 0, 1, 1, 1, 1, 1, 1, 0, 0])


def test_derivative_target_masks_truncated_windows():
    t = np.arange(20.0)
    d = derivative_target(3 * t, t, np.zeros(20, dtype=int), SmootherConfig(window=5))
    # first usable sample is half_width + 1 = 3 samples in
    assert np.flatnonzero(d.valid)[0] == 3 and np.flatnonzero(d.valid)[-1] == 16
    np.testing.assert_allclose(d.values[d.valid], 3.0)


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, st.integers(5, 60), elements=st.floats(-1e3, 1e3)), st.sampled_from([1, 3, 5, 7]))
def test_smoothing_preserves_constants_and_bounds(x, w):
    out = smooth(x, SmootherConfig(window=w), np.zeros(len(x), dtype=int))
    assert np.all(out <= x.max() + 1e-9) and np.all(out >= x.min() - 1e-9)
    c = np.full(len(x), 7.5)
    np.testing.assert_allclose(smooth(c, SmootherConfig(window=w), np.zeros(len(x), dtype=int)), 7.5)
