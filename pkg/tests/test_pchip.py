import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.interpolate import PchipInterpolator

from anchorex.errors import ValidationError
from anchorex.pchip import PchipSurrogate, fritsch_carlson_slopes


def test_interpolates_knots():
    x = np.array([0.0, 0.5, 1.5, 2.0, 3.0])
    y = np.array([1.0, 3.0, 2.0, 2.0, 5.0])
    s = PchipSurrogate.fit(x, y)
    assert np.array_equal(s(x), y)


def test_linear_data_reproduced():
    x = np.linspace(-1, 1, 9)
    s = PchipSurrogate.fit(x, 2 * x + 1)
    t = np.linspace(-2, 2, 41)
    assert np.allclose(s(t), 2 * t + 1, atol=1e-13)


def test_linear_extrapolation():
    x = np.array([0.0, 1.0, 2.0, 4.0])
    y = np.array([0.0, 1.0, 4.0, 5.0])
    s = PchipSurrogate.fit(x, y)
    m = fritsch_carlson_slopes(x, y)
    assert s(-1.0) == pytest.approx(y[0] - m[0])
    assert s(6.0) == pytest.approx(y[-1] + 2 * m[-1])


def test_extremum_slope_zero():
    m = fritsch_carlson_slopes(np.array([0.0, 1, 2, 3]), np.array([0.0, 2, 1, 1]))
    assert m[1] == 0.0 and m[2] == 0.0 and m[3] == 0.0


def test_limiter_scales_slopes():
    # steep then shallow: averaged slope exceeds the 3 s_k circle and is scaled back
    x = np.array([0.0, 1.0, 2.0])
    y = np.array([0.0, 0.1, 10.0])
    m = fritsch_carlson_slopes(x, y)
    s0 = 0.1
    assert (m[0] / s0) ** 2 + (m[1] / s0) ** 2 <= 9 + 1e-9


def test_two_knots():
    s = PchipSurrogate.fit([0, 2], [1, 5])
    assert s(1.0) == pytest.approx(3.0)


@pytest.mark.parametrize("x,y", [([0, 0, 1], [1, 2, 3]), ([0, 1], [1, 2, 3]), ([0], [1]), ([0, 1], [np.nan, 1])])
def test_invalid(x, y):
    with pytest.raises(ValidationError):
        PchipSurrogate.fit(x, y)


@given(st.lists(st.floats(0.05, 3), min_size=4, max_size=12), st.lists(st.floats(-5, 5), min_size=12, max_size=12))
def test_monotone_segments_no_overshoot(dx, dy):
    x = np.concatenate([[0.0], np.cumsum(dx)])
    y = np.concatenate([[0.0], np.cumsum(np.abs(dy[: len(dx)]))])  # nondecreasing data
    s = PchipSurrogate.fit(x, y)
    t = np.linspace(x[0], x[-1], 400)
    v = s(t)
    assert np.all(np.diff(v) >= -1e-9 * max(1, np.max(np.abs(y))))
    assert v.min() >= y.min() - 1e-9 and v.max() <= y.max() + 1e-9


@given(st.lists(st.floats(-5, 5), min_size=6, max_size=6))
def test_local_range_respected(y):
    # on each interval the interpolant stays within the two knot values when data are monotone there
    x = np.arange(6.0)
    s = PchipSurrogate.fit(x, y)
    for k in range(5):
        t = np.linspace(x[k], x[k + 1], 50)
        lo, hi = sorted((y[k], y[k + 1]))
        v = s(t)
        assert v.min() >= lo - 1e-9 and v.max() <= hi + 1e-9


def test_shape_preserving_on_steps():
    x = np.arange(8.0)
    y = np.array([0, 0, 0, 1, 1, 1, 0, 0.0])
    v = PchipSurrogate.fit(x, y)(np.linspace(0, 7, 300))
    assert v.min() >= 0 and v.max() <= 1


def test_close_to_reference_interior():
    # reference interpolant differs only in its end-slope rule
    x = np.linspace(0, 3, 31)
    y = np.sin(x) + 0.1 * x
    t = np.linspace(0.5, 2.5, 100)
    assert np.allclose(PchipSurrogate.fit(x, y)(t), PchipInterpolator(x, y)(t), atol=5e-3)
