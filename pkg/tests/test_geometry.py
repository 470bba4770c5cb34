"""Fiber geometry: closed form against brute force, invariances, error paths."""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from condmean import (
    InvalidSampleError,
    OutOfSupportError,
    Sample,
    decompose,
    fiber_length_bruteforce,
    fiber_length_cube,
)


def test_sample_basic_properties():
    s = Sample(np.array([0.2, 0.5, 0.8]))
    assert s.n == 3
    assert s.values.dtype == np.float64
    assert Sample([0.1, 0.9]).n == 2  # any 1-d float sequence works


@pytest.mark.parametrize(
    "bad",
    [
        np.array([0.5]),
        np.array([[0.1, 0.2], [0.3, 0.4]]),
        np.array([0.1, np.nan]),
        np.array([0.1, np.inf]),
    ],
)
def test_sample_rejects_bad_input(bad):
    with pytest.raises(InvalidSampleError):
        Sample(bad)


def test_decompose_fixture():
    d = decompose(Sample(np.array([0.2, 0.5, 0.8])))
    assert d.mean == pytest.approx(0.5, abs=1e-15)
    assert d.rescaled_mean == pytest.approx(0.5 * math.sqrt(3), abs=1e-15)
    assert d.fluctuations == pytest.approx([-0.3, 0.0, 0.3], abs=1e-15)
    # anchored labels subtract the last coordinate
    assert d.anchored == pytest.approx([-0.6, -0.3], abs=1e-15)


@given(
    st.lists(st.floats(0.0, 1.0), min_size=2, max_size=8),
    st.floats(-0.4, 0.4),
)
def test_decompose_anchored_constant_along_fiber(vals, t):
    x = np.asarray(vals)
    d0 = decompose(Sample(x))
    d1 = decompose(Sample(x + t))
    assert np.allclose(d0.fluctuations, d1.fluctuations, atol=1e-12)
    assert np.allclose(d0.anchored, d1.anchored, atol=1e-12)
    assert d1.mean == pytest.approx(d0.mean + t, abs=1e-12)


def test_fiber_length_cube_fixtures():
    g = fiber_length_cube(Sample(np.array([0.2, 0.5, 0.8])), 1.0)
    assert g.spread == pytest.approx(0.6, abs=1e-15)
    assert g.length == pytest.approx(math.sqrt(3) * 0.4, abs=1e-14)
    assert g.x_min == pytest.approx(0.2)
    assert g.x_max == pytest.approx(0.8)

    g2 = fiber_length_cube(Sample(np.array([0.5, 0.5])), 1.0)
    assert g2.length == pytest.approx(math.sqrt(2), abs=1e-15)

    g3 = fiber_length_cube(Sample(np.array([0.1, 1.9, 0.7, 1.0])), 2.0)
    assert g3.length == pytest.approx(2.0 * 0.2, abs=1e-14)


def test_fiber_length_degenerate_is_zero():
    g = fiber_length_cube(Sample(np.array([0.0, 1.0])), 1.0)
    assert g.length == 0.0


def test_constant_sample_spans_full_diagonal():
    for n in (2, 3, 7):
        g = fiber_length_cube(Sample(np.full(n, 0.25)), 1.0)
        assert g.length == pytest.approx(math.sqrt(n), abs=1e-14)


@given(
    st.integers(2, 6),
    st.floats(0.05, 0.95),
)
def test_fiber_length_translation_invariant(n, frac):
    # dyadic translations are exact in floating point
    rng = np.random.default_rng(n * 1000 + int(frac * 100))
    x = 0.25 + 0.5 * rng.random(n)
    a = fiber_length_cube(Sample(x), 1.0)
    b = fiber_length_cube(Sample(x + 0.125), 1.0)
    assert b.length == pytest.approx(a.length, abs=1e-12)


def test_out_of_support_raises():
    with pytest.raises(OutOfSupportError):
        fiber_length_cube(Sample(np.array([0.2, 1.3])), 1.0)
    with pytest.raises(OutOfSupportError):
        fiber_length_cube(Sample(np.array([-0.1, 0.5])), 1.0)


def test_offsets_shift_the_cube():
    x = np.array([1.2, 1.5])
    off = np.array([1.0, 1.0])
    g = fiber_length_cube(Sample(x), 1.0, offsets=off)
    assert g.length == pytest.approx(fiber_length_cube(Sample(x - 1.0), 1.0).length)
    with pytest.raises(OutOfSupportError):
        fiber_length_cube(Sample(x), 1.0)


def test_offsets_shape_mismatch_rejected():
    with pytest.raises(InvalidSampleError):
        fiber_length_cube(Sample(np.array([0.2, 0.5])), 1.0, offsets=np.zeros(3))


def test_bruteforce_matches_closed_form_fixture():
    s = Sample(np.array([0.5, 0.5]))
    m = fiber_length_bruteforce(s, 1.0, step=1e-5)
    assert abs(m - math.sqrt(2)) <= 3e-5


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 8), st.integers(0, 10_000))
def test_bruteforce_matches_closed_form_random(n, salt):
    rng = np.random.default_rng(salt)
    ell = float(rng.choice([0.5, 1.0, 2.0]))
    x = ell * rng.random(n)
    step = 1e-4 * ell
    closed = fiber_length_cube(Sample(x), ell).length
    marched = fiber_length_bruteforce(Sample(x), ell, step=step)
    assert abs(closed - marched) <= 2.0 * step * math.sqrt(n), (n, ell, x)


def test_bruteforce_respects_offsets():
    x = np.array([3.2, 3.5, 3.9])
    off = np.full(3, 3.0)
    m = fiber_length_bruteforce(Sample(x), 1.0, offsets=off, step=1e-5)
    closed = fiber_length_cube(Sample(x), 1.0, offsets=off).length
    assert abs(m - closed) <= 2e-5 * math.sqrt(3)
