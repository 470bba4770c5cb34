"""Continuity modulus of the conditional mean on a fiber: exact, numeric, Gaussian."""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from condmean import (
    DomainError,
    ModulusQuery,
    Sample,
    fiber_density,
    fiber_length_cube,
    log_derivative_check,
    modulus_gaussian,
    modulus_smooth_numeric,
    modulus_uniform_exact,
    smooth_constants,
    smooth_density,
)
from condmean.distributions import _simpson_refining

# frozen against a 2^21-interval Simpson quadrature with an exhaustive
# window scan, independent of the sliding-window code under test
SMOOTH_FIXTURE_NU = 0.23473558502453049


def _fixture_sample() -> Sample:
    return Sample(np.array([0.15, 0.3, 0.55, 0.7]))


def test_uniform_modulus_fixture():
    x = np.array([0.1, 0.25, 0.5, 0.8])  # spread 0.7, length 0.6
    geom = fiber_length_cube(Sample(x), 1.0)
    m = modulus_uniform_exact(geom, ModulusQuery(0.05), 4)
    assert m.raw == pytest.approx(1.0 / 6.0, rel=1e-14)
    assert m.nu == m.raw


def test_uniform_modulus_clamps():
    geom = fiber_length_cube(Sample(np.array([0.1, 0.25, 0.5, 0.8])), 1.0)
    m = modulus_uniform_exact(geom, ModulusQuery(0.9), 4)
    assert m.raw == pytest.approx(3.0, rel=1e-14)
    assert m.nu == 1.0
    unclamped = modulus_uniform_exact(geom, ModulusQuery(0.9, clamp=False), 4)
    assert unclamped.nu == unclamped.raw


def test_uniform_modulus_degenerate_fiber():
    geom = fiber_length_cube(Sample(np.array([0.0, 1.0])), 1.0)
    m = modulus_uniform_exact(geom, ModulusQuery(0.1), 2)
    assert m.nu == 1.0
    assert math.isinf(m.raw)


@given(st.floats(1e-4, 0.5), st.floats(1e-4, 0.5))
def test_uniform_modulus_monotone_in_s(s1, s2):
    geom = fiber_length_cube(Sample(np.array([0.1, 0.25, 0.5, 0.8])), 1.0)
    lo, hi = sorted((s1, s2))
    a = modulus_uniform_exact(geom, ModulusQuery(lo), 4)
    b = modulus_uniform_exact(geom, ModulusQuery(hi), 4)
    assert a.nu <= b.nu + 1e-15


@given(st.floats(1e-4, 0.3))
def test_uniform_modulus_raw_is_linear_in_s(s):
    geom = fiber_length_cube(Sample(np.array([0.1, 0.25, 0.5, 0.8])), 1.0)
    one = modulus_uniform_exact(geom, ModulusQuery(s, clamp=False), 4)
    two = modulus_uniform_exact(geom, ModulusQuery(2 * s, clamp=False), 4)
    assert two.raw == pytest.approx(2 * one.raw, rel=1e-12)


def test_gaussian_modulus_values():
    m = modulus_gaussian(1, 4.0)
    assert m.exact == pytest.approx(0.9544997361036416, rel=1e-12)
    m2 = modulus_gaussian(4, 0.1)
    assert m2.exact == pytest.approx(math.erf(0.1 / math.sqrt(2)), rel=1e-14)
    assert m2.linear_bound == pytest.approx(0.2 / math.sqrt(2 * math.pi), rel=1e-14)


@given(st.integers(1, 50), st.floats(1e-5, 10.0))
def test_gaussian_modulus_exact_below_linear_bound(n, s):
    m = modulus_gaussian(n, s)
    assert 0.0 <= m.exact <= 1.0
    assert m.exact <= m.linear_bound + 1e-15


def test_gaussian_modulus_domain():
    with pytest.raises(DomainError):
        modulus_gaussian(0, 0.1)
    with pytest.raises(DomainError):
        modulus_gaussian(2, -0.1)


def test_smooth_modulus_fixture_frozen():
    law = smooth_density("cosine-bump", beta=0.5)
    m = modulus_smooth_numeric(_fixture_sample(), law, ModulusQuery(0.1), grid=4096)
    assert m.nu == pytest.approx(SMOOTH_FIXTURE_NU, abs=5e-6)


def test_smooth_modulus_grid_convergence():
    law = smooth_density("cosine-bump", beta=0.5)
    coarse = modulus_smooth_numeric(_fixture_sample(), law, ModulusQuery(0.1), grid=256)
    fine = modulus_smooth_numeric(_fixture_sample(), law, ModulusQuery(0.1), grid=8192)
    assert fine.nu == pytest.approx(SMOOTH_FIXTURE_NU, abs=1e-6)
    assert coarse.nu == pytest.approx(fine.nu, abs=1e-4)


def test_smooth_modulus_sandwiched_by_uniform():
    # pointwise density ratio bounds the window-mass ratio by (rho_max/rho_min)^n
    law = smooth_density("cosine-bump", beta=0.5)
    s = _fixture_sample()
    geom = fiber_length_cube(s, 1.0)
    uni = modulus_uniform_exact(geom, ModulusQuery(0.1), 4)
    smo = modulus_smooth_numeric(s, law, ModulusQuery(0.1))
    ratio = (law.rho_max / law.rho_min) ** 4
    assert uni.nu / ratio <= smo.nu <= min(1.0, uni.nu * ratio)


def test_smooth_modulus_flat_bump_matches_uniform():
    law = smooth_density("cosine-bump", beta=0.0)
    s = _fixture_sample()
    geom = fiber_length_cube(s, 1.0)
    uni = modulus_uniform_exact(geom, ModulusQuery(0.1), 4)
    smo = modulus_smooth_numeric(s, law, ModulusQuery(0.1), grid=4096)
    assert smo.nu == pytest.approx(uni.nu, rel=1e-9)


def test_smooth_modulus_window_covers_fiber():
    law = smooth_density("cosine-bump", beta=0.5)
    m = modulus_smooth_numeric(_fixture_sample(), law, ModulusQuery(5.0))
    assert m.nu == 1.0


def test_smooth_modulus_rejects_tiny_grid():
    law = smooth_density("cosine-bump", beta=0.5)
    with pytest.raises(DomainError):
        modulus_smooth_numeric(_fixture_sample(), law, ModulusQuery(0.1), grid=32)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000))
def test_fiber_density_normalizes(salt):
    law = smooth_density("cosine-bump", beta=0.5)
    rng = np.random.default_rng(salt)
    s = Sample(rng.random(4))
    p = fiber_density(s, law)
    mass = _simpson_refining(p.pdf, p.u_lo, p.u_hi)
    assert mass == pytest.approx(1.0, abs=1e-8)


def test_fiber_density_rejects_out_of_support():
    law = smooth_density("cosine-bump", beta=0.5)
    from condmean import OutOfSupportError

    with pytest.raises(OutOfSupportError):
        fiber_density(Sample(np.array([0.2, 1.4])), law)


def test_log_derivative_fixture_agreement():
    law = smooth_density("cosine-bump", beta=0.5)
    s = _fixture_sample()
    geom = fiber_length_cube(s, 1.0)
    u = 0.25 * (geom.x_min + geom.x_max)  # interior point
    chk = log_derivative_check(s, law, u)
    assert chk.abs_diff <= 1e-6
    assert chk.within_bound
    assert chk.log_ratio_bound == pytest.approx(
        smooth_constants(law).c1 * 2.0, rel=1e-9
    )


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_log_derivative_random_fibers(salt):
    law = smooth_density("cosine-bump", beta=0.5)
    rng = np.random.default_rng(salt)
    s = Sample(0.1 + 0.8 * rng.random(4))
    geom = fiber_length_cube(s, 1.0)
    lo = -math.sqrt(4) * geom.x_min
    hi = math.sqrt(4) * (1.0 - geom.x_max)
    u = float(lo + (0.2 + 0.6 * rng.random()) * (hi - lo))
    chk = log_derivative_check(s, law, u)
    assert chk.abs_diff <= 1e-6, chk
    assert abs(chk.log_ratio) <= chk.log_ratio_bound
    assert chk.within_bound


def test_log_derivative_rejects_boundary_point():
    law = smooth_density("cosine-bump", beta=0.5)
    s = _fixture_sample()
    geom = fiber_length_cube(s, 1.0)
    hi = math.sqrt(4) * (1.0 - geom.x_max)
    with pytest.raises(DomainError):
        log_derivative_check(s, law, hi)
