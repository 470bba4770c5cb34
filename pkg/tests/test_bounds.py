"""Closed-form bound formulas: pinned values, domains, and orderings."""

from __future__ import annotations

import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from condmean import (
    DomainError,
    GraphGrowth,
    ball_growth_ok,
    eigenvalue_concentration_bound,
    fiber_length_tail_exact_uniform,
    fiber_tail_bound_linear,
    fiber_tail_bound_quadratic,
    fiber_tail_bound_quadratic_pairs,
    fiber_tail_bound_quadratic_uniform,
    fiber_tail_bound_sharper,
    modulus_tail_bound_linear,
    modulus_tail_bound_linear_alpha,
    modulus_tail_bound_quadratic,
    modulus_tail_bound_quadratic_alpha,
    regularity_check,
    smooth_constants,
    smooth_density,
    smooth_modulus_tail_bound,
    uniform_regularity_params,
    wegner_bound_gaussian,
)


def test_linear_bound_values():
    assert fiber_tail_bound_linear(10, 1.0, 0.05) == pytest.approx(0.5)
    assert fiber_tail_bound_linear(3, 2.0, 0.4) == pytest.approx(0.6)
    assert modulus_tail_bound_linear(10, 1.0, 0.05) == pytest.approx(0.5)
    # clamps at one
    assert fiber_tail_bound_linear(10, 1.0, 0.5) == 1.0


def test_linear_bound_domain():
    for bad in (0.0, -0.1, 1.5):
        with pytest.raises(DomainError):
            fiber_tail_bound_linear(4, 1.0, bad)
    with pytest.raises(DomainError):
        fiber_tail_bound_linear(1, 1.0, 0.1)
    with pytest.raises(DomainError):
        fiber_tail_bound_linear(4, 0.0, 0.1)


def test_sharper_variant_below_linear():
    for n in (2, 5, 16):
        for d in (0.01, 0.2, 1.0):
            assert fiber_tail_bound_sharper(n, 1.0, d) <= fiber_tail_bound_linear(n, 1.0, d)


def test_sharper_variant_oracle_small_delta_regime():
    # the sqrt(n) variant holds on the small-delta part of the grid ...
    for n in (2, 4, 8, 16):
        for frac in (0.01, 0.02, 0.05):
            exact = fiber_length_tail_exact_uniform(n, 1.0, math.sqrt(n) * frac)
            assert exact <= fiber_tail_bound_sharper(n, 1.0, frac) + 1e-12


def test_sharper_variant_contradicted_at_large_delta():
    # ... but the exact tail beats it once n delta is large, which is why
    # experiments report it without asserting it
    for frac in (0.1, 0.2):
        exact = fiber_length_tail_exact_uniform(16, 1.0, 4.0 * frac)
        assert exact > fiber_tail_bound_sharper(16, 1.0, frac)


def test_quadratic_bound_values():
    assert modulus_tail_bound_quadratic(10, 1.0, 0.05, 0.05) == pytest.approx(0.0625)
    assert modulus_tail_bound_quadratic(2, 1.0, 0.01, 0.01) == pytest.approx(1e-4)
    assert fiber_tail_bound_quadratic(4, 1.5, 0.01) == pytest.approx(2.25e-4)
    assert fiber_tail_bound_quadratic_pairs(4, 1.5, 0.01) == pytest.approx(1.6875e-4)
    assert fiber_tail_bound_quadratic_uniform(4, 2.0, 0.01) == pytest.approx(2.5e-5)


def test_quadratic_bound_domain():
    with pytest.raises(DomainError):
        modulus_tail_bound_quadratic(4, 1.0, 0.2, 0.1)  # delta > s
    with pytest.raises(DomainError):
        modulus_tail_bound_quadratic(4, 1.0, 0.0, 0.1)
    with pytest.raises(DomainError):
        fiber_tail_bound_quadratic(4, 0.0, 0.1)
    with pytest.raises(DomainError):
        fiber_tail_bound_quadratic(4, 1.0, -0.1)


def test_quadratic_exact_for_two_coordinates():
    # with two coordinates the quadratic formula is the exact tail
    for d in (0.01, 0.05, 0.3):
        exact = fiber_length_tail_exact_uniform(2, 1.0, math.sqrt(2) * d)
        assert modulus_tail_bound_quadratic(2, 1.0, d, d) == pytest.approx(exact, rel=1e-12)


def test_quadratic_contradicted_by_oracle_at_four_coordinates():
    # pinned counterexample: the formula undershoots the exact tail, so
    # experiments only assert it where the oracle confirms it first
    exact = fiber_length_tail_exact_uniform(4, 1.0, 2.0 * 0.01)
    assert exact == pytest.approx(5.9203e-4, abs=1e-8)
    assert exact > modulus_tail_bound_quadratic(4, 1.0, 0.01, 0.01)


def test_alpha_forms():
    assert modulus_tail_bound_quadratic_alpha(9, 1.0, 0.01, 1 / 3) == pytest.approx(
        81 * 0.01 ** (2 / 3) / 4
    )
    assert modulus_tail_bound_quadratic_alpha(9, 1.0, 0.001, 1 / 3) == pytest.approx(0.2025)
    assert modulus_tail_bound_linear_alpha(9, 1.0, 0.001, 1 / 3) == pytest.approx(0.9)
    # threshold s^alpha caps at ell inside the linear form
    assert modulus_tail_bound_linear_alpha(2, 1.0, 0.9, 1 / 3) == 1.0
    with pytest.raises(DomainError):
        modulus_tail_bound_quadratic_alpha(9, 1.0, 0.01, 1.0)
    with pytest.raises(DomainError):
        modulus_tail_bound_quadratic_alpha(9, 1.0, 0.0, 0.5)


@given(
    st.integers(2, 20),
    st.floats(1e-6, 1.0),
    st.floats(1e-6, 1.0),
)
def test_linear_bound_monotone_in_delta(n, d1, d2):
    lo, hi = sorted((d1, d2))
    assert fiber_tail_bound_linear(n, 1.0, lo) <= fiber_tail_bound_linear(n, 1.0, hi) + 1e-15


@given(st.integers(2, 30), st.floats(1e-6, 1.0))
def test_quadratic_below_linear_in_its_regime(n, d):
    # n^2 d^2 / 4 <= n d exactly when d <= 4/n; stay well inside
    if d <= 2.0 / n:
        quad = modulus_tail_bound_quadratic(n, 1.0, d, d)
        lin = modulus_tail_bound_linear(n, 1.0, d)
        assert quad <= lin + 1e-15


@given(st.integers(2, 20), st.floats(1e-6, 0.5), st.floats(1.0, 3.0))
def test_bounds_are_probabilities(n, d, ell):
    for val in (
        fiber_tail_bound_linear(n, ell, d),
        fiber_tail_bound_sharper(n, ell, d),
        modulus_tail_bound_quadratic(n, ell, d, d),
        fiber_tail_bound_quadratic(n, 1.0 / ell, d),
    ):
        assert 0.0 <= val <= 1.0


def test_pairs_form_below_headline_quadratic():
    for n in (2, 5, 12):
        assert fiber_tail_bound_quadratic_pairs(n, 1.0, 0.1) <= fiber_tail_bound_quadratic(
            n, 1.0, 0.1
        )


def test_regularity_params_uniform():
    p = uniform_regularity_params(1.0, 1 / 3)
    assert p.threshold_coeff == 1.0
    assert p.threshold_vol_exp == 0.0
    assert p.threshold_s_exp == pytest.approx(2 / 3)
    assert p.tail_coeff == pytest.approx(0.25)
    assert p.tail_vol_exp == 2.0
    assert p.tail_s_exp == pytest.approx(2 / 3)
    assert p.threshold(9, 0.001) == pytest.approx(0.01)
    assert p.tail_ceiling(9, 0.001) == pytest.approx(0.2025)
    # ceiling clamps to one for large cubes
    assert p.tail_ceiling(100, 0.5) == 1.0


def test_regularity_params_scale_with_ell():
    p = uniform_regularity_params(2.0, 0.5)
    assert p.tail_coeff == pytest.approx(1.0 / 16.0)


def test_regularity_check():
    p = uniform_regularity_params(1.0, 1 / 3)
    assert regularity_check(p, 9, 0.001, 0.20)
    assert not regularity_check(p, 9, 0.001, 0.21)
    with pytest.raises(DomainError):
        regularity_check(p, 1, 0.001, 0.1)
    with pytest.raises(DomainError):
        regularity_check(p, 9, 0.001, 1.2)


def test_smooth_refined_bound_admissible_case():
    law = smooth_density("cosine-bump", beta=0.5)
    c = smooth_constants(law)
    b = smooth_modulus_tail_bound(4, 1.0, law.rho_max, 0.005, c)
    assert b.admissible
    assert b.delta_max == pytest.approx(1.0 / (32.0 * math.pi), rel=1e-12)
    assert b.value == pytest.approx(0.0036, rel=1e-12)


def test_smooth_refined_bound_inadmissible_case():
    law = smooth_density("cosine-bump", beta=0.5)
    c = smooth_constants(law)
    b = smooth_modulus_tail_bound(4, 1.0, law.rho_max, 0.02, c)
    assert not b.admissible
    assert b.value is None


def test_smooth_refined_bound_flat_density_always_admissible():
    c = smooth_constants(smooth_density("cosine-bump", beta=0.0))
    b = smooth_modulus_tail_bound(4, 1.0, 1.0, 0.9, c)
    assert b.admissible
    assert math.isinf(b.delta_max)


def test_wegner_bound_values():
    assert wegner_bound_gaussian(16, 0.01) == pytest.approx(
        0.64 / math.sqrt(2 * math.pi), rel=1e-14
    )
    assert wegner_bound_gaussian(16, 0.01) == pytest.approx(0.2553, abs=1e-4)
    assert wegner_bound_gaussian(100, 0.001) == pytest.approx(1.0 / math.sqrt(2 * math.pi))
    assert wegner_bound_gaussian(100, 10.0) == 1.0
    with pytest.raises(DomainError):
        wegner_bound_gaussian(0, 0.01)
    with pytest.raises(DomainError):
        wegner_bound_gaussian(16, -0.01)


def test_eigenvalue_concentration_bound():
    assert eigenvalue_concentration_bound(16, 0.01) == pytest.approx(0.16)
    assert eigenvalue_concentration_bound(16, 0.5) == 1.0
    with pytest.raises(DomainError):
        eigenvalue_concentration_bound(16, 1.5)
    with pytest.raises(DomainError):
        eigenvalue_concentration_bound(0, 0.1)


def test_ball_growth():
    linear = GraphGrowth(3.0, 1.0)
    assert ball_growth_ok(9, 4, linear)
    assert not ball_growth_ok(13, 4, linear)
    with pytest.raises(DomainError):
        ball_growth_ok(9, 0, linear)
    with pytest.raises(DomainError):
        GraphGrowth(0.0, 1.0)
