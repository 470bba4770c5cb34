"""Closed-form tail bounds for fiber lengths and the continuity modulus.

Every function here is a pure formula: no sampling, no state.  Bounds
that are probabilities are clamped to [0, 1].  Monte Carlo experiments
elsewhere quote these formulas and check empirical tails against them;
keeping them free of the estimation code lets the output tables be
re-derived row by row in tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .distributions import SmoothConstants
from .errors import DomainError


def _check_n(n: int) -> None:
    if n < 2:
        raise DomainError(f"need sample size n >= 2, got {n}")


def _check_ell(ell: float) -> None:
    if ell <= 0 or not math.isfinite(ell):
        raise DomainError(f"side length must be positive and finite, got {ell}")


def fiber_tail_bound_linear(n: int, ell: float, delta: float) -> float:
    """Linear fiber-length tail: P(|fiber| <= delta) <= n delta / ell.

    Valid for 0 < delta <= ell; e.g. (n=10, ell=1, delta=0.05) -> 0.5.
    """
    _check_n(n)
    _check_ell(ell)
    if not 0 < delta <= ell:
        raise DomainError(f"need 0 < delta <= ell, got delta={delta}, ell={ell}")
    return min(1.0, n * delta / ell)


def fiber_tail_bound_sharper(n: int, ell: float, delta: float) -> float:
    """Diagnostic variant sqrt(n) delta / ell of the linear fiber tail.

    The union-over-coordinates argument only needs the smallest shifted
    coordinate below delta/sqrt(n), which saves a sqrt(n) factor.
    Reported alongside the linear bound for comparison; experiments do
    not assert it.
    """
    _check_n(n)
    _check_ell(ell)
    if not 0 < delta <= ell:
        raise DomainError(f"need 0 < delta <= ell, got delta={delta}, ell={ell}")
    return min(1.0, math.sqrt(n) * delta / ell)


def modulus_tail_bound_linear(n: int, ell: float, delta: float) -> float:
    """Linear modulus tail: P(raw modulus > s/delta) <= n delta / ell.

    The event is equivalent to the fiber being shorter than
    sqrt(n) delta, so the bound coincides with the linear fiber tail.
    """
    return fiber_tail_bound_linear(n, ell, delta)


def modulus_tail_bound_linear_alpha(n: int, ell: float, s: float, alpha: float) -> float:
    """Linear modulus tail at the coupled threshold delta = s^alpha."""
    _check_alpha(alpha)
    if s <= 0:
        raise DomainError(f"need s > 0, got {s}")
    return fiber_tail_bound_linear(n, ell, min(s**alpha, ell))


def fiber_tail_bound_quadratic(n: int, rho_max: float, r: float) -> float:
    """Quadratic fiber-length tail n rho_max^2 r^2 / 4 for a bounded density."""
    _check_n(n)
    if rho_max <= 0:
        raise DomainError(f"density bound must be positive, got {rho_max}")
    if r < 0:
        raise DomainError(f"need r >= 0, got {r}")
    return min(1.0, 0.25 * n * (rho_max * r) ** 2)


def fiber_tail_bound_quadratic_pairs(n: int, rho_max: float, r: float) -> float:
    """Pair-counting form (n-1) rho_max^2 r^2 / 4 of the quadratic tail.

    The union over the n(n-1) ordered coordinate pairs gives the factor
    n(n-1)/n = n-1 after the per-pair probability (rho_max r / sqrt(n))^2/4;
    the headline quadratic bound rounds n-1 up to n.
    """
    _check_n(n)
    if rho_max <= 0:
        raise DomainError(f"density bound must be positive, got {rho_max}")
    if r < 0:
        raise DomainError(f"need r >= 0, got {r}")
    return min(1.0, 0.25 * (n - 1) * (rho_max * r) ** 2)


def fiber_tail_bound_quadratic_uniform(n: int, ell: float, r: float) -> float:
    """Quadratic fiber tail for the uniform law: n r^2 / (4 ell^2)."""
    _check_ell(ell)
    return fiber_tail_bound_quadratic(n, 1.0 / ell, r)


def modulus_tail_bound_quadratic(n: int, ell: float, delta: float, s: float) -> float:
    """Quadratic modulus tail n^2 delta^2 / (4 ell^2), for 0 < delta <= s <= ell.

    Exact order statistics contradict this formula at some (n, delta):
    already at n = 4, delta/ell = 0.01 the exact tail is 5.92e-4 against
    a stated 4.0e-4.  Callers that assert it must first confirm the
    exact oracle at their grid point; see the experiment drivers.
    """
    _check_n(n)
    _check_ell(ell)
    if not 0 < delta <= s <= ell:
        raise DomainError(
            f"need 0 < delta <= s <= ell, got delta={delta}, s={s}, ell={ell}"
        )
    return min(1.0, (n * delta) ** 2 / (4.0 * ell**2))


def modulus_tail_bound_quadratic_alpha(n: int, ell: float, s: float, alpha: float) -> float:
    """Quadratic modulus tail at delta = s^alpha: n^2 s^(2 alpha) / (4 ell^2).

    Note for s < 1 the coupled threshold s^alpha exceeds s, so this form
    is not a special case of the (delta, s) form's domain; it is its own
    statement and shares the caveat about oracle confirmation.
    """
    _check_n(n)
    _check_ell(ell)
    _check_alpha(alpha)
    if s <= 0:
        raise DomainError(f"need s > 0, got {s}")
    return min(1.0, n**2 * s ** (2.0 * alpha) / (4.0 * ell**2))


def _check_alpha(alpha: float) -> None:
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"need 0 < alpha < 1, got {alpha}")


@dataclass(frozen=True)
class RegularityParams:
    """Parameters of a regularity tail condition for the conditional mean.

    The condition reads: for cubes Q and small s,
    P( nu_|Q|(s) >= threshold_coeff |Q|^threshold_vol_exp s^threshold_s_exp )
      <= tail_coeff |Q|^tail_vol_exp s^tail_s_exp.
    """

    threshold_coeff: float
    threshold_vol_exp: float
    threshold_s_exp: float
    tail_coeff: float
    tail_vol_exp: float
    tail_s_exp: float

    def threshold(self, q_size: int, s: float) -> float:
        """Modulus level whose exceedance the condition controls."""
        return self.threshold_coeff * q_size**self.threshold_vol_exp * s**self.threshold_s_exp

    def tail_ceiling(self, q_size: int, s: float) -> float:
        """Probability ceiling on the exceedance event, clamped to 1."""
        return min(1.0, self.tail_coeff * q_size**self.tail_vol_exp * s**self.tail_s_exp)


def uniform_regularity_params(ell: float, alpha: float) -> RegularityParams:
    """Regularity parameters achieved by the uniform law on [0, ell].

    With threshold s^(1-alpha) (that is, delta = s^alpha) the quadratic
    modulus tail gives ceiling |Q|^2 s^(2 alpha) / (4 ell^2).  The
    default experiment preset is alpha = 1/3, balancing the two
    exponents at 2/3.
    """
    _check_ell(ell)
    _check_alpha(alpha)
    return RegularityParams(
        threshold_coeff=1.0,
        threshold_vol_exp=0.0,
        threshold_s_exp=1.0 - alpha,
        tail_coeff=1.0 / (4.0 * ell**2),
        tail_vol_exp=2.0,
        tail_s_exp=2.0 * alpha,
    )


def regularity_check(
    params: RegularityParams, q_size: int, s: float, empirical_tail: float
) -> bool:
    """True iff an observed exceedance frequency respects the ceiling."""
    if q_size < 2:
        raise DomainError(f"need |Q| >= 2, got {q_size}")
    if not 0.0 <= empirical_tail <= 1.0:
        raise DomainError(f"empirical tail must be a frequency, got {empirical_tail}")
    return empirical_tail <= params.tail_ceiling(q_size, s)


@dataclass(frozen=True)
class SmoothTailBound:
    """Refined quadratic bound with its admissibility verdict.

    ``value`` is None when delta exceeds delta_max = c_star n^(-3/2);
    the refined bound says nothing there and callers must fall back to
    the coarser forms rather than extrapolate.
    """

    value: float | None
    admissible: bool
    delta_max: float


def smooth_modulus_tail_bound(
    n: int, ell: float, rho_max: float, delta: float, constants: SmoothConstants
) -> SmoothTailBound:
    """Refined modulus tail 4 rho_max^2 n^2 delta^2 / ell^2 for smooth laws.

    Only admissible for 0 < delta <= c_star n^(-3/2), where c_star comes
    from the density's log-derivative constants.  Example: the cosine
    bump with beta = 0.5 on [0, 1] has c_star = 1/(4 pi) ~ 0.0796, so at
    n = 4 thresholds up to ~0.00995 are admissible and delta = 0.005
    gives 0.0036.
    """
    _check_n(n)
    _check_ell(ell)
    if rho_max <= 0:
        raise DomainError(f"density bound must be positive, got {rho_max}")
    delta_max = constants.c_star * n ** (-1.5)
    if not 0 < delta <= delta_max:
        return SmoothTailBound(value=None, admissible=False, delta_max=delta_max)
    value = min(1.0, 4.0 * rho_max**2 * n**2 * delta**2 / ell**2)
    return SmoothTailBound(value=value, admissible=True, delta_max=delta_max)


def wegner_bound_gaussian(volume: int, interval_len: float) -> float:
    """Wegner-type bound |Lambda|^(3/2) |I| / sqrt(2 pi) for Gaussian potential.

    Combines the eigenvalue-count ceiling |Lambda| nu(|I|) with the
    Gaussian modulus bound sqrt(|Lambda|) |I| / sqrt(2 pi).  Example:
    volume 16 and |I| = 0.01 give about 0.2553.
    """
    if volume < 1:
        raise DomainError(f"volume must be >= 1, got {volume}")
    if interval_len < 0:
        raise DomainError(f"interval length must be >= 0, got {interval_len}")
    return min(1.0, volume**1.5 * interval_len / math.sqrt(2.0 * math.pi))


def eigenvalue_concentration_bound(volume: int, nu_value: float) -> float:
    """Ceiling |Lambda| nu on P(some eigenvalue falls in the interval)."""
    if volume < 1:
        raise DomainError(f"volume must be >= 1, got {volume}")
    if not 0.0 <= nu_value <= 1.0:
        raise DomainError(f"nu must be a probability, got {nu_value}")
    return min(1.0, volume * nu_value)


@dataclass(frozen=True)
class GraphGrowth:
    """Polynomial ball-growth budget: card B_L <= coeff * L^exponent."""

    coeff: float
    exponent: float

    def __post_init__(self) -> None:
        if self.coeff <= 0 or self.exponent < 0:
            raise DomainError(
                f"need coeff > 0 and exponent >= 0, got ({self.coeff}, {self.exponent})"
            )


def ball_growth_ok(cardinality: int, radius: int, growth: GraphGrowth) -> bool:
    """True iff a ball of the given radius respects the growth budget."""
    if cardinality < 1 or radius < 1:
        raise DomainError(
            f"need cardinality >= 1 and radius >= 1, got ({cardinality}, {radius})"
        )
    return cardinality <= growth.coeff * radius**growth.exponent
