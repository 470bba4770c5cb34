"""Conditional continuity modulus of the sample mean along a fiber.

Given the fluctuation vector, the rescaled mean is distributed along
the fiber with density proportional to prod_j rho(X_j(u)); the modulus
nu(s) is the largest probability any window of width sqrt(N) s can
capture.  For the uniform law that density is flat and the modulus is
the exact length ratio; for a Gaussian law it is a closed form in Phi;
for smooth laws it is computed numerically by a sliding-window sup.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .distributions import Smooth, _simpson_refining, smooth_constants
from .errors import DomainError, OutOfSupportError
from .geometry import FiberGeometry, Sample

_TWO_PI = 2.0 * math.pi
# Sliding windows advance by window/16; the scan misses the true sup by
# at most (peak fiber density) * window/16.
_WINDOW_REFINE = 16


@dataclass(frozen=True)
class ModulusQuery:
    """Window width s for the modulus, and whether to clamp the report.

    With ``clamp`` the modulus is reported as the probability
    min(raw, 1); without it the unclamped linear ratio is returned,
    which is the natural object for subadditivity checks.
    """

    s: float
    clamp: bool = True

    def __post_init__(self) -> None:
        if self.s < 0 or not math.isfinite(self.s):
            raise DomainError(f"window width must be finite and >= 0, got {self.s}")


@dataclass(frozen=True)
class FiberModulus:
    """Modulus on one fiber: clamped value and the raw length ratio.

    ``raw`` is sqrt(N) s / |fiber| with +inf on a degenerate fiber; it
    can exceed 1 and is the quantity whose tail the closed-form bounds
    control.  ``nu`` is the reported modulus (a probability unless the
    query disabled clamping).
    """

    nu: float
    raw: float


@dataclass(frozen=True)
class GaussianModulus:
    """Exact Gaussian modulus and its linear upper bound.

    exact = 2 Phi(sqrt(n) s / 2) - 1 never exceeds
    linear_bound = sqrt(n) s / sqrt(2 pi), which itself may exceed 1.
    """

    exact: float
    linear_bound: float


@dataclass(frozen=True)
class FiberDensity:
    """Normalized conditional density along one fiber.

    The fiber is parametrized by arc length u in [u_lo, u_hi]; pdf(u)
    integrates to 1 over that interval (normalizer fixed by refining
    Simpson quadrature at construction).
    """

    u_lo: float
    u_hi: float
    normalizer: float
    unnormalized: Callable[[np.ndarray], np.ndarray]

    def pdf(self, u: np.ndarray) -> np.ndarray:
        return np.asarray(self.unnormalized(u), dtype=float) / self.normalizer


@dataclass(frozen=True)
class LogDerivativeCheck:
    """Two routes to the fiber density derivative at one point.

    ``finite_difference`` is a central difference of the normalized
    density; ``analytic`` is p(u) times the summed score
    sum_j rho'(x_j)/rho(x_j) / sqrt(n).  ``log_ratio`` is |p'/p| at the
    point, to be compared against c1 sqrt(n).
    """

    finite_difference: float
    analytic: float
    abs_diff: float
    log_ratio: float
    log_ratio_bound: float
    within_bound: bool


def modulus_uniform_exact(geom: FiberGeometry, query: ModulusQuery, n: int) -> FiberModulus:
    """Exact modulus under the uniform law: the window/fiber length ratio.

    A window of width sqrt(n) s on a flat density of support ``length``
    captures probability min(1, sqrt(n) s / length); a degenerate fiber
    is a point mass, reported as nu = 1 with raw = +inf.

    Example: n = 2, X = (0.3, 0.7), ell = 1, s = 0.1 gives 1/6.
    """
    if n < 2:
        raise DomainError(f"need n >= 2, got {n}")
    if geom.length == 0.0:
        return FiberModulus(nu=1.0, raw=math.inf)
    raw = math.sqrt(n) * query.s / geom.length
    return FiberModulus(nu=min(raw, 1.0) if query.clamp else raw, raw=raw)


def modulus_gaussian(n: int, s: float) -> GaussianModulus:
    """Closed-form modulus for IID standard Gaussian coordinates.

    Conditionally on the fluctuations the mean is still N(0, 1/n), so
    the best window is centered: exact = 2 Phi(sqrt(n) s / 2) - 1.  The
    density cap sqrt(n)/sqrt(2 pi) gives the linear bound.
    """
    if n < 1:
        raise DomainError(f"need n >= 1, got {n}")
    if s < 0:
        raise DomainError(f"window width must be >= 0, got {s}")
    exact = math.erf(math.sqrt(n) * s / (2.0 * math.sqrt(2.0)))
    return GaussianModulus(exact=exact, linear_bound=math.sqrt(n) * s / math.sqrt(_TWO_PI))


def fiber_density(sample: Sample, spec: Smooth) -> FiberDensity:
    """Conditional density of the fiber position for a smooth law.

    Along the fiber the coordinates move in lockstep,
    x_j(u) = X_j + u / sqrt(n), so the conditional density at parameter
    u is proportional to prod_j rho(x_j(u)) restricted to the in-cube
    interval.
    """
    x = sample.values
    n = sample.n
    tol = 1e-12 * max(1.0, spec.ell)
    if x.min() < -tol or x.max() > spec.ell + tol:
        raise OutOfSupportError(
            f"sample leaves [0, {spec.ell}]: min={x.min()}, max={x.max()}"
        )
    sqrt_n = math.sqrt(n)
    u_lo = -sqrt_n * float(x.min())
    u_hi = sqrt_n * (spec.ell - float(x.max()))

    def unnormalized(u: np.ndarray) -> np.ndarray:
        pos = x[None, :] + np.asarray(u, dtype=float).reshape(-1, 1) / sqrt_n
        # clip rounding excursions at the fiber endpoints back onto the support
        vals = spec.rho(np.clip(pos, 0.0, spec.ell))
        return np.prod(vals, axis=1).reshape(np.shape(u))

    if u_hi <= u_lo:
        return FiberDensity(u_lo=u_lo, u_hi=u_lo, normalizer=1.0, unnormalized=unnormalized)
    z = _simpson_refining(unnormalized, u_lo, u_hi)
    return FiberDensity(u_lo=u_lo, u_hi=u_hi, normalizer=z, unnormalized=unnormalized)


def modulus_smooth_numeric(
    sample: Sample, spec: Smooth, query: ModulusQuery, grid: int = 1024
) -> FiberModulus:
    """Sliding-window sup of the conditional density for a smooth law.

    Evaluates the normalized fiber density on ``grid`` intervals and
    takes the largest window integral of width sqrt(n) s, advancing the
    window by 1/16 of its width (the flush-right window is always
    included).  With a constant density this reduces to the uniform
    closed form.

    ``raw`` is still the geometric length ratio; ``nu`` is the window
    sup, clamped semantics as in the query.
    """
    if grid < 64:
        raise DomainError(f"grid must be >= 64 intervals, got {grid}")
    fd = fiber_density(sample, spec)
    n = sample.n
    length = fd.u_hi - fd.u_lo
    if length <= 0.0:
        return FiberModulus(nu=1.0, raw=math.inf)
    raw = math.sqrt(n) * query.s / length
    window = math.sqrt(n) * query.s
    if window >= length:
        return FiberModulus(nu=1.0 if query.clamp else raw, raw=raw)

    m = grid + (grid % 2)
    u = np.linspace(fd.u_lo, fd.u_hi, m + 1)
    p = fd.pdf(u)
    h = length / m
    cum = np.concatenate([[0.0], np.cumsum((p[1:] + p[:-1]) * (h / 2.0))])
    total = cum[-1]

    step = window / _WINDOW_REFINE
    starts = np.arange(fd.u_lo, fd.u_hi - window, step)
    starts = np.append(starts, fd.u_hi - window)
    mass = np.interp(starts + window, u, cum) - np.interp(starts, u, cum)
    sup = float(mass.max() / total)
    return FiberModulus(nu=sup if query.clamp else raw, raw=raw)


def log_derivative_check(
    sample: Sample, spec: Smooth, u: float, h: float = 1e-5
) -> LogDerivativeCheck:
    """Compare two computations of the fiber density derivative at u.

    The product form of the conditional density gives
    p'(u) = p(u) sum_j rho'(x_j(u)) / rho(x_j(u)) / sqrt(n); a central
    finite difference of the normalized density must agree.  The log
    ratio |p'/p| is bounded by c1 sqrt(n) with c1 from the density's
    declared constants.

    Raises:
        DomainError: if [u - h, u + h] is not inside the fiber.
    """
    fd = fiber_density(sample, spec)
    if h <= 0:
        raise DomainError(f"step must be positive, got {h}")
    if u - h < fd.u_lo or u + h > fd.u_hi:
        raise DomainError(
            f"need [u-h, u+h] inside the fiber [{fd.u_lo}, {fd.u_hi}], got u={u}"
        )
    n = sample.n
    sqrt_n = math.sqrt(n)
    pu = float(fd.pdf(np.array([u]))[0])
    fd_deriv = float((fd.pdf(np.array([u + h])) - fd.pdf(np.array([u - h])))[0] / (2.0 * h))
    pos = sample.values + u / sqrt_n
    score = float(np.sum(spec.rho_prime(pos) / spec.rho(pos))) / sqrt_n
    analytic = pu * score
    bound = smooth_constants(spec).c1 * sqrt_n
    log_ratio = abs(score)
    return LogDerivativeCheck(
        finite_difference=fd_deriv,
        analytic=analytic,
        abs_diff=abs(fd_deriv - analytic),
        log_ratio=log_ratio,
        log_ratio_bound=bound,
        within_bound=log_ratio <= bound * (1.0 + 1e-9),
    )
