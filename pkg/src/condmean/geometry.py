"""Sample-mean fiber geometry inside the cube [0, ell]^N.

Conditioning the sample mean on the fluctuation vector pins the sample
to a line segment in direction (1, ..., 1): the fiber through the
observed point.  This module computes the mean/fluctuation split and
the Euclidean fiber length, both in closed form and by a brute-force
line scan used as an independent cross-check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidSampleError, OutOfSupportError

try:
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dependency
    _HAVE_NUMBA = False

# Relative slack for support membership checks.  Coordinates may sit on
# the cube boundary up to rounding of the shift X - a.
_SUPPORT_RTOL = 1e-12


@dataclass(frozen=True)
class Sample:
    """An ordered sample of N >= 2 real coordinates."""

    values: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.values, dtype=float)
        if arr.ndim != 1 or arr.shape[0] < 2:
            raise InvalidSampleError(
                f"sample must be a 1-d vector of length >= 2, got shape {arr.shape}"
            )
        if not np.all(np.isfinite(arr)):
            raise InvalidSampleError("sample contains non-finite values")
        object.__setattr__(self, "values", arr)

    @property
    def n(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class Decomposition:
    """Split of a sample into its mean and mean-zero fluctuations.

    Attributes:
        mean: sample mean (1/N) sum X_i.
        rescaled_mean: sqrt(N) times the mean.
        fluctuations: eta_i = X_i - mean, summing to zero.
        anchored: Y_i = X_i - X_N for i < N; a fiber label that does not
            depend on where along the fiber the sample sits.
    """

    mean: float
    rescaled_mean: float
    fluctuations: np.ndarray
    anchored: np.ndarray


@dataclass(frozen=True)
class FiberGeometry:
    """Geometry of the fiber through a sample inside [0, ell]^N.

    ``length`` is measured in the normalized (Euclidean) parameter along
    the direction (1, ..., 1)/sqrt(N), so the full diagonal of the cube
    has length sqrt(N) * ell.
    """

    length: float
    x_min: float
    x_max: float
    spread: float  # x_max - x_min, the sample range


def decompose(sample: Sample) -> Decomposition:
    """Split a sample into mean, rescaled mean, and fluctuations.

    The fluctuation vector is what the conditioning sigma-algebra
    measures; the anchored labels Y_i = X_i - X_N identify the fiber
    itself.

    Example: X = (0.2, 0.5, 0.9) gives mean 0.53333..., fluctuations
    (-0.33333..., -0.03333..., 0.36666...), anchored (-0.7, -0.4).
    """
    x = sample.values
    mean = float(x.mean())
    eta = x - mean
    return Decomposition(
        mean=mean,
        rescaled_mean=math.sqrt(sample.n) * mean,
        fluctuations=eta,
        anchored=x[:-1] - x[-1],
    )


def _shifted(sample: Sample, ell: float, offsets: np.ndarray | None) -> np.ndarray:
    if ell <= 0 or not math.isfinite(ell):
        raise OutOfSupportError(f"side length must be positive and finite, got {ell}")
    x = sample.values
    if offsets is not None:
        a = np.asarray(offsets, dtype=float)
        if a.shape != x.shape:
            raise InvalidSampleError(
                f"offsets shape {a.shape} does not match sample shape {x.shape}"
            )
        x = x - a
    tol = _SUPPORT_RTOL * max(1.0, ell)
    if x.min() < -tol or x.max() > ell + tol:
        raise OutOfSupportError(
            f"coordinates outside [0, {ell}]: min={x.min()}, max={x.max()}"
        )
    return np.clip(x, 0.0, ell)


def fiber_length_cube(
    sample: Sample, ell: float, offsets: np.ndarray | None = None
) -> FiberGeometry:
    """Closed-form fiber length sqrt(N) * (ell - spread).

    The fiber is the intersection of the line {X + t(1,...,1)} with the
    cube [0, ell]^N (after subtracting per-coordinate ``offsets`` when
    given).  Its Euclidean length equals sqrt(N) times the slack the
    sample range leaves inside the side length.

    Raises:
        OutOfSupportError: if any shifted coordinate leaves [0, ell].
    """
    x = _shifted(sample, ell, offsets)
    x_min = float(x.min())
    x_max = float(x.max())
    spread = x_max - x_min
    length = math.sqrt(sample.n) * max(0.0, ell - spread)
    return FiberGeometry(length=length, x_min=x_min, x_max=x_max, spread=spread)


if _HAVE_NUMBA:

    @njit(cache=True, nogil=True)
    def _scan_steps(x: np.ndarray, ell: float, step: float) -> int:
        """Count grid nodes of spacing ``step`` on the in-cube segment.

        Marches outward from t = 0 (the sample itself, known to be
        inside).  The in-cube set along the line is an interval, so the
        first exit in each direction terminates the march.
        """
        n = x.shape[0]
        inv = 1.0 / math.sqrt(n)
        count = 1
        for sign in (1.0, -1.0):
            t = sign * step
            while True:
                ok = True
                for i in range(n):
                    v = x[i] + t * inv
                    if v < 0.0 or v > ell:
                        ok = False
                        break
                if not ok:
                    break
                count += 1
                t += sign * step
        return count

else:  # pragma: no cover - exercised only without numba

    def _scan_steps(x: np.ndarray, ell: float, step: float) -> int:
        n = x.shape[0]
        inv = 1.0 / math.sqrt(n)
        count = 1
        for sign in (1.0, -1.0):
            k = 1
            while True:
                v = x + sign * k * step * inv
                if v.min() < 0.0 or v.max() > ell:
                    break
                count += 1
                k += 1
        return count


def fiber_length_bruteforce(
    sample: Sample,
    ell: float,
    offsets: np.ndarray | None = None,
    step: float | None = None,
) -> float:
    """Measure the fiber length by scanning the line at spacing ``step``.

    Walks t over a uniform grid through the sample point and counts the
    nodes whose shifted coordinates all stay inside [0, ell]; the
    measured length is (count - 1) * step.  Deliberately avoids the
    min/max shortcut of :func:`fiber_length_cube` so the two routes stay
    independent.  Accuracy is within about 2 * step of the true length.

    Args:
        step: grid spacing; defaults to 1e-5 * ell.
    """
    x = _shifted(sample, ell, offsets)
    if step is None:
        step = 1e-5 * ell
    if step <= 0:
        raise InvalidSampleError(f"step must be positive, got {step}")
    count = _scan_steps(x, ell, step)
    return (count - 1) * step
