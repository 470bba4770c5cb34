"""Conditional regularity of the sample mean on product spaces.

Conditioning an IID sample on its fluctuations leaves one degree of
freedom: the position along a fiber in direction (1, ..., 1).  This
package computes that fiber's geometry, the conditional continuity
modulus of the mean, closed-form tail bounds with their exact
order-statistic oracles, and the spectral consequences for random
operators H = kinetic + potential.
"""

from ._engine import TailEstimate, wilson_interval
from .bounds import (
    GraphGrowth,
    RegularityParams,
    SmoothTailBound,
    ball_growth_ok,
    eigenvalue_concentration_bound,
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
    smooth_modulus_tail_bound,
    uniform_regularity_params,
    wegner_bound_gaussian,
)
from .distributions import (
    DensitySpec,
    Gaussian,
    SeedSpec,
    Smooth,
    SmoothConstants,
    Uniform,
    fiber_length_tail_exact_uniform,
    gaussian_mean_density_bound,
    sample_block,
    sample_iid,
    smooth_constants,
    smooth_density,
    uniform_range_cdf,
)
from .errors import (
    CondMeanError,
    ConfigError,
    ConvergenceError,
    DensitySpecError,
    DomainError,
    InvalidSampleError,
    OutOfSupportError,
)
from .geometry import (
    Decomposition,
    FiberGeometry,
    Sample,
    decompose,
    fiber_length_bruteforce,
    fiber_length_cube,
)
from .modulus import (
    FiberModulus,
    GaussianModulus,
    LogDerivativeCheck,
    ModulusQuery,
    fiber_density,
    log_derivative_check,
    modulus_gaussian,
    modulus_smooth_numeric,
    modulus_uniform_exact,
)
from .montecarlo import (
    ExperimentConfig,
    FiberTailResult,
    IndependenceReport,
    ModulusTailResult,
    MuRule,
    PartitionReport,
    PartitionSpec,
    RegularityReport,
    empirical_window_sup,
    estimate_fiber_tail,
    estimate_local_partition,
    estimate_modulus_tail,
    gaussian_independence_check,
    mean_band_probability_n2,
    regularity_experiment,
)
from .spectral import (
    EvcReport,
    GraphSpec,
    OperatorInstance,
    SpectralCount,
    build_operator,
    count_in_interval,
    eigensystem_symmetric,
    eigenvalues_symmetric,
    evc_experiment,
    kinetic_matrix,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
