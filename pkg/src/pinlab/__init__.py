"""Phase diagrams and disorder-relevance diagnostics for random pinning."""

__version__ = "0.1.0"

from .disorder import (
    continuous_disorder,
    discrete_disorder,
    gaussian_disorder,
    rademacher_disorder,
)
from .errors import (
    DomainError,
    InternalConsistencyError,
    InvalidParameterError,
    PinlabError,
    PrecisionError,
    UndecidedError,
)
from .homopolymer import (
    annealed_critical_curve,
    annealed_free_energy,
    homopolymer_free_energy,
    joint_free_energy,
    lambda0,
    joint_truncation_bound,
)
from .kernels import (
    chi,
    kernel_entropy,
    make_geometric_kernel,
    make_power_kernel,
    make_table_kernel,
    overlap_kernel,
    return_probabilities,
    truncate_kernel,
)
from .quenched import (
    PolymerParams,
    QuenchedSearchConfig,
    partition_function_log,
    quenched_critical_point,
    quenched_free_energy,
)
from .relevance import (
    annealed_variational_check,
    beta_c_star,
    beta_c_star_star,
    critical_temperature_bounds,
    entropy_estimator,
    entropy_monotonicity_scan,
    replica_moment,
)
from .rng import RngStream, derive_stream

__all__ = [
    "__version__",
    # errors
    "PinlabError",
    "InvalidParameterError",
    "DomainError",
    "PrecisionError",
    "UndecidedError",
    "InternalConsistencyError",
    # kernels
    "make_power_kernel",
    "make_geometric_kernel",
    "make_table_kernel",
    "return_probabilities",
    "chi",
    "truncate_kernel",
    "kernel_entropy",
    "overlap_kernel",
    # disorder
    "gaussian_disorder",
    "rademacher_disorder",
    "discrete_disorder",
    "continuous_disorder",
    # homopolymer
    "homopolymer_free_energy",
    "annealed_free_energy",
    "annealed_critical_curve",
    "lambda0",
    "joint_free_energy",
    "joint_truncation_bound",
    # quenched
    "PolymerParams",
    "QuenchedSearchConfig",
    "partition_function_log",
    "quenched_free_energy",
    "quenched_critical_point",
    # relevance
    "beta_c_star",
    "beta_c_star_star",
    "critical_temperature_bounds",
    "replica_moment",
    "entropy_estimator",
    "entropy_monotonicity_scan",
    "annealed_variational_check",
    # rng
    "RngStream",
    "derive_stream",
]
