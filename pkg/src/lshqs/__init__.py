"""Density-based clustering with hashed neighbor search and density estimates.

Quick Shift links every point to a nearby point of higher estimated density;
this package builds that forest with locality-sensitive hashing for both the
neighbor step and the kernel density estimates, keeping the whole pipeline
subquadratic, and ships the exact quadratic baselines it is tested against.
"""

from .data import Dataset, SeedSpec, derive_seed, squared_euclidean
from .estimator import LSHQuickShift
from .kde import (
    DensityEstimate,
    HbeEstimator,
    KernelSpec,
    build_hbe,
    estimate_all,
    exact_kde,
    gaussian_kernel,
    hbe_estimate,
)
from .lsh import LshIndex, LshParams, build_index, collision_probability, default_lsh_params
from .metrics import (
    adjusted_mutual_info,
    adjusted_rand_index,
    contingency_table,
    hausdorff_distance,
)
from .quickshift import (
    ClusterLabels,
    ModeSet,
    QuickShiftConfig,
    QuickShiftForest,
    check_separation,
    exact_quickshift,
    extract_labels,
    extract_modes,
    lsh_quickshift,
)

__version__ = "0.1.0"

__all__ = [
    "Dataset",
    "SeedSpec",
    "derive_seed",
    "squared_euclidean",
    "LshIndex",
    "LshParams",
    "build_index",
    "collision_probability",
    "default_lsh_params",
    "KernelSpec",
    "DensityEstimate",
    "HbeEstimator",
    "gaussian_kernel",
    "exact_kde",
    "build_hbe",
    "hbe_estimate",
    "estimate_all",
    "QuickShiftConfig",
    "QuickShiftForest",
    "ClusterLabels",
    "ModeSet",
    "lsh_quickshift",
    "exact_quickshift",
    "extract_labels",
    "extract_modes",
    "check_separation",
    "adjusted_rand_index",
    "adjusted_mutual_info",
    "contingency_table",
    "hausdorff_distance",
    "LSHQuickShift",
]
