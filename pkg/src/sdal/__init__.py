"""Subspace-distance-driven active learning for parametric reduced-order models."""

from .actlearn import ActiveLearnConfig, ActiveLearnResult, Status, Variant, error_estimator, run_active_learning
from .burgers import ArchiveFom, BurgersConfig, BurgersFom, FomOracle, burgers_query
from .params import ParameterStore, commit_sample, neighbor_pairs, select_new_sample
from .pod import PodSubspace, SnapshotMatrix, compute_pod, truncated_svd
from .rbf import Kernel, RbfKernelSpec, RbfNetwork, fit_interpolation, fit_regression
from .subspace import (
    Measure,
    OrthonormalBasis,
    distance_d1,
    distance_d2,
    distance_d2_normalized,
    principal_angles,
    similarity_dtilde,
)

__version__ = "0.1.0"

__all__ = [
    "ActiveLearnConfig",
    "ActiveLearnResult",
    "ArchiveFom",
    "BurgersConfig",
    "BurgersFom",
    "FomOracle",
    "Kernel",
    "Measure",
    "OrthonormalBasis",
    "ParameterStore",
    "PodSubspace",
    "RbfKernelSpec",
    "RbfNetwork",
    "SnapshotMatrix",
    "Status",
    "Variant",
    "burgers_query",
    "commit_sample",
    "compute_pod",
    "distance_d1",
    "distance_d2",
    "distance_d2_normalized",
    "error_estimator",
    "fit_interpolation",
    "fit_regression",
    "neighbor_pairs",
    "principal_angles",
    "run_active_learning",
    "select_new_sample",
    "similarity_dtilde",
    "truncated_svd",
]
