"""Kernel k-groups clustering and alternating kernel biclustering (AKKB)."""

__version__ = "0.1.0"

from .akkb import AkkbConfig, BiclusterResult, akkb_fit, akkb_init, col_update, empirical_risk, row_update
from .data import (Bipartition, CovariateLayout, DataError, DataMatrix, DegenerateError, SubsetView,
                   build_matrix, transpose_roles)
from .evaluation import AccuracyReport, bandwidth_sweep, bicluster_accuracy, clustering_accuracy
from .kernels import (GramMatrix, KernelSpec, gaussian_kernel, gram_matrix, median_heuristic,
                      mmd_squared, multisample_energy, normalized_sq_distance)
from .kgroups import ClusterState, hartigan_sweep, kernel_kgroups, move_delta, objective
from .synth import ScenarioSpec, gen_scenario, sample_truncated_normal

__all__ = [
    "AccuracyReport", "AkkbConfig", "BiclusterResult", "Bipartition", "ClusterState",
    "CovariateLayout", "DataError", "DataMatrix", "DegenerateError", "GramMatrix", "KernelSpec",
    "ScenarioSpec", "SubsetView", "akkb_fit", "akkb_init", "bandwidth_sweep", "bicluster_accuracy",
    "build_matrix", "clustering_accuracy", "col_update", "empirical_risk", "gaussian_kernel",
    "gen_scenario", "gram_matrix", "hartigan_sweep", "kernel_kgroups", "median_heuristic",
    "mmd_squared", "move_delta", "multisample_energy", "normalized_sq_distance", "objective",
    "row_update", "sample_truncated_normal", "transpose_roles",
]
