"""Fusion subspace clustering.

Fit one low-dimensional subspace per data column under a pairwise fusion
penalty that pulls subspaces of similar columns together, cluster the
fitted subspaces, and use per-cluster bases to fill in missing entries.
"""

from .completion import (
    ClusterModel,
    cluster_basis,
    complete_column,
    complete_matrix,
    refit_clusters,
)
from .data import MaskedMatrix
from .errors import FscError, InputError, NumericalError
from .geometry import (
    orthonormalize,
    pairwise_projector_distances,
    projector,
    projector_distance,
    restricted_projector,
)
from .matrixio import (
    read_labels,
    read_manifest,
    read_mask,
    read_matrix,
    write_labels,
    write_manifest,
    write_mask,
    write_matrix,
    write_table,
)
from .metrics import clustering_error, completion_rmse, subspace_affinity
from .optimizer import FitTrace, FscConfig, fit, lambda_scale
from .selection import (
    LambdaPathReport,
    RankSweepReport,
    default_lambda_grid,
    find_lambda_max,
    fit_score,
    fused_components,
    lambda_path,
    rank_sweep,
    select_labels,
    select_model,
)
from .spectral import cluster, eigengap_k, kmeans, similarity, spectral_embed
from .synthetic import SyntheticInstance, gen_mask, gen_uos

__version__ = "0.1.0"

__all__ = [
    "ClusterModel",
    "FitTrace",
    "FscConfig",
    "FscError",
    "InputError",
    "LambdaPathReport",
    "MaskedMatrix",
    "NumericalError",
    "RankSweepReport",
    "SyntheticInstance",
    "cluster",
    "cluster_basis",
    "clustering_error",
    "complete_column",
    "complete_matrix",
    "completion_rmse",
    "default_lambda_grid",
    "eigengap_k",
    "find_lambda_max",
    "fit",
    "fit_score",
    "fused_components",
    "gen_mask",
    "gen_uos",
    "kmeans",
    "lambda_path",
    "lambda_scale",
    "orthonormalize",
    "pairwise_projector_distances",
    "projector",
    "projector_distance",
    "rank_sweep",
    "read_labels",
    "read_manifest",
    "read_mask",
    "read_matrix",
    "refit_clusters",
    "restricted_projector",
    "select_labels",
    "select_model",
    "similarity",
    "spectral_embed",
    "subspace_affinity",
    "write_labels",
    "write_manifest",
    "write_mask",
    "write_matrix",
    "write_table",
    "__version__",
]
