"""Per-cluster subspace estimates and missing-entry completion.

Each cluster's basis is the rank-r principal subspace of its members'
orthonormalized bases laid side by side; each column's coefficients are
the least-squares fit of its observed entries against the rows of that
basis, and the completed column is the basis times those coefficients.
"""

from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg

from .data import MaskedMatrix
from .errors import (
    CompletionFailure,
    EmptyCluster,
    InsufficientObservations,
    RankDeficient,
    ShapeMismatch,
)
from .geometry import as_pattern, orthonormalize
from .optimizer import fit, lambda_scale

__all__ = ["ClusterModel", "cluster_basis", "coefficients",
           "complete_column", "complete_matrix", "refit_clusters"]


@dataclass(frozen=True)
class ClusterModel:
    """Fitted per-cluster subspaces plus per-column coefficients.

    cluster_ids lists the distinct label values in ascending order;
    cluster_bases[k] is the orthonormal basis for cluster_ids[k];
    coefficients[i] holds the length-r coefficient vector of column i
    in its cluster's basis.
    """

    labels: np.ndarray
    cluster_ids: np.ndarray
    cluster_bases: np.ndarray
    coefficients: np.ndarray

    @property
    def n_clusters(self) -> int:
        return self.cluster_ids.shape[0]

    def basis_for(self, label) -> np.ndarray:
        idx = np.searchsorted(self.cluster_ids, label)
        if idx >= self.cluster_ids.size or self.cluster_ids[idx] != label:
            raise EmptyCluster(label)
        return self.cluster_bases[idx]

    def predict(self) -> np.ndarray:
        """The completed matrix: column i is its cluster basis times theta_i."""
        d = self.cluster_bases.shape[1]
        n = self.labels.shape[0]
        out = np.empty((d, n))
        for k, cid in enumerate(self.cluster_ids):
            members = np.flatnonzero(self.labels == cid)
            out[:, members] = self.cluster_bases[k] @ self.coefficients[members].T
        return out


def cluster_basis(bases, labels, label) -> np.ndarray:
    """Principal rank-r basis of one cluster's member subspaces.

    Members' bases are orthonormalized, concatenated column-wise, and
    reduced to the top-r left singular vectors, so the result is the
    best rank-r summary of the member spans.
    """
    arr = np.asarray(bases, dtype=float)
    labels = np.asarray(labels).ravel()
    if arr.ndim != 3:
        raise ShapeMismatch(f"expected a stack of bases, got shape {arr.shape}")
    if labels.shape[0] != arr.shape[0]:
        raise ShapeMismatch(
            f"{labels.shape[0]} labels for {arr.shape[0]} bases")
    members = np.flatnonzero(labels == label)
    if members.size == 0:
        raise EmptyCluster(label)
    r = arr.shape[2]
    wide = np.concatenate([orthonormalize(arr[i]) for i in members], axis=1)
    u, _, _ = scipy.linalg.svd(wide, full_matrices=False)
    return u[:, :r]


def coefficients(x_observed, pattern, basis) -> np.ndarray:
    """Least-squares coefficients of observed entries in the basis rows.

    Solves (U^w' U^w) theta = U^w' x^w where U^w keeps only the observed
    rows of the basis.
    """
    basis = np.asarray(basis, dtype=float)
    x_observed = np.asarray(x_observed, dtype=float).ravel()
    d, r = basis.shape
    rows = as_pattern(pattern, d)
    if x_observed.shape[0] != rows.shape[0]:
        raise ShapeMismatch(
            f"{x_observed.shape[0]} observed values for {rows.shape[0]} rows")
    if rows.shape[0] < r:
        raise InsufficientObservations(rows.shape[0], r)
    sub = basis[rows]
    gram = sub.T @ sub
    try:
        theta = scipy.linalg.solve(gram, sub.T @ x_observed, assume_a="pos")
    except (scipy.linalg.LinAlgError, ValueError):
        raise RankDeficient(
            "restricted basis is numerically rank deficient") from None
    if not np.all(np.isfinite(theta)):
        raise RankDeficient("coefficient solve produced non-finite values")
    return theta


def complete_column(x_observed, pattern, basis) -> np.ndarray:
    """Fill one column: basis times its least-squares coefficients."""
    basis = np.asarray(basis, dtype=float)
    return basis @ coefficients(x_observed, pattern, basis)


def refit_clusters(x, labels, cfg, fuse_mult: float = 1000.0):
    """Refit each labeled group alone under a strongly fusing weight.

    Fitting one group by itself with the fusion weight far above the
    data scale is the single-subspace limit of the fused objective, so
    every member ends up carrying the group's consensus basis.  The
    returned stack feeds cluster_basis / complete_matrix when the labels
    are trusted; a group joint fit beats pooling independent per-column
    fits, whose unconstrained directions are arbitrary.
    """
    if not isinstance(x, MaskedMatrix):
        x = MaskedMatrix(np.asarray(x, dtype=float))
    labels = np.asarray(labels).ravel()
    if labels.shape[0] != x.n:
        raise ShapeMismatch(f"{labels.shape[0]} labels for {x.n} columns")
    counts = x.column_counts()
    short = np.flatnonzero(counts < cfg.rank)
    if short.size:
        col = int(short[0])
        raise InsufficientObservations(int(counts[col]), cfg.rank, column=col)
    bases = np.empty((x.n, x.d, cfg.rank))
    for label in np.unique(labels):
        cols = np.flatnonzero(labels == label)
        sub = x.subset_columns(cols)
        lam = fuse_mult * lambda_scale(sub.d, sub.n)
        fitted, _ = fit(sub, replace(cfg, lam=lam))
        bases[cols] = fitted
    return bases


def complete_matrix(x, bases, labels):
    """Complete every column of x using per-cluster average bases.

    Returns (completed, model).  The completed matrix is the model
    prediction everywhere, including observed entries (callers that
    want to preserve observations overwrite them afterwards).  Columns
    that cannot be completed are collected into one CompletionFailure
    listing each failing column and its cause.
    """
    if not isinstance(x, MaskedMatrix):
        x = MaskedMatrix(np.asarray(x, dtype=float))
    arr = np.asarray(bases, dtype=float)
    labels = np.asarray(labels).ravel()
    if arr.ndim != 3 or arr.shape[0] != x.n:
        raise ShapeMismatch(
            f"expected {x.n} bases, got array of shape {arr.shape}")
    if labels.shape[0] != x.n:
        raise ShapeMismatch(f"{labels.shape[0]} labels for {x.n} columns")

    cluster_ids = np.unique(labels)
    stack = np.empty((cluster_ids.size, x.d, arr.shape[2]))
    for k, cid in enumerate(cluster_ids):
        stack[k] = cluster_basis(arr, labels, cid)

    coef = np.empty((x.n, arr.shape[2]))
    failures = []
    for i in range(x.n):
        rows = x.column_pattern(i)
        basis = stack[np.searchsorted(cluster_ids, labels[i])]
        try:
            coef[i] = coefficients(x.values[rows, i], rows, basis)
        except (InsufficientObservations, RankDeficient) as exc:
            failures.append((i, exc))
    if failures:
        raise CompletionFailure(failures)
    model = ClusterModel(labels.copy(), cluster_ids, stack, coef)
    return model.predict(), model
