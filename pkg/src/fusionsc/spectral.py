"""Spectral clustering of fitted subspace bases.

Similarity between columns i and j is the reciprocal of the squared
Frobenius distance between their subspace projectors, capped so that
fused pairs (distance ~ 0) produce a large finite weight.  Labels come
from the symmetric normalized Laplacian embedding followed by seeded
k-means.
"""

import numpy as np
import scipy.linalg

from .errors import DegenerateDegree, InvalidParams, ShapeMismatch
from .geometry import pairwise_projector_distances
from .rng import rng_for

__all__ = ["similarity", "spectral_embed", "kmeans", "cluster", "eigengap_k"]


def _as_basis_stack(bases) -> np.ndarray:
    try:
        arr = np.asarray(bases, dtype=float)
    except ValueError:
        raise ShapeMismatch("bases do not form a uniform stack") from None
    if arr.ndim != 3:
        raise ShapeMismatch(
            f"expected a uniform stack of d x r bases, got shape {arr.shape}")
    return arr


def similarity(bases, eps_sim: float | None = None) -> np.ndarray:
    """Inverse-distance similarity matrix over a basis set.

    S_ij = 1 / max(dist_ij, eps_sim) off the diagonal, S_ii = 0.  When
    eps_sim is None it defaults to 1e-9 times the median nonzero
    pairwise distance, which caps the weight of exactly fused pairs
    while preserving the ordering of the rest.
    """
    arr = _as_basis_stack(bases)
    dist = pairwise_projector_distances(arr)
    n = dist.shape[0]
    off = dist[~np.eye(n, dtype=bool)]
    if eps_sim is None:
        nonzero = off[off > 0.0]
        eps_sim = 1e-9 * float(np.median(nonzero)) if nonzero.size else 1e-15
    elif eps_sim <= 0.0:
        raise InvalidParams(f"eps_sim must be positive, got {eps_sim}")
    s = 1.0 / np.maximum(dist, eps_sim)
    np.fill_diagonal(s, 0.0)
    return 0.5 * (s + s.T)


def _laplacian(s: np.ndarray) -> np.ndarray:
    degrees = s.sum(axis=1)
    if np.any(degrees <= 0.0):
        bad = int(np.argmin(degrees))
        raise DegenerateDegree(
            f"row {bad} of the similarity matrix has zero degree")
    inv_sqrt = 1.0 / np.sqrt(degrees)
    lap = -s * inv_sqrt[:, None] * inv_sqrt[None, :]
    np.fill_diagonal(lap, 1.0 + lap.diagonal())
    return 0.5 * (lap + lap.T)


def spectral_embed(s: np.ndarray, n_clusters: int) -> np.ndarray:
    """Rows of the K smallest Laplacian eigenvectors, row-normalized.

    Uses L = I - D^{-1/2} S D^{-1/2}; rows with zero norm are left zero.
    """
    s = np.asarray(s, dtype=float)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise ShapeMismatch(f"similarity matrix must be square, got {s.shape}")
    n = s.shape[0]
    if not (1 <= n_clusters <= n):
        raise InvalidParams(f"need 1 <= n_clusters <= {n}, got {n_clusters}")
    lap = _laplacian(s)
    _, vecs = scipy.linalg.eigh(lap, subset_by_index=[0, n_clusters - 1])
    norms = np.linalg.norm(vecs, axis=1)
    keep = norms > 0.0
    vecs[keep] /= norms[keep, None]
    return vecs


def kmeans(embedding: np.ndarray, n_clusters: int, seed: int = 0,
           n_init: int = 10, max_iters: int = 300) -> np.ndarray:
    """Seeded k-means on embedding rows; returns 1-based labels.

    Runs n_init k-means++ initializations from one deterministic stream
    and keeps the assignment with the lowest within-cluster sum of
    squares.  Empty clusters are repaired by reseeding from the point
    farthest from its center.
    """
    emb = np.asarray(embedding, dtype=float)
    if emb.ndim != 2 or emb.shape[0] == 0:
        raise ShapeMismatch(f"embedding must be a nonempty 2-d array, got {emb.shape}")
    n = emb.shape[0]
    if n_clusters < 1:
        raise InvalidParams("n_clusters must be >= 1")
    if n_clusters == 1:
        return np.ones(n, dtype=np.int64)
    if n_clusters >= n:
        return np.arange(1, n + 1, dtype=np.int64)

    rng = rng_for(seed, "kmeans")
    best_labels, best_inertia = None, np.inf
    for _ in range(n_init):
        centers = _kmeans_pp(emb, n_clusters, rng)
        labels, inertia = _lloyd(emb, centers, max_iters)
        if best_labels is None or inertia < best_inertia:
            best_labels, best_inertia = labels, inertia
    return best_labels + 1


def _kmeans_pp(emb: np.ndarray, k: int, rng) -> np.ndarray:
    n = emb.shape[0]
    centers = np.empty((k, emb.shape[1]))
    centers[0] = emb[int(rng.integers(n))]
    d2 = np.sum((emb - centers[0]) ** 2, axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total > 0.0:
            idx = int(rng.choice(n, p=d2 / total))
        else:
            idx = int(rng.integers(n))
        centers[j] = emb[idx]
        np.minimum(d2, np.sum((emb - centers[j]) ** 2, axis=1), out=d2)
    return centers


def _lloyd(emb: np.ndarray, centers: np.ndarray, max_iters: int):
    n, k = emb.shape[0], centers.shape[0]
    labels = np.full(n, -1, dtype=np.int64)
    for _ in range(max_iters):
        dist2 = ((emb[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new_labels = dist2.argmin(axis=1)
        current = dist2[np.arange(n), new_labels].copy()
        for j in range(k):
            if not np.any(new_labels == j):
                far = int(np.argmax(current))
                new_labels[far] = j
                current[far] = -np.inf
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for j in range(k):
            members = emb[labels == j]
            if members.size:
                centers[j] = members.mean(axis=0)
    dist2 = ((emb[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    inertia = float(dist2[np.arange(n), labels].sum())
    return labels, inertia


def eigengap_k(s: np.ndarray, max_k: int = 20) -> int:
    """Cluster count from the largest gap in the smallest Laplacian eigenvalues.

    Examines the first min(n, max_k) eigenvalues; ties resolve to the
    smaller count.
    """
    s = np.asarray(s, dtype=float)
    n = s.shape[0]
    m = min(n, max_k)
    if m < 2:
        return 1
    lap = _laplacian(s)
    vals = scipy.linalg.eigh(lap, eigvals_only=True, subset_by_index=[0, m - 1])
    gaps = np.diff(vals)
    return int(np.argmax(gaps)) + 1


def cluster(bases, n_clusters: int | None = None, eps_sim: float | None = None,
            seed: int = 0) -> np.ndarray:
    """Label the columns behind a fitted basis set; 1-based ids.

    With n_clusters given, runs similarity -> embedding -> k-means.
    Without it, the count is chosen by the eigengap heuristic over the
    first min(n, 20) Laplacian eigenvalues.
    """
    arr = _as_basis_stack(bases)
    n = arr.shape[0]
    if n == 1:
        return np.ones(1, dtype=np.int64)
    s = similarity(arr, eps_sim)
    if n_clusters is None:
        n_clusters = eigengap_k(s)
    if not (1 <= n_clusters <= n):
        raise InvalidParams(f"need 1 <= n_clusters <= {n}, got {n_clusters}")
    if n_clusters == 1:
        return np.ones(n, dtype=np.int64)
    if n_clusters == n:
        return np.arange(1, n + 1, dtype=np.int64)
    emb = spectral_embed(s, n_clusters)
    return kmeans(emb, n_clusters, seed=seed)
