"""Subspace bases, orthogonal projectors, and projector distances.

A basis is a ``(d, r)`` float array with linearly independent columns;
the subspace it represents is its column span.  The projector onto that
span is

    P = U (U^T U + ridge I)^{-1} U^T

which at ``ridge = 0`` is the exact orthogonal projector: symmetric,
idempotent, and invariant under any change of basis ``U -> U A`` with
``A`` invertible.

Squared Frobenius distance between projectors is the subspace metric
used throughout: for orthonormal bases it reduces to

    ||P_i - P_j||_F^2 = r_i + r_j - 2 ||Q_i^T Q_j||_F^2

which costs O(d r^2) instead of O(d^2 r) and is what the inner loops use.
"""

import numpy as np

from .errors import DimensionMismatch, InsufficientObservations, RankDeficient

# A basis counts as rank deficient when its smallest singular value falls
# below RANK_TOL_FACTOR times its largest.
RANK_TOL_FACTOR = 1e-10


def orthonormalize(basis) -> np.ndarray:
    """Return an orthonormal basis for the column span of ``basis``.

    Uses the left singular vectors, so the result satisfies
    ``||Q^T Q - I||_F <= 1e-12`` and spans exactly the input columns.

    Raises
    ------
    RankDeficient
        If the smallest singular value is at most ``RANK_TOL_FACTOR``
        times the largest (including the all-zero matrix).
    """
    basis = np.asarray(basis, dtype=float)
    if basis.ndim != 2:
        raise DimensionMismatch(f"basis must be 2-D, got shape {basis.shape}")
    d, r = basis.shape
    if d < r:
        raise RankDeficient(f"{r} columns cannot be independent in dimension {d}")
    u, s, _ = np.linalg.svd(basis, full_matrices=False)
    if s[0] == 0.0 or s[-1] <= RANK_TOL_FACTOR * s[0]:
        raise RankDeficient(
            f"smallest singular value {s[-1]:.3e} below tolerance "
            f"{RANK_TOL_FACTOR:.0e} * {s[0]:.3e}"
        )
    return u


def projector(basis, ridge: float = 0.0) -> np.ndarray:
    """Orthogonal projector onto the column span of ``basis``.

    Computes ``U (U^T U + ridge I)^{-1} U^T`` through a Cholesky solve of
    the Gram matrix.  ``ridge = 0`` gives the exact projector.

    Raises
    ------
    RankDeficient
        If the (ridged) Gram matrix is not numerically positive definite.
    """
    basis = np.asarray(basis, dtype=float)
    if basis.ndim != 2:
        raise DimensionMismatch(f"basis must be 2-D, got shape {basis.shape}")
    gram = basis.T @ basis
    if ridge:
        gram = gram + ridge * np.eye(basis.shape[1])
    try:
        w = np.linalg.solve(gram, basis.T)
    except np.linalg.LinAlgError as exc:
        raise RankDeficient(f"Gram matrix singular: {exc}") from exc
    p = basis @ w
    # solve() of a nearly singular Gram can succeed yet return garbage;
    # a projector has entries in [-1, 1] so an exploded result means rank loss.
    if not np.all(np.isfinite(p)) or np.abs(p).max() > 1e6:
        raise RankDeficient("Gram matrix numerically singular")
    return 0.5 * (p + p.T)


def as_pattern(rows, dim: int) -> np.ndarray:
    """Validate an observation pattern: strictly increasing indices in [0, dim)."""
    rows = np.asarray(rows, dtype=np.intp).ravel()
    if rows.size and (rows[0] < 0 or rows[-1] >= dim or np.any(np.diff(rows) <= 0)):
        raise DimensionMismatch(
            f"pattern must be strictly increasing within [0, {dim})"
        )
    return rows


def restricted_projector(basis, rows, ridge: float = 0.0) -> np.ndarray:
    """Projector onto the span of ``basis`` restricted to the given rows.

    Equals ``projector(basis[rows])``: project the observed part of a
    vector onto the span of the row-restricted basis.  Requires at least
    as many rows as basis columns.
    """
    basis = np.asarray(basis, dtype=float)
    rows = as_pattern(rows, basis.shape[0])
    if rows.size < basis.shape[1]:
        raise InsufficientObservations(rows.size, basis.shape[1])
    return projector(basis[rows], ridge=ridge)


def projector_distance(basis_a, basis_b) -> float:
    """Squared Frobenius distance between the projectors of two bases.

    Both bases are orthonormalized first, then the Gram identity
    ``r_a + r_b - 2 ||Q_a^T Q_b||_F^2`` is applied.  The result is
    clipped at zero (roundoff can produce tiny negatives).
    """
    qa = orthonormalize(basis_a)
    qb = orthonormalize(basis_b)
    if qa.shape[0] != qb.shape[0]:
        raise DimensionMismatch(
            f"ambient dimensions differ: {qa.shape[0]} vs {qb.shape[0]}"
        )
    cross = qa.T @ qb
    dist = qa.shape[1] + qb.shape[1] - 2.0 * float(np.sum(cross * cross))
    return max(dist, 0.0)


def orthonormalize_stack(bases) -> np.ndarray:
    """Orthonormalize every basis in an ``(n, d, r)`` stack via batched QR.

    Raises RankDeficient if any R factor has a diagonal entry below
    ``RANK_TOL_FACTOR`` times the largest in that factor.
    """
    bases = np.asarray(bases, dtype=float)
    q, r = np.linalg.qr(bases, mode="reduced")
    diag = np.abs(np.diagonal(r, axis1=-2, axis2=-1))
    peak = diag.max(axis=-1)
    if np.any(peak == 0.0) or np.any(diag.min(axis=-1) <= RANK_TOL_FACTOR * peak):
        bad = int(np.argmin(diag.min(axis=-1) - RANK_TOL_FACTOR * peak))
        raise RankDeficient(f"basis {bad} in stack is numerically rank deficient")
    return q


def pairwise_projector_distances(bases) -> np.ndarray:
    """All pairwise squared projector distances of an ``(n, d, r)`` stack.

    Returns an ``(n, n)`` symmetric matrix with exact zeros on the
    diagonal and entries clipped at zero.
    """
    q = orthonormalize_stack(bases)
    n, d, r = q.shape
    flat = q.transpose(1, 0, 2).reshape(d, n * r)
    cross = flat.T @ flat
    overlap = (cross * cross).reshape(n, r, n, r).sum(axis=(1, 3))
    dist = 2.0 * r - 2.0 * overlap
    np.fill_diagonal(dist, 0.0)
    np.maximum(dist, 0.0, out=dist)
    return 0.5 * (dist + dist.T)
