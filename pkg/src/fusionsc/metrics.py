"""Evaluation metrics: clustering error, completion error, subspace affinity."""

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import EmptyScope, LengthMismatch, ShapeMismatch
from .geometry import projector_distance

__all__ = ["clustering_error", "completion_rmse", "subspace_affinity"]


def clustering_error(pred, truth) -> float:
    """Fraction of misclassified points under the best label matching.

    Label ids are arbitrary on both sides; the minimum is taken over all
    one-to-one matchings of predicted ids to true ids (optimal
    assignment on the confusion matrix, which equals the brute-force
    minimum over id permutations).
    """
    pred = np.asarray(pred).ravel()
    truth = np.asarray(truth).ravel()
    if pred.shape != truth.shape:
        raise LengthMismatch(
            f"label vectors disagree: {pred.shape[0]} vs {truth.shape[0]}")
    if pred.size == 0:
        raise LengthMismatch("label vectors are empty")
    _, pi = np.unique(pred, return_inverse=True)
    _, ti = np.unique(truth, return_inverse=True)
    confusion = np.zeros((pi.max() + 1, ti.max() + 1), dtype=np.int64)
    np.add.at(confusion, (pi, ti), 1)
    rows, cols = linear_sum_assignment(confusion, maximize=True)
    matched = int(confusion[rows, cols].sum())
    return (pred.size - matched) / pred.size


def completion_rmse(xhat, x, mask=None, scope: str = "all") -> float:
    """Relative RMSE of xhat against x over a chosen entry set.

    scope "all" uses every entry; "unobserved" uses the complement of
    mask (which is then required).  The error is normalized by the RMS
    of x over the same entries.
    """
    xhat = np.asarray(xhat, dtype=float)
    x = np.asarray(x, dtype=float)
    if xhat.shape != x.shape:
        raise ShapeMismatch(f"shapes disagree: {xhat.shape} vs {x.shape}")
    if scope == "all":
        sel = np.ones(x.shape, dtype=bool)
    elif scope == "unobserved":
        if mask is None:
            raise EmptyScope("scope 'unobserved' requires a mask")
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != x.shape:
            raise ShapeMismatch(
                f"mask shape {mask.shape} does not match {x.shape}")
        sel = ~mask
    else:
        raise EmptyScope(f"unknown scope: {scope!r}")
    if not sel.any():
        raise EmptyScope("selected entry set is empty")
    num = float(np.sqrt(np.mean((xhat[sel] - x[sel]) ** 2)))
    den = float(np.sqrt(np.mean(x[sel] ** 2)))
    if den == 0.0:
        return 0.0 if num == 0.0 else float("inf")
    return num / den


def subspace_affinity(basis_a, basis_b) -> float:
    """Squared Frobenius distance between the two spanned projectors.

    Zero iff the spans coincide; equals projector_distance on the
    underlying bases.
    """
    return projector_distance(basis_a, basis_b)
