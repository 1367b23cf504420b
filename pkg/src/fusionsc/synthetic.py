"""Synthetic union-of-subspaces instances and Bernoulli observation masks.

The generator draws K bases with iid standard normal entries, one
coefficient block per cluster (again iid normal), and assembles
X = [U*_1 Th_1 ... U*_K Th_K] plus optional iid N(0, sigma^2) noise.
Columns are grouped by cluster, labels are 1-based block labels.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParams
from .rng import rng_for

__all__ = ["SyntheticInstance", "gen_uos", "gen_mask"]


@dataclass(frozen=True)
class SyntheticInstance:
    """A generated data matrix with its ground truth.

    values is d x n with n = K * n_k; true_labels holds 1-based block
    ids; true_bases stacks the K planted bases as a (K, d, r) array.
    params records every generator argument for provenance.
    """

    values: np.ndarray
    true_labels: np.ndarray
    true_bases: np.ndarray
    params: dict = field(default_factory=dict)

    @property
    def d(self) -> int:
        return self.values.shape[0]

    @property
    def n(self) -> int:
        return self.values.shape[1]

    @property
    def n_clusters(self) -> int:
        return self.true_bases.shape[0]


def gen_uos(d: int, n_clusters: int, rank: int, per_cluster: int,
            sigma: float = 0.0, seed: int = 0) -> SyntheticInstance:
    """Generate a union-of-subspaces instance.

    Deterministic given seed: bases come from the "bases" stream,
    coefficients and noise from the "subspaces" stream, in that fixed
    draw order.
    """
    if rank < 1 or d < rank:
        raise InvalidParams(f"need d >= rank >= 1, got d={d}, rank={rank}")
    if n_clusters < 1 or per_cluster < 1:
        raise InvalidParams("n_clusters and per_cluster must be >= 1")
    if not (np.isfinite(sigma) and sigma >= 0.0):
        raise InvalidParams(f"sigma must be finite and >= 0, got {sigma}")

    rng_b = rng_for(seed, "bases")
    rng_c = rng_for(seed, "subspaces")
    bases = rng_b.standard_normal((n_clusters, d, rank))
    blocks = []
    for k in range(n_clusters):
        theta = rng_c.standard_normal((rank, per_cluster))
        blocks.append(bases[k] @ theta)
    values = np.concatenate(blocks, axis=1)
    if sigma > 0.0:
        values = values + sigma * rng_c.standard_normal(values.shape)
    labels = np.repeat(np.arange(1, n_clusters + 1), per_cluster)
    params = {"d": d, "n_clusters": n_clusters, "rank": rank,
              "per_cluster": per_cluster, "sigma": sigma, "seed": seed}
    return SyntheticInstance(values, labels, bases, params)


def gen_mask(d: int, n: int, p: float, seed: int = 0,
             min_observed: int = 1) -> tuple[np.ndarray, list[int]]:
    """Sample a d x n mask with independent Bernoulli(p) entries.

    Columns that come out with fewer than min_observed entries are
    redrawn from the same stream until they qualify; their indices are
    returned so callers can record the deviation from pure Bernoulli
    sampling.  Deterministic given seed.
    """
    if d < 1 or n < 1:
        raise InvalidParams("mask dimensions must be positive")
    if not (0.0 < p <= 1.0):
        raise InvalidParams(f"p must lie in (0, 1], got {p}")
    if min_observed < 1 or min_observed > d:
        raise InvalidParams("min_observed must lie in [1, d]")

    rng = rng_for(seed, "mask")
    mask = rng.random((d, n)) < p
    resampled = []
    for i in range(n):
        if mask[:, i].sum() < min_observed:
            resampled.append(i)
            while mask[:, i].sum() < min_observed:
                mask[:, i] = rng.random(d) < p
    return mask, resampled
