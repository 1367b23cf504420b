"""Seeded random streams.

Every stochastic routine in the package draws from a PCG64 generator
keyed by a user seed plus a purpose tag, via ``numpy.random.SeedSequence``
stream splitting.  Distinct purposes never share a stream, so adding a
draw to one routine cannot perturb another routine run with the same seed.
"""

import numpy as np

# Stable purpose -> spawn-key registry.  Append only; renumbering breaks
# reproducibility of recorded seeds.
_PURPOSES = {
    "bases": 0,      # optimizer basis initialization
    "subspaces": 1,  # synthetic union-of-subspaces draws
    "mask": 2,       # synthetic observation masks
    "kmeans": 3,     # k-means++ seeding
}


def rng_for(seed: int, purpose: str) -> np.random.Generator:
    """Return the PCG64 generator for (seed, purpose).

    The same pair always yields the same stream; different purposes with
    the same seed yield independent streams.
    """
    try:
        key = _PURPOSES[purpose]
    except KeyError:
        raise ValueError(f"unknown rng purpose: {purpose!r}") from None
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(key,)))
