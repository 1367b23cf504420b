"""Data matrix with per-entry observation mask.

Columns are data points, rows are ambient coordinates.  Unobserved
entries may hold any placeholder (NaN included); every computation
reads values only where the mask is True.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ShapeMismatch
from .geometry import as_pattern


@dataclass(frozen=True)
class MaskedMatrix:
    """A d x n matrix of column vectors with a boolean observation mask.

    Invariants: ``values`` and ``mask`` share the same 2-D shape, every
    column has at least one observed entry, and observed entries are
    finite.
    """

    values: np.ndarray
    mask: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2 or values.size == 0:
            raise ShapeMismatch(f"values must be a nonempty 2-D array, got {values.shape}")
        mask = self.mask
        if mask is None:
            mask = np.ones(values.shape, dtype=bool)
        else:
            mask = np.asarray(mask, dtype=bool)
        if mask.shape != values.shape:
            raise ShapeMismatch(
                f"mask shape {mask.shape} does not match values shape {values.shape}"
            )
        counts = mask.sum(axis=0)
        if np.any(counts == 0):
            empty = int(np.argmin(counts))
            raise ShapeMismatch(f"column {empty} has no observed entries")
        if not np.all(np.isfinite(values[mask])):
            raise ShapeMismatch("observed entries must be finite")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "mask", mask)

    @classmethod
    def from_values(cls, values) -> "MaskedMatrix":
        """Build from a matrix where NaN marks a missing entry."""
        values = np.asarray(values, dtype=float)
        return cls(values, ~np.isnan(values))

    @property
    def d(self) -> int:
        return self.values.shape[0]

    @property
    def n(self) -> int:
        return self.values.shape[1]

    @property
    def fully_observed(self) -> bool:
        return bool(self.mask.all())

    @property
    def observed_count(self) -> int:
        """Total number of observed entries."""
        return int(self.mask.sum())

    def column_pattern(self, i: int) -> np.ndarray:
        """Sorted observed row indices of column ``i``."""
        return as_pattern(np.flatnonzero(self.mask[:, i]), self.d)

    def filled(self, fill: float = 0.0) -> np.ndarray:
        """Copy of ``values`` with unobserved entries replaced by ``fill``."""
        return np.where(self.mask, self.values, fill)

    def column_counts(self) -> np.ndarray:
        """Observed entries per column."""
        return self.mask.sum(axis=0)

    def subset_columns(self, cols) -> "MaskedMatrix":
        """Masked matrix restricted to the given columns."""
        cols = np.asarray(cols, dtype=np.intp)
        return MaskedMatrix(self.values[:, cols], self.mask[:, cols])
