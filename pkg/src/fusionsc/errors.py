"""Exception hierarchy for fusionsc.

All library errors derive from :class:`FscError`.  User-facing tools
(the ``fsc`` command line) map :class:`InputError` subclasses to exit
code 1 and :class:`NumericalError` subclasses to exit code 2.
"""


class FscError(Exception):
    """Base class for all fusionsc errors."""


class InputError(FscError):
    """Caller passed inconsistent shapes, parameters, or data."""


class NumericalError(FscError):
    """Computation failed for numerical reasons (rank loss, overflow)."""


class ShapeMismatch(InputError):
    """Array arguments disagree in shape or required structure."""


class DimensionMismatch(InputError):
    """Two bases live in different ambient dimensions."""


class LengthMismatch(InputError):
    """Two label vectors have different lengths."""


class InvalidParams(InputError):
    """A scalar parameter is out of its documented range."""


class ParseError(InputError):
    """A file on disk does not match its expected format."""


class EmptyScope(InputError):
    """A metric was asked to average over zero entries."""


class InsufficientObservations(InputError):
    """A column has fewer observed entries than the subspace rank."""

    def __init__(self, observed: int, required: int, column=None):
        self.column = column
        self.observed = observed
        self.required = required
        where = f"column {column} has" if column is not None else "got"
        super().__init__(
            f"{where} {observed} observed entries; "
            f"at least r = {required} are required"
        )


class RankDeficient(NumericalError):
    """A basis matrix is numerically rank deficient."""


class NonFiniteObjective(NumericalError):
    """The objective evaluated to NaN or infinity at the current iterate."""


class EmptyCluster(NumericalError):
    """A requested cluster contains no members."""

    def __init__(self, cluster: int):
        self.cluster = cluster
        super().__init__(f"cluster {cluster} has no member columns")


class DegenerateDegree(NumericalError):
    """A similarity row sums to zero, so the normalized Laplacian is undefined."""


class AllEntriesFailed(NumericalError):
    """Every candidate on a regularization path failed to produce a model."""


class FusionCapExceeded(NumericalError):
    """Doubling the fusion weight hit its cap before all subspaces fused."""

    def __init__(self, cap: float, count: int):
        self.cap = cap
        self.count = count
        super().__init__(
            f"{count} components remain at the fusion weight cap {cap:g}"
        )


class CompletionFailure(NumericalError):
    """One or more columns could not be completed.

    Carries the per-column failures so callers can report which columns
    were affected.
    """

    def __init__(self, failures):
        self.failures = list(failures)
        cols = ", ".join(str(c) for c, _ in self.failures)
        super().__init__(f"completion failed for columns: {cols}")
