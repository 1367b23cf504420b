"""Fused per-column subspace fitting.

Each data column x_i gets its own rank-r basis U_i.  The objective is

    F(U_1..U_n) = sum_i ||x_i - P_i x_i||^2
                + (lam/2) * sum_i sum_j ||P_i - P_j||_F^2

with P_i the orthogonal projector onto span(U_i).  With missing data the
residual term uses only the observed rows of x_i and U_i; the fusion
term always couples the full projectors.  Minimization is full-batch
gradient descent on the stacked bases with Armijo backtracking, all
bases updated simultaneously each iteration.

The gradient of F in U_i follows from d<P, A> = <dU, 2(I-P) A U M^{-1}>
for symmetric A, with M = U^T U.  At ridge 0 the two terms reduce to

    grad_i = -2 (x_i - P_i x_i) c_i^T
           + 4 lam (P_i - I) (sum_j P_j) U_i M_i^{-1}

where c_i = M_i^{-1} U_i^T x_i are the least-squares coefficients.  In
the masked case the first term uses observed rows only (its unobserved
rows are exactly zero); the second is unchanged.  The pairwise fusion
sum collapses through sum_i sum_j ||P_i - P_j||^2 =
2n sum_i ||P_i||^2 - 2 ||sum_i P_i||^2, so one d x d accumulation
replaces the O(n^2) pair loop.
"""

from dataclasses import dataclass, field

import numpy as np

from .data import MaskedMatrix
from .errors import (
    InsufficientObservations,
    InvalidParams,
    NonFiniteObjective,
    ShapeMismatch,
)
from .geometry import orthonormalize_stack
from .rng import rng_for

_INIT_METHODS = ("gaussian", "column")


def lambda_scale(d: int, n: int) -> float:
    """Reference fusion weight 1/(n*d); grids are quoted in multiples of it."""
    if d < 1 or n < 1:
        raise InvalidParams("dimensions must be positive")
    return 1.0 / (n * d)


@dataclass
class FscConfig:
    """Solver settings.

    rank is the per-column subspace dimension r; lam weighs the fusion
    penalty.  step0 seeds the Armijo backtracking line search
    (sufficient-decrease constant armijo_c, shrink factor armijo_beta);
    the accepted step carries over to the next iteration and is allowed
    to grow again by 1/armijo_beta.  Iteration stops after max_iters or
    when the relative objective decrease of an accepted step falls below
    tol_rel.  Bases are re-orthonormalized every reorth_period
    iterations.  ridge is added to Gram matrices before solving (0 keeps
    exact projectors).  init picks the starting bases: "column" (the
    default) seeds the first basis vector of U_i with the zero-filled
    data column x_i itself, so every column starts inside its own
    subspace and the fusion term acts on bases that already carry the
    cluster geometry; "gaussian" draws iid normal entries.
    """

    rank: int
    lam: float = 0.0
    max_iters: int = 2000
    step0: float = 1e-2
    armijo_beta: float = 0.5
    armijo_c: float = 1e-4
    tol_rel: float = 1e-8
    reorth_period: int = 1
    ridge: float = 0.0
    init: str = "column"
    seed: int = 0

    def __post_init__(self):
        if self.rank < 1:
            raise InvalidParams(f"rank must be >= 1, got {self.rank}")
        if not (np.isfinite(self.lam) and self.lam >= 0.0):
            raise InvalidParams(f"lam must be finite and >= 0, got {self.lam}")
        if self.max_iters < 0:
            raise InvalidParams("max_iters must be >= 0")
        if self.step0 <= 0.0:
            raise InvalidParams("step0 must be positive")
        if not (0.0 < self.armijo_beta < 1.0):
            raise InvalidParams("armijo_beta must lie in (0, 1)")
        if not (0.0 < self.armijo_c < 1.0):
            raise InvalidParams("armijo_c must lie in (0, 1)")
        if self.tol_rel < 0.0:
            raise InvalidParams("tol_rel must be >= 0")
        if self.reorth_period < 1:
            raise InvalidParams("reorth_period must be >= 1")
        if self.ridge < 0.0:
            raise InvalidParams("ridge must be >= 0")
        if self.init not in _INIT_METHODS:
            raise InvalidParams(f"init must be one of {_INIT_METHODS}")


@dataclass
class FitTrace:
    """Objective values of the accepted iterates, oldest first."""

    objectives: np.ndarray
    iterations: int
    converged: bool


def _as_masked(x) -> MaskedMatrix:
    if isinstance(x, MaskedMatrix):
        return x
    return MaskedMatrix(np.asarray(x, dtype=float))


def _check_bases(x: MaskedMatrix, bases) -> np.ndarray:
    bases = np.asarray(bases, dtype=float)
    if bases.ndim != 3:
        raise ShapeMismatch(f"bases must be (n, d, r), got shape {bases.shape}")
    n, d, r = bases.shape
    if n != x.n or d != x.d:
        raise ShapeMismatch(
            f"bases shape {bases.shape} does not match data ({x.d}, {x.n})"
        )
    if r > d:
        raise ShapeMismatch(f"rank {r} exceeds ambient dimension {d}")
    return bases


class _Evaluator:
    """Batched objective and gradient for a fixed data matrix and lam."""

    def __init__(self, x: MaskedMatrix, lam: float, ridge: float = 0.0):
        self.lam = lam
        self.ridge = ridge
        self.full = x.fully_observed
        self.xt = np.ascontiguousarray(x.filled(0.0).T)  # (n, d)
        self.mt = None if self.full else np.ascontiguousarray(x.mask.T)
        self.n, self.d = self.xt.shape

    def _ridged(self, gram: np.ndarray) -> np.ndarray:
        if self.ridge:
            r = gram.shape[-1]
            gram = gram + self.ridge * np.eye(r)
        return gram

    def _residual_parts(self, bases):
        """Least-squares coefficients and residuals of the observed rows.

        Returns (coef (n,r,1), resid (n,d)); resid rows outside each
        column's pattern are exactly zero.
        """
        if self.full:
            um = bases
        else:
            um = bases * self.mt[:, :, None]
        umt = um.transpose(0, 2, 1)
        gram = self._ridged(np.matmul(umt, um))
        rhs = np.matmul(umt, self.xt[:, :, None])
        coef = np.linalg.solve(gram, rhs)
        resid = self.xt - np.matmul(um, coef)[:, :, 0]
        return coef, resid

    def _fusion_parts(self, bases):
        """W = U M^{-1} per basis plus the projector sum and norms."""
        bt = bases.transpose(0, 2, 1)
        gram = self._ridged(np.matmul(bt, bases))
        w = np.linalg.solve(gram, bt).transpose(0, 2, 1)  # (n, d, r)
        n, d, r = bases.shape
        flat_w = w.transpose(1, 0, 2).reshape(d, n * r)
        flat_u = bases.transpose(1, 0, 2).reshape(d, n * r)
        p_sum = flat_w @ flat_u.T
        p_sum = 0.5 * (p_sum + p_sum.T)
        s = np.matmul(bt, w)  # U^T W, identity at ridge 0
        norms = np.einsum("nij,nji->n", s, s)  # tr(P_i^2) per basis
        return w, p_sum, norms

    def objective(self, bases) -> float:
        """Objective value; +inf if a Gram solve fails (rank collapse)."""
        try:
            _, resid = self._residual_parts(bases)
            value = float(np.vdot(resid, resid))
            if self.lam > 0.0:
                _, p_sum, norms = self._fusion_parts(bases)
                value += self.lam * (
                    self.n * float(norms.sum()) - float(np.vdot(p_sum, p_sum))
                )
        except np.linalg.LinAlgError:
            return np.inf
        return value

    def gradients(self, bases) -> np.ndarray:
        """Stacked gradient, same (n, d, r) shape as the bases."""
        coef, resid = self._residual_parts(bases)
        grads = -2.0 * resid[:, :, None] * coef.transpose(0, 2, 1)
        if self.lam > 0.0:
            w, p_sum, _ = self._fusion_parts(bases)
            t = np.matmul(p_sum, w)  # (n, d, r) via broadcast
            k = np.matmul(bases.transpose(0, 2, 1), t)
            grads += (4.0 * self.lam) * (np.matmul(w, k) - t)
        return grads


def objective_full(x, bases, lam: float) -> float:
    """Fused objective on fully observed data.

    Residual term plus (lam/2) times the sum of squared projector
    distances over all ordered pairs.  Raises ShapeMismatch if any entry
    of ``x`` is unobserved.
    """
    x = _as_masked(x)
    if not x.fully_observed:
        raise ShapeMismatch("objective_full requires a fully observed matrix")
    bases = _check_bases(x, bases)
    if not (np.isfinite(lam) and lam >= 0.0):
        raise InvalidParams(f"lam must be finite and >= 0, got {lam}")
    return _Evaluator(x, lam).objective(bases)


def objective_masked(x, bases, lam: float) -> float:
    """Fused objective with the residual restricted to observed entries.

    The fusion term is identical to the fully observed case; only the
    data-fit term changes.
    """
    x = _as_masked(x)
    bases = _check_bases(x, bases)
    if not (np.isfinite(lam) and lam >= 0.0):
        raise InvalidParams(f"lam must be finite and >= 0, got {lam}")
    return _Evaluator(x, lam).objective(bases)


def gradient_full(x, bases, i: int, lam: float) -> np.ndarray:
    """Gradient of the fully observed objective in basis ``i``."""
    x = _as_masked(x)
    if not x.fully_observed:
        raise ShapeMismatch("gradient_full requires a fully observed matrix")
    bases = _check_bases(x, bases)
    if not 0 <= i < x.n:
        raise InvalidParams(f"column index {i} out of range [0, {x.n})")
    return _Evaluator(x, lam).gradients(bases)[i]


def gradient_masked(x, bases, i: int, lam: float) -> np.ndarray:
    """Gradient of the masked objective in basis ``i``.

    Rows outside column i's observation pattern receive contributions
    only from the fusion term; at lam = 0 they are exactly zero.
    """
    x = _as_masked(x)
    bases = _check_bases(x, bases)
    if not 0 <= i < x.n:
        raise InvalidParams(f"column index {i} out of range [0, {x.n})")
    return _Evaluator(x, lam).gradients(bases)[i]


def init_bases(x, rank: int, method: str = "gaussian", seed: int = 0) -> np.ndarray:
    """Starting bases, one orthonormal (d, rank) block per column.

    "gaussian" orthonormalizes iid standard normal matrices.  "column"
    puts the zero-filled, normalized data column first and fills the
    remaining rank-1 directions with a random orthonormal complement, so
    each starting subspace already contains its own column.  Both are
    deterministic in (seed, shape).
    """
    x = _as_masked(x)
    if method not in _INIT_METHODS:
        raise InvalidParams(f"init must be one of {_INIT_METHODS}")
    if not 1 <= rank <= x.d:
        raise InvalidParams(f"rank must lie in [1, {x.d}], got {rank}")
    rng = rng_for(seed, "bases")
    n, d = x.n, x.d
    if method == "gaussian":
        return orthonormalize_stack(rng.standard_normal((n, d, rank)))
    cols = x.filled(0.0).T  # (n, d)
    norms = np.linalg.norm(cols, axis=1)
    fallback = rng.standard_normal((n, d))
    lead = np.where(norms[:, None] > 0.0, cols, fallback)
    lead = lead / np.linalg.norm(lead, axis=1, keepdims=True)
    if rank == 1:
        return lead[:, :, None]
    extra = rng.standard_normal((n, d, rank - 1))
    overlap = np.matmul(lead[:, None, :], extra)  # (n, 1, rank-1)
    extra = extra - lead[:, :, None] * overlap
    extra = orthonormalize_stack(extra)
    return np.concatenate([lead[:, :, None], extra], axis=2)


def fit(x, cfg: FscConfig, start_bases=None):
    """Minimize the fused objective; returns (bases, FitTrace).

    All bases step simultaneously along the negative stacked gradient;
    the common step length is chosen by Armijo backtracking against the
    total objective and carried across iterations.  Every column must
    have at least ``cfg.rank`` observed entries.  ``start_bases``
    overrides the configured initialization (used for warm starts).
    """
    x = _as_masked(x)
    if cfg.rank > x.d:
        raise InvalidParams(f"rank {cfg.rank} exceeds ambient dimension {x.d}")
    counts = x.column_counts()
    short = np.flatnonzero(counts < cfg.rank)
    if short.size:
        col = int(short[0])
        raise InsufficientObservations(int(counts[col]), cfg.rank, column=col)

    if start_bases is None:
        bases = init_bases(x, cfg.rank, cfg.init, cfg.seed)
    else:
        bases = _check_bases(x, start_bases).copy()

    ev = _Evaluator(x, cfg.lam, cfg.ridge)
    f = ev.objective(bases)
    if not np.isfinite(f):
        raise NonFiniteObjective(f"objective is {f} at the starting bases")
    # Exact fits leave f at rounding-noise level where a decrease ratio
    # is meaningless; stop outright once f is negligible against the
    # observed data energy.
    f_floor = 1e-15 * float(np.sum(x.values[x.mask] ** 2))

    objs = [f]
    step = cfg.step0
    converged = f <= f_floor
    iterations = 0
    for t in range(1, cfg.max_iters + 1):
        if converged:
            break
        grads = ev.gradients(bases)
        g2 = float(np.vdot(grads, grads))
        if not np.isfinite(g2):
            raise NonFiniteObjective("gradient is not finite")
        if g2 == 0.0:
            converged = True
            break

        s = step / cfg.armijo_beta  # probe one size up from the last accept
        f_new = np.inf
        while s > 1e-20:
            cand = bases - s * grads
            f_new = ev.objective(cand)
            if f_new <= f - cfg.armijo_c * s * g2:
                break
            s *= cfg.armijo_beta
        else:
            converged = True  # no descent at machine-level steps
            break

        iterations = t
        rel = (f - f_new) / max(f, 1e-300)
        bases, f, step = cand, f_new, s
        objs.append(f)
        if rel <= cfg.tol_rel or f <= f_floor:
            converged = True
            break
        if t % cfg.reorth_period == 0:
            bases = orthonormalize_stack(bases)
            f = ev.objective(bases)  # refresh after reparameterization
            if not np.isfinite(f):
                raise NonFiniteObjective("objective lost finiteness at reorthonormalization")
            objs[-1] = f

    bases = orthonormalize_stack(bases)
    return bases, FitTrace(np.asarray(objs), iterations, converged)
