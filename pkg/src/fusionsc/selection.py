"""Fusion-weight paths, cluster counting, and model selection.

A path sweeps the fusion weight lam over an increasing grid, warm-
starting each solve from the previous one.  Every grid point records
two different cluster readings: ``cluster_count`` is the number of
connected components of the pairwise projector-distance graph at an
absolute fuse tolerance (the quantity that falls from n to 1 as lam
grows), while ``labels`` come from spectral clustering with the
cluster count chosen by the information-criterion score below (the
reading that recovers planted partitions long before subspaces
actually fuse).

The score for a candidate model with K clusters of rank r in ambient
dimension d is

    fit_score = |Omega| * ln(max(RSS, 1e-30) / |Omega|) + 2 K r (d - r)

with RSS summed over observed entries and r (d - r) the dimension of
the Grassmannian of rank-r subspaces, so each extra cluster pays for
its own subspace parameters.  ``select_model`` picks the path entry
with the lowest score.
"""

from dataclasses import dataclass, replace

import numpy as np
import scipy.sparse.csgraph

from .completion import ClusterModel, complete_matrix
from .data import MaskedMatrix
from .errors import (
    AllEntriesFailed,
    FusionCapExceeded,
    InvalidParams,
    NumericalError,
    ShapeMismatch,
)
from .geometry import pairwise_projector_distances
from .optimizer import FscConfig, fit, lambda_scale
from .spectral import kmeans, similarity, spectral_embed

__all__ = [
    "PathEntry",
    "LambdaPathReport",
    "RankEntry",
    "RankSweepReport",
    "default_lambda_grid",
    "fused_components",
    "fit_score",
    "select_labels",
    "lambda_path",
    "select_model",
    "find_lambda_max",
    "rank_sweep",
]

RSS_FLOOR = 1e-30
DEFAULT_TOL_FUSE = 0.5
DEFAULT_K_MAX = 12


def _as_masked(x) -> MaskedMatrix:
    if isinstance(x, MaskedMatrix):
        return x
    return MaskedMatrix(np.asarray(x, dtype=float))


def _as_stack(bases) -> np.ndarray:
    arr = np.asarray(bases, dtype=float)
    if arr.ndim != 3:
        raise ShapeMismatch(f"expected a stack of bases, got shape {arr.shape}")
    return arr


def default_lambda_grid(d: int, n: int, num: int = 16,
                        lo: float = 1e-4, hi: float = 1e2) -> np.ndarray:
    """Fusion-weight grid: exact 0 plus a geometric ramp.

    The ramp spans [lo, hi] in multiples of the reference weight
    1/(n*d), so grids transfer across problem sizes.
    """
    scale = lambda_scale(d, n)
    if num < 1:
        raise InvalidParams(f"num must be >= 1, got {num}")
    if not (0.0 < lo <= hi):
        raise InvalidParams(f"need 0 < lo <= hi, got lo={lo}, hi={hi}")
    ramp = np.geomspace(lo * scale, hi * scale, num)
    return np.concatenate([[0.0], ramp])


def fused_components(bases, tol_fuse: float = DEFAULT_TOL_FUSE):
    """Group bases whose projector distance is at most tol_fuse.

    Returns (count, labels) where labels are 1-based component ids
    numbered by first appearance.  Fusing is transitive: two far-apart
    bases share a component when a chain of close pairs connects them.
    """
    arr = _as_stack(bases)
    if not (np.isfinite(tol_fuse) and tol_fuse >= 0.0):
        raise InvalidParams(f"tol_fuse must be finite and >= 0, got {tol_fuse}")
    dist = pairwise_projector_distances(arr)
    adj = dist <= tol_fuse
    count, comp = scipy.sparse.csgraph.connected_components(adj, directed=False)
    _, first = np.unique(comp, return_index=True)
    rank = np.empty(count, dtype=np.int64)
    rank[np.argsort(first)] = np.arange(count)
    return int(count), rank[comp] + 1


def fit_score(x, model: ClusterModel) -> float:
    """Information-criterion score of a fitted cluster model; lower is better.

    |Omega| * ln(max(RSS, 1e-30) / |Omega|) + 2 K r (d - r), with RSS
    the squared residual of the model prediction on observed entries.
    """
    x = _as_masked(x)
    if model.labels.shape[0] != x.n:
        raise ShapeMismatch(
            f"model holds {model.labels.shape[0]} columns, data has {x.n}")
    if model.cluster_bases.shape[1] != x.d:
        raise ShapeMismatch(
            f"model ambient dimension {model.cluster_bases.shape[1]}, data has {x.d}")
    diff = (x.values - model.predict())[x.mask]
    rss = float(diff @ diff)
    n_obs = x.observed_count
    k = model.n_clusters
    d, r = model.cluster_bases.shape[1], model.cluster_bases.shape[2]
    return n_obs * float(np.log(max(rss, RSS_FLOOR) / n_obs)) + 2.0 * k * r * (d - r)


def select_labels(x, bases, k_values=None, seed: int = 0, eps_sim=None):
    """Spectral labels with the cluster count chosen by fit_score.

    Embeds the basis-similarity graph once per candidate count, labels
    it, completes the data under those labels, and keeps the count with
    the lowest score (ties to the smaller count).  Returns
    (labels, n_clusters, score, model).  Counts whose completion fails
    numerically are skipped; if every count fails, AllEntriesFailed.
    """
    x = _as_masked(x)
    arr = _as_stack(bases)
    n = arr.shape[0]
    if arr.shape[0] != x.n:
        raise ShapeMismatch(f"{arr.shape[0]} bases for {x.n} columns")
    if k_values is None:
        k_values = range(1, min(n, DEFAULT_K_MAX) + 1)
    k_values = [int(k) for k in k_values]
    if not k_values:
        raise InvalidParams("k_values must be nonempty")
    for k in k_values:
        if not 1 <= k <= n:
            raise InvalidParams(f"need 1 <= k <= {n}, got {k}")

    s = similarity(arr, eps_sim) if n > 1 else None
    best = None
    for k in k_values:
        if k == 1:
            labels = np.ones(n, dtype=np.int64)
        elif k >= n:
            labels = np.arange(1, n + 1, dtype=np.int64)
        else:
            labels = kmeans(spectral_embed(s, k), k, seed=seed)
        try:
            _, model = complete_matrix(x, arr, labels)
        except NumericalError:
            continue
        score = fit_score(x, model)
        if best is None or score < best[2] or (score == best[2] and k < best[1]):
            best = (labels, k, score, model)
    if best is None:
        raise AllEntriesFailed(
            "no candidate cluster count produced a completable model")
    return best


@dataclass(frozen=True)
class PathEntry:
    """One grid point of a fusion-weight path.

    cluster_count counts fused components at the path's tolerance;
    labels / n_clusters / fit_score / model come from select_labels on
    the same bases; objective is the final value of the solve.
    """

    lam: float
    cluster_count: int
    labels: np.ndarray
    n_clusters: int
    objective: float
    fit_score: float
    model: ClusterModel
    converged: bool


@dataclass
class LambdaPathReport:
    """Entries of a warm-started fusion-weight sweep, in grid order.

    Grid points whose solve or labeling failed numerically appear in
    failures as (lam, exception) and are skipped in entries.
    """

    entries: list
    failures: list

    @property
    def lambdas(self) -> np.ndarray:
        return np.array([e.lam for e in self.entries])

    @property
    def counts(self) -> np.ndarray:
        return np.array([e.cluster_count for e in self.entries], dtype=np.int64)


def lambda_path(x, lambdas, config: FscConfig, *, tol_fuse: float = DEFAULT_TOL_FUSE,
                k_values=None, eps_sim=None) -> LambdaPathReport:
    """Sweep the fusion weight over an ascending grid with warm starts.

    ``lambdas=None`` uses default_lambda_grid for the data's shape.
    config.lam is overridden by each grid value; config.seed drives the
    initialization and the labeling.  Each solve starts from the
    previous grid point's bases, so the path is deterministic given the
    seed.  Numerical failures are recorded per grid point and the sweep
    continues from the last good bases.
    """
    x = _as_masked(x)
    if lambdas is None:
        lambdas = default_lambda_grid(x.d, x.n)
    lams = np.asarray(lambdas, dtype=float).ravel()
    if lams.size == 0:
        raise InvalidParams("lambdas must be nonempty")
    if not np.all(np.isfinite(lams)) or np.any(lams < 0.0):
        raise InvalidParams("lambdas must be finite and >= 0")
    if np.any(np.diff(lams) < 0.0):
        raise InvalidParams("lambdas must be sorted ascending")

    entries, failures = [], []
    bases = None
    for lam in lams:
        cfg = replace(config, lam=float(lam))
        try:
            bases_new, trace = fit(x, cfg, start_bases=bases)
        except NumericalError as exc:
            failures.append((float(lam), exc))
            continue
        bases = bases_new
        try:
            count, _ = fused_components(bases, tol_fuse)
            labels, k, score, model = select_labels(
                x, bases, k_values, seed=config.seed, eps_sim=eps_sim)
        except NumericalError as exc:
            failures.append((float(lam), exc))
            continue
        entries.append(PathEntry(
            lam=float(lam), cluster_count=count, labels=labels, n_clusters=k,
            objective=float(trace.objectives[-1]), fit_score=score,
            model=model, converged=trace.converged))
    return LambdaPathReport(entries, failures)


def select_model(report: LambdaPathReport, x):
    """Best path entry by fit_score; returns (lam, model).

    Ties resolve to the smaller cluster count, then to the earlier
    grid position, so reordering equal-weight entries cannot change
    the selected model.
    """
    x = _as_masked(x)
    if not report.entries:
        raise AllEntriesFailed("the path produced no usable entries")
    best = None
    for entry in report.entries:
        if entry.labels.shape[0] != x.n:
            raise ShapeMismatch(
                f"path entry holds {entry.labels.shape[0]} columns, data has {x.n}")
        if (best is None or entry.fit_score < best.fit_score
                or (entry.fit_score == best.fit_score
                    and entry.n_clusters < best.n_clusters)):
            best = entry
    return best.lam, best.model


def find_lambda_max(x, config: FscConfig, *, tol_fuse: float = DEFAULT_TOL_FUSE,
                    cap_mult: float = 2.0 ** 20) -> float:
    """Smallest power-of-two multiple of 1/(n*d) that fuses everything.

    Doubles the fusion weight from the reference scale, warm-starting
    each solve, until the fused-component count reaches 1.  Raises
    FusionCapExceeded if the count is still above 1 at cap_mult times
    the reference scale.
    """
    x = _as_masked(x)
    if cap_mult < 1.0:
        raise InvalidParams(f"cap_mult must be >= 1, got {cap_mult}")
    scale = lambda_scale(x.d, x.n)
    lam = scale
    bases = None
    while True:
        bases, _ = fit(x, replace(config, lam=lam), start_bases=bases)
        count, _ = fused_components(bases, tol_fuse)
        if count == 1:
            return lam
        if lam >= cap_mult * scale:
            raise FusionCapExceeded(lam, count)
        lam = min(2.0 * lam, cap_mult * scale)


@dataclass(frozen=True)
class RankEntry:
    """One rank level of a sweep.

    columns are the original indices still active at this level;
    residuals align with columns and measure the gap between each
    column's observed entries and its cluster-model prediction;
    explained lists the columns pruned at this level.
    """

    rank: int
    columns: np.ndarray
    residuals: np.ndarray
    explained: np.ndarray
    n_clusters: int
    fit_score: float


@dataclass
class RankSweepReport:
    """Entries of an ascending rank sweep, one per visited rank."""

    entries: list

    @property
    def ranks(self) -> np.ndarray:
        return np.array([e.rank for e in self.entries], dtype=np.int64)


def rank_sweep(x, r_values, config: FscConfig, *, tol_prune: float = 1e-6,
               k_values=None, eps_sim=None) -> RankSweepReport:
    """Fit, label, and prune at each rank of an ascending list.

    At each rank the remaining columns are fitted and labeled, and
    every column whose observed-entry residual falls below tol_prune
    times its observed norm is marked explained and removed from later
    levels.  The sweep stops early once nothing remains.
    """
    x = _as_masked(x)
    r_list = [int(r) for r in np.asarray(r_values).ravel()]
    if not r_list:
        raise InvalidParams("r_values must be nonempty")
    if any(r < 1 for r in r_list):
        raise InvalidParams("all r_values must be >= 1")
    if any(b <= a for a, b in zip(r_list, r_list[1:])):
        raise InvalidParams("r_values must be strictly increasing")
    if tol_prune < 0.0:
        raise InvalidParams(f"tol_prune must be >= 0, got {tol_prune}")

    active = np.arange(x.n)
    entries = []
    for r in r_list:
        if active.size == 0:
            break
        sub = x.subset_columns(active)
        bases, _ = fit(sub, replace(config, rank=r))
        labels, k, score, model = select_labels(
            sub, bases, k_values, seed=config.seed, eps_sim=eps_sim)
        diff = np.where(sub.mask, sub.values - model.predict(), 0.0)
        res = np.linalg.norm(diff, axis=0)
        norms = np.linalg.norm(np.where(sub.mask, sub.values, 0.0), axis=0)
        done = res <= tol_prune * norms
        entries.append(RankEntry(
            rank=r, columns=active.copy(), residuals=res,
            explained=active[done], n_clusters=k, fit_score=score))
        active = active[~done]
    return RankSweepReport(entries)
