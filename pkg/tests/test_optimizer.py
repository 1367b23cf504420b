"""Optimizer oracles: brute-force objectives and finite-difference gradients."""

import numpy as np
import pytest

from fusionsc.data import MaskedMatrix
from fusionsc.errors import (
    InsufficientObservations,
    InvalidParams,
    NonFiniteObjective,
    ShapeMismatch,
)
from fusionsc.geometry import projector_distance
from fusionsc.optimizer import (
    FscConfig,
    fit,
    gradient_full,
    gradient_masked,
    init_bases,
    lambda_scale,
    objective_full,
    objective_masked,
)


def explicit_projector(basis):
    gram = basis.T @ basis
    return basis @ np.linalg.inv(gram) @ basis.T


def brute_objective(values, mask, bases, lam):
    """Independent reimplementation: python loops, explicit inverses."""
    d, n = values.shape
    total = 0.0
    for i in range(n):
        rows = np.flatnonzero(mask[:, i])
        sub = bases[i][rows]
        x_obs = values[rows, i]
        p_obs = sub @ np.linalg.inv(sub.T @ sub) @ sub.T
        r = x_obs - p_obs @ x_obs
        total += float(r @ r)
    projs = [explicit_projector(bases[i]) for i in range(n)]
    fus = 0.0
    for i in range(n):
        for j in range(n):
            diff = projs[i] - projs[j]
            fus += float(np.sum(diff * diff))
    return total + 0.5 * lam * fus


def central_difference(func, bases, h=1e-6):
    """Entrywise central finite differences of a scalar function of the stack."""
    grad = np.zeros_like(bases)
    it = np.nditer(bases, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        bumped = bases.copy()
        bumped[idx] += h
        up = func(bumped)
        bumped[idx] -= 2 * h
        down = func(bumped)
        grad[idx] = (up - down) / (2 * h)
    return grad


def random_instance(seed, d, n, r, p=1.0):
    """Data plus deliberately non-orthonormal bases with healthy conditioning."""
    rng = np.random.default_rng(seed)
    values = rng.standard_normal((d, n))
    if p < 1.0:
        while True:
            mask = rng.random((d, n)) < p
            if np.all(mask.sum(axis=0) >= r + 1):
                break
    else:
        mask = np.ones((d, n), dtype=bool)
    bases = rng.standard_normal((n, d, r))
    bases /= np.linalg.norm(bases, axis=(1, 2), keepdims=True) / np.sqrt(r)
    return MaskedMatrix(values, mask), bases


# ---------------------------------------------------------------- objective


@pytest.mark.parametrize("seed", range(5))
@pytest.mark.parametrize("lam", [0.0, 0.37, 2.0])
def test_objective_full_matches_brute_force(seed, lam):
    x, bases = random_instance(seed, d=8, n=5, r=2)
    got = objective_full(x, bases, lam)
    want = brute_objective(x.values, x.mask, bases, lam)
    assert abs(got - want) <= 1e-9 * max(1.0, abs(want))


@pytest.mark.parametrize("seed", range(5))
@pytest.mark.parametrize("lam", [0.0, 0.37, 2.0])
def test_objective_masked_matches_brute_force(seed, lam):
    x, bases = random_instance(seed, d=9, n=5, r=2, p=0.7)
    got = objective_masked(x, bases, lam)
    want = brute_objective(x.values, x.mask, bases, lam)
    assert abs(got - want) <= 1e-9 * max(1.0, abs(want))


def test_objective_zero_when_columns_in_span_and_bases_equal():
    rng = np.random.default_rng(3)
    basis = rng.standard_normal((7, 2))
    coeffs = rng.standard_normal((2, 4))
    x = MaskedMatrix(basis @ coeffs)
    bases = np.repeat(basis[None], 4, axis=0)
    assert objective_full(x, bases, 5.0) <= 1e-18


def test_objective_orthogonal_pair_fusion_value():
    # two 1-d bases at right angles: ||P1 - P2||^2 = 2, both ordered pairs count
    x = MaskedMatrix(np.array([[1.0, 0.0], [0.0, 1.0]]))
    bases = np.array([[[1.0], [0.0]], [[0.0], [1.0]]])
    lam = 0.25
    assert abs(objective_full(x, bases, lam) - 2 * lam) <= 1e-12


def test_objective_full_rejects_masked_input():
    x = MaskedMatrix.from_values(np.array([[1.0, np.nan], [2.0, 3.0]]))
    bases = np.zeros((2, 2, 1))
    bases[:, 0, 0] = 1.0
    with pytest.raises(ShapeMismatch):
        objective_full(x, bases, 0.1)


def test_objective_shape_checks():
    x = MaskedMatrix(np.ones((3, 2)))
    with pytest.raises(ShapeMismatch):
        objective_full(x, np.ones((2, 4, 1)), 0.0)
    with pytest.raises(ShapeMismatch):
        objective_full(x, np.ones((2, 3, 1, 1)), 0.0)
    with pytest.raises(InvalidParams):
        objective_full(x, np.ones((2, 3, 1)), -1.0)


# ----------------------------------------------------------------- gradient


@pytest.mark.parametrize("seed", range(5))
@pytest.mark.parametrize("lam", [0.0, 0.8])
def test_gradient_full_matches_finite_differences(seed, lam):
    x, bases = random_instance(10 + seed, d=10, n=6, r=2)
    num = central_difference(lambda b: objective_full(x, b, lam), bases)
    for i in range(x.n):
        ana = gradient_full(x, bases, i, lam)
        scale = max(np.linalg.norm(num[i]), 1e-12)
        assert np.linalg.norm(ana - num[i]) / scale <= 1e-5


@pytest.mark.parametrize("seed", range(5))
@pytest.mark.parametrize("lam", [0.0, 0.8])
def test_gradient_masked_matches_finite_differences(seed, lam):
    x, bases = random_instance(20 + seed, d=12, n=6, r=2, p=0.6)
    num = central_difference(lambda b: objective_masked(x, b, lam), bases)
    for i in range(x.n):
        ana = gradient_masked(x, bases, i, lam)
        scale = max(np.linalg.norm(num[i]), 1e-12)
        assert np.linalg.norm(ana - num[i]) / scale <= 1e-5


def test_gradient_masked_zero_rows_outside_pattern_at_lam_zero():
    x, bases = random_instance(33, d=12, n=5, r=2, p=0.5)
    for i in range(x.n):
        g = gradient_masked(x, bases, i, 0.0)
        hidden = ~x.mask[:, i]
        assert np.all(g[hidden] == 0.0)


def test_gradient_full_mask_agrees_with_full_function():
    x, bases = random_instance(41, d=8, n=4, r=2)
    for i in range(x.n):
        gf = gradient_full(x, bases, i, 0.9)
        gm = gradient_masked(x, bases, i, 0.9)
        assert np.abs(gf - gm).max() <= 1e-12


def test_gradient_vanishes_at_global_minimum():
    # exact fit and fully fused bases minimize both terms simultaneously
    rng = np.random.default_rng(5)
    basis = np.linalg.qr(rng.standard_normal((9, 2)))[0]
    x = MaskedMatrix(basis @ rng.standard_normal((2, 5)))
    bases = np.repeat(basis[None], 5, axis=0)
    for i in range(5):
        g = gradient_full(x, bases, i, 1.3)
        assert np.linalg.norm(g) <= 1e-10


@pytest.mark.parametrize("seed", range(5))
def test_gradient_orthogonal_to_span_preserving_directions(seed):
    # directions dU = U B change the basis, not the subspace, so the
    # objective is flat along them and the gradient must be orthogonal
    x, bases = random_instance(50 + seed, d=8, n=4, r=2)
    rng = np.random.default_rng(999 + seed)
    for i in range(x.n):
        g = gradient_full(x, bases, i, 0.6)
        b = rng.standard_normal((2, 2))
        mix = bases[i] @ b
        inner = float(np.vdot(g, mix))
        bound = 1e-10 * max(np.linalg.norm(g) * np.linalg.norm(mix), 1e-12)
        assert abs(inner) <= bound


# --------------------------------------------------------------------- init


def test_init_gaussian_deterministic_and_orthonormal():
    x = MaskedMatrix(np.random.default_rng(0).standard_normal((9, 5)))
    a = init_bases(x, 3, "gaussian", seed=7)
    b = init_bases(x, 3, "gaussian", seed=7)
    c = init_bases(x, 3, "gaussian", seed=8)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    gram = np.matmul(a.transpose(0, 2, 1), a)
    assert np.abs(gram - np.eye(3)).max() <= 1e-12


def test_init_column_contains_own_column():
    rng = np.random.default_rng(1)
    vals = rng.standard_normal((8, 4))
    vals[2, 1] = np.nan
    x = MaskedMatrix.from_values(vals)
    bases = init_bases(x, 3, "column", seed=0)
    filled = x.filled(0.0)
    for i in range(4):
        col = filled[:, i]
        lead = bases[i][:, 0]
        assert np.abs(lead - col / np.linalg.norm(col)).max() <= 1e-12
        gram = bases[i].T @ bases[i]
        assert np.abs(gram - np.eye(3)).max() <= 1e-12


def test_init_column_rank_one():
    x = MaskedMatrix(np.random.default_rng(2).standard_normal((6, 3)))
    bases = init_bases(x, 1, "column", seed=0)
    assert bases.shape == (3, 6, 1)


def test_init_validates_params():
    x = MaskedMatrix(np.ones((4, 2)))
    with pytest.raises(InvalidParams):
        init_bases(x, 0)
    with pytest.raises(InvalidParams):
        init_bases(x, 5)
    with pytest.raises(InvalidParams):
        init_bases(x, 2, "other")


# ---------------------------------------------------------------------- fit


def test_fit_lam_zero_drives_residual_to_floor():
    rng = np.random.default_rng(11)
    x = MaskedMatrix(rng.standard_normal((6, 4)))
    cfg = FscConfig(rank=2, lam=0.0, max_iters=5000, tol_rel=0.0)
    bases, trace = fit(x, cfg)
    assert objective_full(x, bases, 0.0) <= 1e-10


def test_fit_identical_columns_fuse():
    col = np.array([1.0, 2.0, -1.0, 0.5])
    x = MaskedMatrix(np.stack([col, col], axis=1))
    cfg = FscConfig(rank=1, lam=1.0, max_iters=3000, tol_rel=0.0, seed=3)
    bases, _ = fit(x, cfg)
    assert projector_distance(bases[0], bases[1]) <= 1e-6


def test_fit_deterministic():
    rng = np.random.default_rng(13)
    x = MaskedMatrix(rng.standard_normal((7, 5)))
    cfg = FscConfig(rank=2, lam=0.01, max_iters=50, seed=5)
    b1, t1 = fit(x, cfg)
    b2, t2 = fit(x, cfg)
    assert np.array_equal(b1, b2)
    assert np.array_equal(t1.objectives, t2.objectives)


def test_fit_trace_monotone():
    rng = np.random.default_rng(17)
    x = MaskedMatrix(rng.standard_normal((10, 6)))
    cfg = FscConfig(rank=2, lam=0.05, max_iters=400, seed=1)
    _, trace = fit(x, cfg)
    objs = trace.objectives
    assert len(objs) >= 2
    diffs = np.diff(objs)
    assert np.all(diffs <= 1e-9 * max(1.0, abs(objs[0])))


def test_fit_masked_runs_and_descends():
    x, _ = random_instance(19, d=12, n=8, r=2, p=0.6)
    cfg = FscConfig(rank=2, lam=0.02, max_iters=300, seed=2)
    bases, trace = fit(x, cfg)
    assert trace.objectives[-1] < trace.objectives[0]
    gram = np.matmul(bases.transpose(0, 2, 1), bases)
    assert np.abs(gram - np.eye(2)).max() <= 1e-10


def test_fit_warm_start_used():
    rng = np.random.default_rng(23)
    x = MaskedMatrix(rng.standard_normal((6, 4)))
    cfg = FscConfig(rank=2, lam=0.0, max_iters=0)
    start = init_bases(x, 2, "gaussian", seed=99)
    bases, trace = fit(x, cfg, start_bases=start)
    assert np.allclose(bases, start)
    assert trace.iterations == 0 and not trace.converged


def test_fit_rejects_underobserved_column():
    vals = np.ones((5, 3))
    mask = np.ones((5, 3), dtype=bool)
    mask[1:, 2] = False  # column 2 observed once
    x = MaskedMatrix(vals, mask)
    with pytest.raises(InsufficientObservations) as err:
        fit(x, FscConfig(rank=2))
    assert err.value.column == 2
    assert err.value.required == 2


def test_fit_overflow_raises_nonfinite():
    x = MaskedMatrix(np.random.default_rng(29).standard_normal((5, 3)))
    cfg = FscConfig(rank=2, lam=1e308, max_iters=10)
    with pytest.raises(NonFiniteObjective):
        fit(x, cfg)


def test_config_validation():
    with pytest.raises(InvalidParams):
        FscConfig(rank=0)
    with pytest.raises(InvalidParams):
        FscConfig(rank=2, lam=-0.1)
    with pytest.raises(InvalidParams):
        FscConfig(rank=2, armijo_beta=1.5)
    with pytest.raises(InvalidParams):
        FscConfig(rank=2, step0=0.0)
    with pytest.raises(InvalidParams):
        FscConfig(rank=2, reorth_period=0)
    with pytest.raises(InvalidParams):
        FscConfig(rank=2, init="pca")


def test_lambda_scale():
    assert lambda_scale(100, 80) == 1.0 / 8000
    with pytest.raises(InvalidParams):
        lambda_scale(0, 5)
