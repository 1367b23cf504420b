"""Geometry oracles: explicit projector formulas and metric identities."""

import numpy as np
import pytest

from fusionsc.errors import (
    DimensionMismatch,
    InsufficientObservations,
    RankDeficient,
)
from fusionsc.geometry import (
    orthonormalize,
    orthonormalize_stack,
    pairwise_projector_distances,
    projector,
    projector_distance,
    restricted_projector,
)


def explicit_projector(basis, ridge=0.0):
    """Oracle: textbook formula with an explicit inverse."""
    basis = np.asarray(basis, dtype=float)
    gram = basis.T @ basis + ridge * np.eye(basis.shape[1])
    return basis @ np.linalg.inv(gram) @ basis.T


def test_orthonormalize_axis_scaling():
    q = orthonormalize(np.array([[2.0], [0.0]]))
    assert np.allclose(q, [[1.0], [0.0]])


def test_orthonormalize_identity_fixed():
    assert np.allclose(orthonormalize(np.eye(3)), np.eye(3))


@pytest.mark.parametrize("seed", range(5))
def test_orthonormalize_preserves_span(seed):
    rng = np.random.default_rng(seed)
    b = rng.standard_normal((10, 3))
    q = orthonormalize(b)
    assert q.shape == (10, 3)
    assert np.linalg.norm(q.T @ q - np.eye(3)) <= 1e-12
    # same span <=> same projector
    assert np.abs(projector(q) - explicit_projector(b)).max() <= 1e-10


def test_orthonormalize_rank_deficient():
    b = np.ones((5, 2))
    with pytest.raises(RankDeficient):
        orthonormalize(b)
    with pytest.raises(RankDeficient):
        orthonormalize(np.zeros((4, 1)))


def test_projector_axis():
    p = projector(np.array([[3.0], [0.0], [0.0]]))
    expect = np.zeros((3, 3))
    expect[0, 0] = 1.0
    assert np.abs(p - expect).max() <= 1e-12


@pytest.mark.parametrize("seed", range(5))
def test_projector_matches_explicit_formula(seed):
    rng = np.random.default_rng(100 + seed)
    b = rng.standard_normal((8, 2))
    p = projector(b)
    assert np.abs(p - explicit_projector(b)).max() <= 1e-10


@pytest.mark.parametrize("seed", range(5))
def test_projector_idempotent_symmetric(seed):
    rng = np.random.default_rng(200 + seed)
    b = rng.standard_normal((8, 2))
    p = projector(b)
    assert np.abs(p - p.T).max() <= 1e-12
    assert np.abs(p @ p - p).max() <= 1e-10
    assert abs(np.trace(p) - 2.0) <= 1e-10
    # reproduces vectors already in the span
    x = b @ rng.standard_normal(2)
    assert np.linalg.norm(p @ x - x) <= 1e-8 * np.linalg.norm(x)


def test_projector_orthonormal_shortcut():
    rng = np.random.default_rng(7)
    q = orthonormalize(rng.standard_normal((9, 4)))
    assert np.abs(projector(q) - q @ q.T).max() <= 1e-12


@pytest.mark.parametrize("seed", range(5))
def test_projector_invariant_under_column_mixing(seed):
    rng = np.random.default_rng(300 + seed)
    b = rng.standard_normal((10, 3))
    a = rng.standard_normal((3, 3)) + 3.0 * np.eye(3)
    assert np.abs(projector(b @ a) - projector(b)).max() <= 1e-9


def test_projector_rank_deficient():
    with pytest.raises(RankDeficient):
        projector(np.zeros((4, 2)))


def test_projector_ridge_shrinks():
    rng = np.random.default_rng(11)
    q = orthonormalize(rng.standard_normal((6, 2)))
    p = projector(q, ridge=1.0)
    # ridge 1 on an orthonormal basis halves the projector
    assert np.abs(p - 0.5 * q @ q.T).max() <= 1e-12


def test_restricted_projector_matches_subselected_basis():
    rng = np.random.default_rng(13)
    b = rng.standard_normal((10, 3))
    rows = np.array([0, 2, 3, 7, 9])
    p = restricted_projector(b, rows)
    assert p.shape == (5, 5)
    assert np.abs(p - explicit_projector(b[rows])).max() <= 1e-10


def test_restricted_projector_too_few_rows():
    b = np.random.default_rng(17).standard_normal((10, 3))
    with pytest.raises(InsufficientObservations):
        restricted_projector(b, np.array([1, 4]))


def test_restricted_projector_bad_pattern():
    b = np.random.default_rng(19).standard_normal((6, 2))
    with pytest.raises(DimensionMismatch):
        restricted_projector(b, np.array([3, 3, 4]))
    with pytest.raises(DimensionMismatch):
        restricted_projector(b, np.array([0, 6]))


def test_distance_identical_and_orthogonal():
    e1 = np.array([[1.0], [0.0]])
    e2 = np.array([[0.0], [1.0]])
    assert projector_distance(e1, e1) == 0.0
    assert abs(projector_distance(e1, e2) - 2.0) <= 1e-12
    # scaling does not change a span
    assert projector_distance(e1, 5.0 * e1) <= 1e-12


@pytest.mark.parametrize("seed", range(10))
def test_distance_matches_entrywise_frobenius(seed):
    rng = np.random.default_rng(400 + seed)
    a = rng.standard_normal((12, 3))
    b = rng.standard_normal((12, 3))
    direct = np.linalg.norm(explicit_projector(a) - explicit_projector(b)) ** 2
    assert abs(projector_distance(a, b) - direct) <= 1e-10


def test_distance_dimension_mismatch():
    a = np.random.default_rng(0).standard_normal((5, 2))
    b = np.random.default_rng(1).standard_normal((6, 2))
    with pytest.raises(DimensionMismatch):
        projector_distance(a, b)


@pytest.mark.parametrize("seed", range(100))
def test_distance_metric_properties(seed):
    rng = np.random.default_rng(500 + seed)
    a = rng.standard_normal((7, 2))
    b = rng.standard_normal((7, 2))
    c = rng.standard_normal((7, 2))
    dab = projector_distance(a, b)
    dba = projector_distance(b, a)
    assert dab >= 0.0
    assert abs(dab - dba) <= 1e-10
    # triangle inequality holds for the Frobenius norm itself
    ab, bc, ac = (np.sqrt(projector_distance(x, y)) for x, y in ((a, b), (b, c), (a, c)))
    assert ac <= ab + bc + 1e-8


def test_pairwise_matches_scalar_distance():
    rng = np.random.default_rng(23)
    stack = rng.standard_normal((6, 9, 2))
    dist = pairwise_projector_distances(stack)
    assert dist.shape == (6, 6)
    assert np.all(np.diag(dist) == 0.0)
    for i in range(6):
        for j in range(6):
            assert abs(dist[i, j] - projector_distance(stack[i], stack[j])) <= 1e-10


def test_orthonormalize_stack_matches_single():
    rng = np.random.default_rng(29)
    stack = rng.standard_normal((4, 8, 3))
    q = orthonormalize_stack(stack)
    for i in range(4):
        assert np.linalg.norm(q[i].T @ q[i] - np.eye(3)) <= 1e-12
        assert np.abs(projector(q[i]) - explicit_projector(stack[i])).max() <= 1e-10


def test_orthonormalize_stack_rank_deficient():
    stack = np.random.default_rng(31).standard_normal((3, 6, 2))
    stack[1, :, 1] = 2.0 * stack[1, :, 0]
    with pytest.raises(RankDeficient):
        orthonormalize_stack(stack)
