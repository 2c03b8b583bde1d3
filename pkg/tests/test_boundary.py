"""Projective boundary invariants and the constructive congruence."""

import math

import numpy as np
import pytest

from cxhyp import (
    BoundaryPoint,
    BoundaryTuple,
    DegenerateConfigurationError,
    FormContext,
    NotFullRankError,
    cartan_invariant,
    cross_ratio,
    invariant_vector,
    invariant_vectors_close,
    projective_distance,
    random_boundary_point,
    random_boundary_tuple,
    random_su,
    tuples_congruent,
)


def _transported(tup, C, ctx):
    M = C.matrix
    return BoundaryTuple([BoundaryPoint(M @ p.lift, ctx)
                          for p in tup.points])


def test_projective_distance_scale_free(rng):
    v = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    assert projective_distance(v, (2 - 3j) * v) < 1e-12
    w = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    assert projective_distance(v, w) == pytest.approx(
        projective_distance(5j * v, -2 * w))


def test_boundary_point_rejects_non_null():
    ctx = FormContext(2)
    with pytest.raises(DegenerateConfigurationError):
        BoundaryPoint(np.array([0, 1, 0], dtype=complex), ctx)


def test_cartan_invariant_bounds_and_invariance(rng):
    ctx = FormContext(3)
    for seed in range(30):
        tup = random_boundary_tuple(ctx, rng, 3)
        a = cartan_invariant(*tup.points, ctx)
        assert -math.pi / 2 <= a <= math.pi / 2
        C = random_su(3, seed=seed)
        moved = _transported(tup, C, ctx)
        assert cartan_invariant(*moved.points, ctx) == pytest.approx(a, abs=1e-9)


def test_cartan_antisymmetry(rng):
    ctx = FormContext(2)
    tup = random_boundary_tuple(ctx, rng, 3)
    p1, p2, p3 = tup.points
    a = cartan_invariant(p1, p2, p3, ctx)
    assert cartan_invariant(p2, p1, p3, ctx) == pytest.approx(-a, abs=1e-12)


def test_cross_ratio_lift_independent(rng):
    ctx = FormContext(3)
    tup = random_boundary_tuple(ctx, rng, 4)
    x = cross_ratio(*tup.points, ctx)
    scaled = [BoundaryPoint((1.5 + 0.5j * k) * p.lift, ctx)
              for k, p in enumerate(tup.points)]
    assert cross_ratio(*scaled, ctx) == pytest.approx(x, rel=1e-12)


def test_cross_ratio_isometry_invariant(rng):
    ctx = FormContext(2)
    for seed in range(20):
        tup = random_boundary_tuple(ctx, rng, 4)
        C = random_su(2, seed=seed)
        moved = _transported(tup, C, ctx)
        assert cross_ratio(*moved.points, ctx) == pytest.approx(
            cross_ratio(*tup.points, ctx), rel=1e-9)


def test_invariant_vector_length(rng):
    ctx = FormContext(3)
    for m in (3, 4, 5, 6, 8):
        tup = random_boundary_tuple(ctx, rng, m)
        iv = invariant_vector(tup, ctx)
        assert len(iv) == 2 * (m - 3) + (m - 3) * (m - 4) // 2


def test_invariant_vector_label_order(rng):
    ctx = FormContext(2)
    tup = random_boundary_tuple(ctx, rng, 6)
    iv = invariant_vector(tup, ctx)
    labels = [(e.k, e.j) for e in iv.cross]
    assert labels == [(2, 4), (2, 5), (2, 6), (3, 4), (3, 5), (3, 6),
                      (4, 5), (4, 6), (5, 6)]


def test_tuples_congruent_roundtrip(rng):
    for n in (2, 3):
        ctx = FormContext(n)
        for seed in range(10):
            tup = random_boundary_tuple(ctx, rng, 2 * n + 2)
            C = random_su(n, seed=seed)
            moved = _transported(tup, C, ctx)
            D = tuples_congruent(tup, moved, ctx)
            assert D is not None
            for p, q in zip(tup.points, moved.points):
                assert projective_distance(D.matrix @ p.lift, q.lift) < 1e-7


def test_tuples_congruent_rejects_different_invariants(rng):
    ctx = FormContext(2)
    t1 = random_boundary_tuple(ctx, rng, 6)
    t2 = random_boundary_tuple(ctx, rng, 6)
    iv1 = invariant_vector(t1, ctx)
    iv2 = invariant_vector(t2, ctx)
    assert not invariant_vectors_close(iv1, iv2, 1e-8)
    assert tuples_congruent(t1, t2, ctx) is None


def test_tuples_congruent_triple(rng):
    ctx = FormContext(3)
    tup = random_boundary_tuple(ctx, rng, 3)
    C = random_su(3, seed=5)
    moved = _transported(tup, C, ctx)
    D = tuples_congruent(tup, moved, ctx)
    assert D is not None
    for p, q in zip(tup.points, moved.points):
        assert projective_distance(D.matrix @ p.lift, q.lift) < 1e-7


def test_tuples_congruent_rank_deficient_guard(rng):
    ctx = FormContext(3)
    # four points inside a 3-dimensional subspace: first coordinates tied
    pts = []
    while len(pts) < 4:
        v = random_boundary_point(FormContext(2), rng).lift
        w = np.array([v[0], v[1], 0.0, v[2]], dtype=complex)
        if all(projective_distance(w, p.lift) > 1e-6 for p in pts):
            pts.append(BoundaryPoint(w, ctx))
    tup = BoundaryTuple(pts)
    C = random_su(3, seed=9)
    moved = _transported(tup, C, ctx)
    with pytest.raises(NotFullRankError):
        tuples_congruent(tup, moved, ctx)
    D = tuples_congruent(tup, moved, ctx, allow_rank_deficient=True)
    assert D is not None
    for p, q in zip(tup.points, moved.points):
        assert projective_distance(D.matrix @ p.lift, q.lift) < 1e-7
