"""Pair normalization, invariant profiles and the conjugacy decision."""

import numpy as np
import pytest

from cxhyp import (
    BoundaryPoint,
    EigenStructure,
    FormContext,
    InvalidPairError,
    Isometry,
    NormalizationError,
    eigenframe,
    global_scalar_deviation,
    herm_product,
    invariant_vector,
    invariant_vectors_close,
    is_good_pair_I,
    is_nonsingular,
    make_pair,
    normalize_good_I,
    normalize_nonsingular,
    pair_flags,
    pairs_conjugate,
    projective_distance,
    random_loxodromic,
    random_nonsingular_pair,
    random_pair,
    random_su,
    reference_eigenpoint,
    reference_invariants,
    canonical_eigenpoint,
    transport_frame,
)
from cxhyp.form import inverse_in_group, random_null_lift


def _conjugate_pair(p, C, ctx, tol=1e-7):
    Ci = inverse_in_group(C, ctx)
    A2 = Isometry.certify(C.matrix @ p.A.matrix @ Ci, ctx, tol)
    B2 = Isometry.certify(C.matrix @ p.B.matrix @ Ci, ctx, tol)
    return make_pair(A2, B2, ctx,
                     frame_a=transport_frame(p.frame_a, C),
                     frame_b=transport_frame(p.frame_b, C))


def test_make_pair_anchors():
    ctx = FormContext(3)
    p = random_pair(3, seed=1, ctx=ctx)
    assert herm_product(p.frame_a.attracting, p.frame_a.repelling,
                        ctx) == pytest.approx(1.0)
    assert herm_product(p.frame_b.attracting, p.frame_b.repelling,
                        ctx) == pytest.approx(1.0)
    anchor = (p.frame_a.attracting if p.convention == "aa"
              else p.frame_a.repelling)
    assert herm_product(anchor, p.frame_b.attracting,
                        ctx) == pytest.approx(1.0)


def test_make_pair_rejects_shared_fixed_point():
    ctx = FormContext(2)
    A = random_loxodromic(2, seed=3)
    A2 = Isometry.certify(A.matrix @ A.matrix, ctx, 1e-8)
    with pytest.raises(InvalidPairError):
        make_pair(A, A2, ctx)


def test_reference_eigenpoint_shape():
    for n in (2, 3):
        ctx = FormContext(n)
        p = random_pair(n, seed=5, ctx=ctx)
        ref = reference_eigenpoint(p, ctx)
        assert ref.t == 2 * n + 2
        assert ref.labels[:4] == (("A", 0), ("A", 1), ("B", 0), ("B", 1))
        assert ref.relabel_map == tuple(range(2 * n + 2))


def test_reference_profile_counts():
    for n in (2, 3, 4):
        ctx = FormContext(n)
        prof = reference_invariants(random_pair(n, seed=7, ctx=ctx), ctx)
        assert prof.t == 2 * n + 2
        assert len(prof.invariants) == (n + 1) * (2 * n - 1)
        assert len(prof.traces_a) == (n + 1) // 2


def test_profile_conjugation_invariant():
    ctx = FormContext(3)
    p = random_pair(3, seed=11, ctx=ctx)
    C = random_su(3, seed=12)
    p2 = _conjugate_pair(p, C, ctx)
    iv1 = reference_invariants(p, ctx).invariants
    iv2 = reference_invariants(p2, ctx).invariants
    assert invariant_vectors_close(iv1, iv2, 1e-8)


def test_collision_dedupe():
    """A pair engineered so one of B's chain points equals a_A collapses
    to t < 2n+2 when phase retries are disabled, and separates otherwise.

    The frames are built explicitly (chain points depend on the lift
    scaling, so the collision is staged at the frame level) and the pair
    assembled directly from them."""
    from cxhyp.form import h_orthonormalize, project_out_null_pair
    from cxhyp.pairs import LoxodromicPair
    from cxhyp.loxodromic import Eigenframe

    n = 2
    ctx = FormContext(n)
    rng = np.random.default_rng(31)

    def element_from(F, r, theta, phi):
        E = EigenStructure(r=r, theta=theta, phis=(phi,),
                           clusters=((phi, 1),)).diagonal()
        M = F @ E @ ctx.H @ F.conj().T @ ctx.H
        return Isometry.certify(M, ctx, 1e-7)

    F2 = random_su(n, rng=rng).matrix   # columns (a2, x2, r2), Gram = H
    a2, x2, r2 = F2[:, 0], F2[:, 1], F2[:, 2]
    B = element_from(F2, 2.0, -0.4, 0.8)
    a1 = (a2 - r2) / np.sqrt(2) + x2    # B's chain point, a null vector
    for _ in range(32):
        r1 = random_null_lift(ctx, rng)
        g = herm_product(a1, r1, ctx)
        if abs(g) > 0.1:
            break
    r1 = r1 * np.conj(1.0 / g)
    raw = rng.standard_normal(n + 1) + 1j * rng.standard_normal(n + 1)
    xs = h_orthonormalize([project_out_null_pair(raw, a1, r1, ctx)], ctx)
    F1 = np.column_stack([a1] + xs + [r1])
    A = element_from(F1, 1.7, 0.25, -0.5)
    p = LoxodromicPair(A=A, B=B,
                       frame_a=Eigenframe(a1, xs, r1),
                       frame_b=Eigenframe(a2, [x2], r2),
                       convention="aa")
    collapsed = reference_eigenpoint(p, ctx, max_phase_retries=0)
    assert collapsed.t < 2 * n + 2
    assert len(set(collapsed.relabel_map)) == collapsed.t
    resolved = reference_eigenpoint(p, ctx)
    assert resolved.t == 2 * n + 2


def test_canonical_eigenpoint_constraints():
    for n in (2, 3):
        ctx = FormContext(n)
        p = random_pair(n, seed=13, ctx=ctx)
        can = canonical_eigenpoint(p, ctx)
        assert can.convention == "ra"
        assert can.constraint_residual < 1e-9
        assert len(can.points) == 2 * n + 2


def test_good_pair_flags():
    ctx = FormContext(3)
    p = random_pair(3, seed=17, ctx=ctx)
    flags = pair_flags(p, ctx)
    assert flags["regular"]
    # generic pairs are good and non-singular
    assert flags["goodI"] and flags["nonSingular"]
    # a non-regular pair is neither
    q = make_pair(random_loxodromic(3, seed=18, parts=(2,)),
                  random_loxodromic(3, seed=19), ctx)
    qflags = pair_flags(q, ctx)
    assert not qflags["regular"]
    assert not qflags["goodI"] and not qflags["nonSingular"]


def test_normalize_good_I_torus_pins():
    ctx = FormContext(3)
    p = random_pair(3, seed=21, ctx=ctx)
    ref1 = normalize_good_I(p, ctx)
    C = random_su(3, seed=22)
    p2 = _conjugate_pair(p, C, ctx)
    ref2 = normalize_good_I(p2, ctx)
    # pinned tuples of conjugate pairs differ by the conjugating isometry
    # composed with at most one global unimodular scalar
    Z1 = C.matrix @ ref1.points.lifts()
    vec, spread, mod = global_scalar_deviation(Z1, ref2.points.lifts())
    assert vec < 1e-7 and spread < 1e-7 and mod < 1e-7


def test_normalize_nonsingular_scramble_invariance():
    for n, seed in ((3, 23), (4, 24)):
        ctx = FormContext(n)
        p = random_nonsingular_pair(n, seed=seed, ctx=ctx)
        t1 = normalize_nonsingular(p, ctx)
        t2 = normalize_nonsingular(p, ctx,
                                   rng=np.random.default_rng(seed + 1))
        vec, spread, mod = global_scalar_deviation(t1, t2)
        assert vec < 1e-8 and spread < 1e-8 and mod < 1e-8
        assert len(t1) == 2 * n


def test_normalize_nonsingular_rejects_nonregular():
    ctx = FormContext(3)
    q = make_pair(random_loxodromic(3, seed=25, parts=(2,)),
                  random_loxodromic(3, seed=26), ctx)
    with pytest.raises(NormalizationError):
        normalize_nonsingular(q, ctx)


def test_pairs_conjugate_yes_regular():
    ctx = FormContext(2)
    p = random_pair(2, seed=27, ctx=ctx)
    C = random_su(2, seed=28)
    p2 = _conjugate_pair(p, C, ctx)
    v = pairs_conjugate(p, p2, ctx)
    assert v.verdict == "yes"
    assert v.residual < 1e-7
    D = v.conjugator.matrix
    Di = inverse_in_group(D, ctx)
    assert np.linalg.norm(D @ p.A.matrix @ Di - p2.A.matrix) < 1e-6
    assert np.linalg.norm(D @ p.B.matrix @ Di - p2.B.matrix) < 1e-6


def test_pairs_conjugate_no_stage0():
    ctx = FormContext(3)
    p = random_pair(3, seed=29, ctx=ctx)
    q = random_pair(3, seed=30, ctx=ctx)
    v = pairs_conjugate(p, q, ctx)
    assert v.verdict == "no" and v.stage == 0


def test_pairs_conjugate_multiplicity_stage3():
    ctx = FormContext(3)
    p = make_pair(random_loxodromic(3, seed=33, parts=(2,)),
                  random_loxodromic(3, seed=34), ctx)
    C = random_su(3, seed=35)
    p2 = _conjugate_pair(p, C, ctx)
    v = pairs_conjugate(p, p2, ctx)
    assert v.verdict == "yes"
    assert v.residual < 1e-7


def test_pairs_conjugate_same_traces_different_pair():
    """Same element classes, different joint geometry: not conjugate and
    never reported 'yes'."""
    ctx = FormContext(2)
    A = random_loxodromic(2, seed=37)
    B = random_loxodromic(2, seed=38)
    C = random_su(2, seed=39)
    Ci = inverse_in_group(C, ctx)
    # conjugate only B: same traces, generically different pair orbit
    B2 = Isometry.certify(C.matrix @ B.matrix @ Ci, ctx, 1e-7)
    p1 = make_pair(A, B, ctx)
    p2 = make_pair(A, B2, ctx)
    v = pairs_conjugate(p1, p2, ctx)
    assert v.verdict in ("no", "undetermined")


def test_pairs_conjugate_self():
    ctx = FormContext(4)
    p = random_pair(4, seed=41, ctx=ctx)
    v = pairs_conjugate(p, p, ctx)
    assert v.verdict == "yes" and v.residual < 1e-8
