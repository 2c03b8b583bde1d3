"""Hermitian form, vector classification, frames and random generation."""

import numpy as np
import pytest

from cxhyp import (
    DegenerateFrameError,
    DimensionError,
    FormContext,
    Isometry,
    NotInGroupError,
    OutsideDomainError,
    ZeroVectorError,
    classify_vector,
    complete_frame,
    h_orthonormalize,
    herm_product,
    inverse_in_group,
    is_su,
    project_out_null_pair,
    random_null_lift,
    random_su,
    standard_lift,
    su_residuals,
)


def test_form_matrix_shape():
    ctx = FormContext(3)
    H = ctx.H
    assert H.shape == (4, 4)
    assert H[0, 3] == 1 and H[3, 0] == 1
    assert np.allclose(H[1:3, 1:3], np.eye(2))
    assert np.allclose(H, H.conj().T)
    vals = np.linalg.eigvalsh(H)
    assert np.sum(vals > 0) == 3 and np.sum(vals < 0) == 1


def test_form_matrix_readonly():
    ctx = FormContext(2)
    with pytest.raises(ValueError):
        ctx.H[0, 0] = 5.0


def test_bad_dimension():
    with pytest.raises(DimensionError):
        FormContext(0)


def test_herm_product_sesquilinear(rng):
    ctx = FormContext(3)
    z = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    w = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    mu = 0.7 - 1.3j
    assert herm_product(mu * z, w, ctx) == pytest.approx(
        mu * herm_product(z, w, ctx))
    assert herm_product(z, mu * w, ctx) == pytest.approx(
        np.conj(mu) * herm_product(z, w, ctx))
    assert herm_product(w, z, ctx) == pytest.approx(
        np.conj(herm_product(z, w, ctx)))


def test_classify_vector_signs():
    ctx = FormContext(2)
    e0 = np.array([1, 0, 0], dtype=complex)
    e1 = np.array([0, 1, 0], dtype=complex)
    neg = np.array([-1, 0, 1], dtype=complex)   # <v,v> = -2
    assert classify_vector(e0, ctx) == "null"
    assert classify_vector(e1, ctx) == "positive"
    assert classify_vector(neg, ctx) == "negative"
    # scale invariance of the relative threshold
    assert classify_vector(1e-8 * e0, ctx) == "null"
    with pytest.raises(ZeroVectorError):
        classify_vector(np.zeros(3), ctx)


def test_standard_lift():
    ctx = FormContext(2)
    v = standard_lift(np.array([-1.0, 0.0]), ctx)
    assert v.self_product == pytest.approx(-2.0)
    w = standard_lift(np.array([-0.5, 1.0]), ctx)   # boundary point
    assert abs(w.self_product) < 1e-12
    with pytest.raises(OutsideDomainError):
        standard_lift(np.array([1.0, 0.0]), ctx)


def test_random_null_lift(rng):
    ctx = FormContext(4)
    for _ in range(20):
        v = random_null_lift(ctx, rng)
        assert abs(herm_product(v, v, ctx)) < 1e-12 * np.vdot(v, v).real


def test_random_su_certified(rng):
    for n in (2, 3, 5):
        for seed in range(5):
            A = random_su(n, seed=seed)
            assert A.certified
            ctx = FormContext(n)
            form_res, det_res = su_residuals(A.matrix, ctx)
            assert form_res < 1e-9 * max(1.0, np.linalg.norm(A.matrix) ** 2)
            assert det_res < 1e-9


def test_random_su_deterministic():
    A = random_su(3, seed=42)
    B = random_su(3, seed=42)
    assert np.array_equal(A.matrix, B.matrix)


def test_inverse_in_group(rng):
    ctx = FormContext(3)
    A = random_su(3, seed=7)
    assert np.allclose(A.matrix @ inverse_in_group(A, ctx), np.eye(4),
                       atol=1e-10)
    assert np.allclose(A.matrix @ A.inverse(ctx), np.eye(4), atol=1e-10)


def test_certify_rejects_non_member():
    ctx = FormContext(2)
    with pytest.raises(NotInGroupError) as exc:
        Isometry.certify(2.0 * np.eye(3), ctx)
    assert exc.value.form_residual > 0


def test_h_orthonormalize(rng):
    ctx = FormContext(4)
    A = random_su(4, seed=3)
    a, b = A.matrix[:, 0], A.matrix[:, -1]
    raw = [rng.standard_normal(5) + 1j * rng.standard_normal(5)
           for _ in range(3)]
    projected = [project_out_null_pair(v, a, b, ctx) for v in raw]
    xs = h_orthonormalize(projected, ctx)
    for i, x in enumerate(xs):
        assert abs(herm_product(x, a, ctx)) < 1e-9
        assert abs(herm_product(x, b, ctx)) < 1e-9
        for j, y in enumerate(xs):
            want = 1.0 if i == j else 0.0
            assert abs(herm_product(x, y, ctx) - want) < 1e-9


def test_complete_frame_recovers_column():
    for n in (2, 3, 4):
        A = random_su(n, seed=11)
        for missing in range(2, n + 1):
            cols = [A.matrix[:, j] for j in range(n + 1)
                    if j != missing - 1]
            c = complete_frame(cols, missing, FormContext(n))
            assert np.allclose(c.coords, A.matrix[:, missing - 1],
                               atol=1e-8)


def test_complete_frame_rejects_bad_columns(rng):
    ctx = FormContext(2)
    bad = [rng.standard_normal(3) + 1j * rng.standard_normal(3)
           for _ in range(2)]
    with pytest.raises((DegenerateFrameError, DimensionError)):
        complete_frame(bad, 2, ctx)


def test_is_su_scale_relative():
    ctx = FormContext(2)
    A = random_su(2, seed=1)
    assert is_su(A.matrix, ctx)
    assert not is_su(1.5 * A.matrix, ctx)
