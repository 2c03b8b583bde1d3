"""Hermitian form of signature (n,1) and the basic linear algebra over it.

The form is the anti-diagonal-bordered one: ones in the (0,n) and (n,0)
corners and an identity block in the middle.  The pairing is
``<z, w> = w* H z``: linear in the first slot, conjugate-linear in the
second.  Other signature-(n,1) matrices are supported only through an
explicit user-supplied change of basis.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateFrameError,
    DimensionError,
    GramSchmidtError,
    NotInGroupError,
    OutsideDomainError,
    ZeroVectorError,
)

# Default tolerances.  Double precision leaves plenty of headroom for the
# matrix sizes this package targets (n <= 8).
EPS_NULL = 1e-9
EPS_GRP = 1e-9
GS_RETRY_BOUND = 16


class FormContext:
    """Ambient dimension n together with the fixed bordered form matrix."""

    __slots__ = ("n", "H")

    def __init__(self, n):
        if n < 1:
            raise DimensionError("n must be a positive integer")
        self.n = int(n)
        H = np.zeros((n + 1, n + 1), dtype=complex)
        H[0, n] = H[n, 0] = 1.0
        if n >= 2:
            H[1:n, 1:n] = np.eye(n - 1)
        H.setflags(write=False)
        self.H = H

    def __eq__(self, other):
        return isinstance(other, FormContext) and other.n == self.n

    def __hash__(self):
        return hash(("FormContext", self.n))

    def __repr__(self):
        return f"FormContext(n={self.n})"


def _coords(v):
    if isinstance(v, HVector):
        return v.coords
    return np.asarray(v, dtype=complex)


def herm_product(z, w, ctx):
    """Evaluate <z, w> = w* H z."""
    z = _coords(z)
    w = _coords(w)
    if z.shape != (ctx.n + 1,) or w.shape != (ctx.n + 1,):
        raise DimensionError(
            f"expected vectors of length {ctx.n + 1}, got {z.shape} and {w.shape}"
        )
    return complex(np.vdot(w, ctx.H @ z))


class HVector:
    """A complex (n+1)-vector carrying its cached self-product under the form."""

    __slots__ = ("coords", "self_product")

    def __init__(self, coords, ctx):
        coords = np.asarray(coords, dtype=complex)
        if coords.shape != (ctx.n + 1,):
            raise DimensionError(f"expected length {ctx.n + 1}, got {coords.shape}")
        self.coords = coords
        self.self_product = float(herm_product(coords, coords, ctx).real)

    def __repr__(self):
        return f"HVector({self.coords!r}, self_product={self.self_product:.3g})"


def classify_vector(z, ctx, tol=EPS_NULL):
    """Return 'negative', 'null' or 'positive' for the sign of <z, z>.

    The threshold is relative to the squared Euclidean norm, so the result
    is invariant under rescaling of z.
    """
    v = _coords(z)
    norm2 = float(np.vdot(v, v).real)
    if norm2 == 0.0:
        raise ZeroVectorError("cannot classify the zero vector")
    s = herm_product(v, v, ctx).real
    if s < -tol * norm2:
        return "negative"
    if s > tol * norm2:
        return "positive"
    return "null"


def standard_lift(point, ctx, tol=EPS_NULL):
    """Append homogeneous coordinate 1 to a point of the closed Siegel domain."""
    p = np.asarray(point, dtype=complex)
    if p.shape != (ctx.n,):
        raise DimensionError(f"expected a point of length {ctx.n}, got {p.shape}")
    value = 2.0 * p[0].real + float(np.sum(np.abs(p[1:]) ** 2))
    scale = 1.0 + float(np.vdot(p, p).real)
    if value > tol * scale:
        raise OutsideDomainError(
            f"point violates the Siegel inequality by {value:.3g}"
        )
    return HVector(np.concatenate([p, [1.0]]), ctx)


def su_residuals(M, ctx):
    """Form-preservation and determinant residuals of a candidate matrix."""
    M = np.asarray(M, dtype=complex)
    if M.shape != (ctx.n + 1, ctx.n + 1):
        raise DimensionError(f"expected a {ctx.n + 1}x{ctx.n + 1} matrix, got {M.shape}")
    form_res = float(np.linalg.norm(M.conj().T @ ctx.H @ M - ctx.H))
    det_res = float(abs(np.linalg.det(M) - 1.0))
    return form_res, det_res


def is_su(M, ctx, tol=EPS_GRP):
    """Membership test: M* H M = H and det M = 1, both within tol.

    The form residual is measured relative to the squared Frobenius norm
    of M (floored at 1)."""
    M = np.asarray(M, dtype=complex)
    form_res, det_res = su_residuals(M, ctx)
    scale = max(1.0, float(np.linalg.norm(M)) ** 2)
    return form_res <= tol * scale and det_res <= tol


@dataclass(frozen=True)
class Isometry:
    """A matrix together with a certification flag for group membership."""

    matrix: np.ndarray
    certified: bool = False

    @classmethod
    def certify(cls, M, ctx, tol=EPS_GRP):
        M = np.asarray(M, dtype=complex)
        if not is_su(M, ctx, tol):
            form_res, det_res = su_residuals(M, ctx)
            raise NotInGroupError(
                f"matrix is not in the group: form residual {form_res:.3g}, "
                f"det residual {det_res:.3g}",
                form_residual=form_res,
                det_residual=det_res,
            )
        return cls(matrix=M, certified=True)

    def inverse(self, ctx):
        # A^{-1} = H A* H for form-preserving A; cheaper and better
        # conditioned than a generic solve.
        return ctx.H @ self.matrix.conj().T @ ctx.H

    @property
    def n(self):
        return self.matrix.shape[0] - 1


def _matrix(A):
    if isinstance(A, Isometry):
        return A.matrix
    return np.asarray(A, dtype=complex)


def inverse_in_group(M, ctx):
    """H M* H, the inverse of a form-preserving matrix."""
    return ctx.H @ _matrix(M).conj().T @ ctx.H


def project_out_null_pair(v, a, r, ctx):
    """Remove from v its component in the span of a null pair with <a,r>=1."""
    return v - herm_product(v, r, ctx) * a - herm_product(v, a, ctx) * r


def h_orthonormalize(vectors, ctx, against=None, breakdown_tol=1e-10):
    """Gram-Schmidt a family of positive vectors under the indefinite form.

    ``against`` may hold already-orthonormal positive vectors to project
    out first.  Raises GramSchmidtError when a vector loses essentially
    all of its positive norm.
    """
    basis = list(against) if against is not None else []
    n_against = len(basis)
    for v in vectors:
        v = _coords(v).copy()
        for b in basis:
            v -= herm_product(v, b, ctx) * b
        s = herm_product(v, v, ctx).real
        if s <= breakdown_tol * float(np.vdot(v, v).real):
            raise GramSchmidtError("positive norm lost during orthonormalization")
        basis.append(v / np.sqrt(s))
    return basis[n_against:]


def complete_frame(columns, missing_index, ctx, tol=EPS_GRP):
    """Recover the deleted middle column of a group element.

    ``columns`` are the remaining n columns in their original order and
    ``missing_index`` is the 1-indexed position of the deleted column
    (2 <= missing_index <= n).  The result is the unique vector orthogonal
    to the given columns, scaled to unit positive norm with the phase fixed
    by det = 1.
    """
    n = ctx.n
    if not 2 <= missing_index <= n:
        raise DimensionError("missing_index must lie in 2..n")
    cols = [_coords(c) for c in columns]
    if len(cols) != n:
        raise DimensionError(f"expected {n} columns, got {len(cols)}")
    K = np.column_stack(cols)
    # c must satisfy <c, col_j> = 0 for every kept column.
    M = K.conj().T @ ctx.H
    _, s, vh = np.linalg.svd(M)
    # M is n x (n+1): a 1-dimensional complement needs all n singular
    # values significant
    if s[-1] <= 1e-8 * s[0]:
        raise DegenerateFrameError("orthogonal complement is not 1-dimensional")
    c = vh[-1].conj()
    norm = herm_product(c, c, ctx).real
    if norm <= tol:
        raise DegenerateFrameError("no unit-norm scaling exists")
    c = c / np.sqrt(norm)
    full = np.column_stack(cols[: missing_index - 1] + [c] + cols[missing_index - 1:])
    d = np.linalg.det(full)
    if abs(abs(d) - 1.0) > 1e-6:
        raise DegenerateFrameError(f"completed matrix has |det| = {abs(d):.6f}")
    c = c / d
    return HVector(c, ctx)


def random_null_lift(ctx, rng, spread=1.0):
    """Random null vector via the Siegel boundary parametrization."""
    n = ctx.n
    mid = spread * (rng.standard_normal(n - 1) + 1j * rng.standard_normal(n - 1))
    z1 = -0.5 * float(np.sum(np.abs(mid) ** 2)) + 1j * spread * rng.standard_normal()
    return np.concatenate([[z1], mid, [1.0]])


def _det_phase_fix(M):
    d = np.linalg.det(M)
    return M * np.exp(-1j * np.angle(d) / M.shape[0])


def random_su(n, seed=None, rng=None, tol=EPS_GRP):
    """Seeded random group element built by indefinite Gram-Schmidt.

    A random null pair is normalized to <a,b>=1, a positive block is
    orthonormalized against it, and the determinant phase is removed.
    Deterministic for a fixed seed.
    """
    ctx = FormContext(n)
    if rng is None:
        rng = np.random.default_rng(seed)
    for _ in range(GS_RETRY_BOUND):
        a = random_null_lift(ctx, rng)
        b = random_null_lift(ctx, rng)
        g = herm_product(a, b, ctx)
        if abs(g) < 1e-3:
            continue
        b = b * np.conj(1.0 / g)
        try:
            raw = [rng.standard_normal(n + 1) + 1j * rng.standard_normal(n + 1)
                   for _ in range(n - 1)]
            projected = [project_out_null_pair(v, a, b, ctx) for v in raw]
            xs = h_orthonormalize(projected, ctx, breakdown_tol=1e-6)
        except GramSchmidtError:
            continue
        F = np.column_stack([a] + xs + [b])
        F = _det_phase_fix(F)
        if is_su(F, ctx, tol):
            return Isometry(F, certified=True)
    raise GramSchmidtError("random generation exhausted its retry bound")
