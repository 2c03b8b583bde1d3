"""Projective invariants of boundary tuples and a constructive congruence test.

Boundary points are projective classes of null vectors.  The two numerical
invariants are the angular invariant of a triple and the complex cross
ratio of a quadruple; an ordered m-tuple gets the standard invariant
vector (one angle plus 2(m-3) + (m-3)(m-4)/2 cross ratios in a fixed
label order).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import (
    DegenerateConfigurationError,
    DimensionError,
    GramSchmidtError,
    NotFullRankError,
    ZeroVectorError,
)
from .form import (
    EPS_NULL,
    FormContext,
    HVector,
    Isometry,
    _coords,
    _det_phase_fix,
    h_orthonormalize,
    herm_product,
    is_su,
)

EPS_PROJ = 1e-8


def projective_distance(u, v):
    """Sine of the angle between the two lift lines (scale-free)."""
    u = _coords(u)
    v = _coords(v)
    nu = float(np.vdot(u, u).real)
    nv = float(np.vdot(v, v).real)
    if nu == 0.0 or nv == 0.0:
        raise ZeroVectorError("projective distance of a zero vector")
    # norm of v's component orthogonal to u: stable near zero, unlike
    # sqrt(1 - cos^2)
    perp = v - (np.vdot(u, v) / nu) * u
    return min(1.0, float(np.linalg.norm(perp)) / math.sqrt(nv))


def projectively_equal(u, v, tol=EPS_PROJ):
    return projective_distance(u, v) <= tol


class BoundaryPoint:
    """Projective class of a null lift."""

    __slots__ = ("lift",)

    def __init__(self, lift, ctx, tol=EPS_NULL):
        v = _coords(lift)
        norm2 = float(np.vdot(v, v).real)
        if norm2 == 0.0:
            raise ZeroVectorError("boundary point needs a nonzero lift")
        s = herm_product(v, v, ctx)
        if abs(s) > tol * norm2:
            raise DegenerateConfigurationError(
                f"lift is not null: <z,z> = {s:.3g} at scale {norm2:.3g}"
            )
        self.lift = v

    def __repr__(self):
        return f"BoundaryPoint({self.lift!r})"


class BoundaryTuple:
    """Ordered tuple of pairwise projectively distinct boundary points."""

    __slots__ = ("points",)

    def __init__(self, points, tol=EPS_PROJ):
        points = list(points)
        if len(points) < 3:
            raise DimensionError("a boundary tuple needs at least 3 points")
        for i in range(len(points)):
            for j in range(i + 1, len(points)):
                if projectively_equal(points[i].lift, points[j].lift, tol):
                    raise DegenerateConfigurationError(
                        f"points {i + 1} and {j + 1} coincide projectively"
                    )
        self.points = points

    def __len__(self):
        return len(self.points)

    def lifts(self):
        return np.column_stack([p.lift for p in self.points])


def _pairing(z, w, ctx, label):
    g = herm_product(z, w, ctx)
    scale = math.sqrt(float(np.vdot(_coords(z), _coords(z)).real)
                      * float(np.vdot(_coords(w), _coords(w)).real))
    if abs(g) <= 1e-13 * scale:
        raise DegenerateConfigurationError(
            f"Hermitian product {label} vanishes", which=label
        )
    return g


def cartan_invariant(z1, z2, z3, ctx):
    """arg(-<z1,z2><z2,z3><z3,z1>), always in [-pi/2, pi/2]."""
    a, b, c = (p.lift if isinstance(p, BoundaryPoint) else _coords(p)
               for p in (z1, z2, z3))
    for u, v in ((a, b), (b, c), (c, a)):
        if projectively_equal(u, v):
            raise DegenerateConfigurationError("coincident points in triple")
    g12 = _pairing(a, b, ctx, "(1,2)")
    g23 = _pairing(b, c, ctx, "(2,3)")
    g31 = _pairing(c, a, ctx, "(3,1)")
    ang = float(np.angle(-g12 * g23 * g31))
    if abs(ang) > math.pi / 2 + 1e-9:
        raise DegenerateConfigurationError(
            f"angular invariant {ang:.6f} outside [-pi/2, pi/2]"
        )
    return min(max(ang, -math.pi / 2), math.pi / 2)


def cross_ratio(z1, z2, z3, z4, ctx):
    """<z3,z1><z4,z2> / (<z4,z1><z3,z2>), lift-independent."""
    a, b, c, d = (p.lift if isinstance(p, BoundaryPoint) else _coords(p)
                  for p in (z1, z2, z3, z4))
    den1 = _pairing(d, a, ctx, "(4,1)")
    den2 = _pairing(c, b, ctx, "(3,2)")
    num1 = herm_product(c, a, ctx)
    num2 = herm_product(d, b, ctx)
    return (num1 * num2) / (den1 * den2)


@dataclass(frozen=True)
class CrossRatioEntry:
    k: int
    j: int
    value: complex


@dataclass(frozen=True)
class InvariantVector:
    """Angular invariant plus labeled cross ratios in the fixed order
    (2,4)..(2,m), (3,4)..(3,m), (4,5), (4,6), ..., (m-1,m)."""

    angular: float
    cross: tuple

    def __len__(self):
        return len(self.cross)


def invariant_vector(p, ctx):
    pts = p.points if isinstance(p, BoundaryTuple) else list(p)
    m = len(pts)
    angular = cartan_invariant(pts[0], pts[1], pts[2], ctx)
    entries = []

    def x(i1, i2, i3, i4, k, j):
        try:
            value = cross_ratio(pts[i1], pts[i2], pts[i3], pts[i4], ctx)
        except DegenerateConfigurationError as exc:
            raise DegenerateConfigurationError(
                f"cross ratio ({k},{j}) degenerate: {exc}", which=(k, j)
            ) from exc
        entries.append(CrossRatioEntry(k, j, value))

    for j in range(4, m + 1):
        x(0, 1, 2, j - 1, 2, j)
    for j in range(4, m + 1):
        x(0, 2, 1, j - 1, 3, j)
    for k in range(4, m):
        for j in range(k + 1, m + 1):
            x(0, k - 1, 1, j - 1, k, j)
    return InvariantVector(angular=angular, cross=tuple(entries))


def invariant_vectors_close(v1, v2, tol):
    if len(v1.cross) != len(v2.cross):
        return False
    if abs(v1.angular - v2.angular) > tol:
        return False
    for e1, e2 in zip(v1.cross, v2.cross):
        if (e1.k, e1.j) != (e2.k, e2.j):
            return False
        if abs(e1.value - e2.value) > tol * max(1.0, abs(e1.value)):
            return False
    return True


def _gram(Z, ctx):
    # G[i, j] = <z_j, z_i>
    return Z.conj().T @ ctx.H @ Z


def _equalize_grams(G, Gp, tol):
    """Find scalars d with conj(d_i) d_j Gp[i,j] = G[i,j], or None.

    Anchored at index 0; the modulus of d_0 comes from the first triangle
    of simultaneously nonzero entries, the rest propagate from row 0 (with
    a BFS fallback through any solved index)."""
    m = G.shape[0]
    scale = max(1.0, float(np.abs(G).max()), float(np.abs(Gp).max()))
    nz = (np.abs(G) > 1e-12 * scale) & (np.abs(Gp) > 1e-12 * scale)
    c = np.zeros_like(G)
    c[nz] = G[nz] / Gp[nz]

    d0_mod2 = None
    for j in range(1, m):
        for k in range(j + 1, m):
            if nz[0, j] and nz[0, k] and nz[j, k]:
                val = np.conj(c[0, j]) * c[0, k] / c[j, k]
                if abs(val.imag) > tol * max(1.0, abs(val)) or val.real <= 0:
                    return None
                d0_mod2 = val.real
                break
        if d0_mod2 is not None:
            break
    if d0_mod2 is None:
        d0_mod2 = 1.0

    d = np.full(m, np.nan + 0j)
    d[0] = math.sqrt(d0_mod2)
    solved = [0]
    pending = set(range(1, m))
    while pending:
        progress = False
        for j in list(pending):
            for i in solved:
                if nz[i, j]:
                    d[j] = c[i, j] / np.conj(d[i])
                    solved.append(j)
                    pending.discard(j)
                    progress = True
                    break
        if not progress:
            return None

    D = np.diag(d)
    resid = np.linalg.norm(D.conj().T @ Gp @ D - G) / scale
    if resid > tol:
        return None
    return d


def _h_complement(Z, ctx, rank):
    """H-orthonormal basis of the H-orthocomplement of the column span."""
    n1 = Z.shape[0]
    if rank == n1:
        return []
    _, s, vh = np.linalg.svd(Z.conj().T @ ctx.H)
    null = [vh[k].conj() for k in range(rank, n1)]
    return h_orthonormalize(null, ctx, breakdown_tol=1e-8)


def tuples_congruent(p, p_prime, ctx, tol=1e-10, allow_rank_deficient=False,
                     displacement_tol=1e-7):
    """Constructive congruence: an isometry mapping p onto p_prime, or None.

    Invariant vectors are compared first; on agreement the lifts of
    p_prime are rescaled to equalize Gram matrices and the isometry is
    solved from matching bases.  Tuples of length >= 4 must contain n+1
    projectively independent lifts unless allow_rank_deficient is set;
    triples use the angular invariant alone and frame completion by
    H-orthocomplement extension.
    """
    pts = p.points if isinstance(p, BoundaryTuple) else list(p)
    pts_p = p_prime.points if isinstance(p_prime, BoundaryTuple) else list(p_prime)
    if len(pts) != len(pts_p):
        raise DimensionError("tuples have different lengths")
    m = len(pts)

    iv1 = invariant_vector(pts, ctx)
    iv2 = invariant_vector(pts_p, ctx)
    if not invariant_vectors_close(iv1, iv2, tol):
        return None

    Z = np.column_stack([q.lift if isinstance(q, BoundaryPoint) else _coords(q)
                         for q in pts])
    Zp = np.column_stack([q.lift if isinstance(q, BoundaryPoint) else _coords(q)
                          for q in pts_p])
    # Normalize lift scales so the Gram entries are O(1).
    Z = Z / np.linalg.norm(Z, axis=0)
    Zp = Zp / np.linalg.norm(Zp, axis=0)

    sv = np.linalg.svd(Z, compute_uv=False)
    rank = int(np.sum(sv > 1e-10 * sv[0]))
    if rank < ctx.n + 1 and m >= 4 and not allow_rank_deficient:
        raise NotFullRankError(
            f"tuple spans only {rank} of {ctx.n + 1} dimensions"
        )

    G = _gram(Z, ctx)
    Gp = _gram(Zp, ctx)
    d = _equalize_grams(G, Gp, max(tol, 1e-9))
    if d is None:
        return None
    W = Zp * d[np.newaxis, :]

    _, _, piv = scipy.linalg.qr(Z, pivoting=True)
    sel = list(piv[:rank])
    try:
        comp_z = _h_complement(Z[:, sel], ctx, rank)
        comp_w = _h_complement(W[:, sel], ctx, rank)
    except GramSchmidtError:
        return None
    basis_z = np.column_stack([Z[:, sel]] + comp_z) if comp_z else Z[:, sel]
    basis_w = np.column_stack([W[:, sel]] + comp_w) if comp_w else W[:, sel]

    try:
        C = basis_w @ np.linalg.inv(basis_z)
    except np.linalg.LinAlgError:
        return None
    C = _det_phase_fix(C)
    if not is_su(C, ctx, 1e-7):
        return None
    for zi, wi in zip(Z.T, Zp.T):
        if projective_distance(C @ zi, wi) > displacement_tol:
            return None
    return Isometry(C, certified=True)


def random_boundary_point(ctx, rng, spread=1.0):
    from .form import random_null_lift

    return BoundaryPoint(random_null_lift(ctx, rng, spread), ctx)


def random_boundary_tuple(ctx, rng, m, spread=1.0):
    """Random tuple of m distinct boundary points (full rank generically)."""
    for _ in range(32):
        pts = [random_boundary_point(ctx, rng, spread) for _ in range(m)]
        try:
            return BoundaryTuple(pts)
        except DegenerateConfigurationError:
            continue
    raise DegenerateConfigurationError("failed to sample a distinct tuple")
