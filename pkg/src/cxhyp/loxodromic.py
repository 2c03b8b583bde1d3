"""Single-element analysis: type detection, characteristic polynomial
structure, trace invariants, regularity via the Sylvester resultant,
eigenframes, multiplicities and eigenpoints.

A loxodromic element has one eigenvalue of modulus r > 1, its partner of
modulus 1/r, and the remaining n-1 eigenvalues on the unit circle.  The
eigenframe (attracting vector, positive eigenvectors, repelling vector)
is normalized so that <a,r> = 1 and each positive vector has unit norm,
with phases pinned by the first significant coordinate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .boundary import BoundaryPoint
from .errors import (
    ClusterAmbiguityError,
    InconsistentRegularityError,
    MarginalClassificationError,
    NotLoxodromicError,
)
from .form import (
    FormContext,
    Isometry,
    _coords,
    _matrix,
    h_orthonormalize,
    herm_product,
    inverse_in_group,
    random_su,
)

EPS_EIG = 1e-8
EPS_CLUSTER = 1e-7
EPS_RES = 1e-6

SQRT2 = math.sqrt(2.0)


def wrap_angle(x):
    """Reduce to (-pi, pi]."""
    y = math.remainder(x, 2.0 * math.pi)
    if y <= -math.pi:
        y += 2.0 * math.pi
    return y


@dataclass(frozen=True)
class EigenStructure:
    r: float
    theta: float
    phis: tuple           # n-1 unit-circle angles, ascending
    clusters: tuple       # (angle, count) per cluster, ascending angle

    def diagonal(self):
        vals = [self.r * np.exp(1j * self.theta)]
        vals += [np.exp(1j * phi) for phi in self.phis]
        vals.append(np.exp(1j * self.theta) / self.r)
        return np.diag(vals)


@dataclass(frozen=True)
class Multiplicity:
    parts: tuple

    def __post_init__(self):
        assert all(p >= 1 for p in self.parts)


@dataclass(frozen=True)
class TraceTuple:
    values: tuple

    def __len__(self):
        return len(self.values)


@dataclass
class Eigenframe:
    attracting: np.ndarray
    positives: list
    repelling: np.ndarray

    @property
    def matrix(self):
        return np.column_stack([self.attracting] + list(self.positives)
                               + [self.repelling])

    def copy(self):
        return Eigenframe(self.attracting.copy(),
                          [x.copy() for x in self.positives],
                          self.repelling.copy())


def char_poly(A, ctx):
    """Coefficients s_0..s_{n+1} in the convention
    chi(x) = sum_i (-1)^i s_i x^{n+1-i}; s_0 = s_{n+1} = 1 and the list
    is self-inversive (s_i = conj(s_{n+1-i})) for group elements."""
    c = np.poly(_matrix(A))
    signs = (-1.0) ** np.arange(ctx.n + 2)
    return signs * c


def self_inversive_residual(s):
    return float(np.max(np.abs(s - np.conj(s[::-1]))))


def trace_tuple(A, ctx):
    """(tr A, tr A^2, ..., tr A^floor((n+1)/2))."""
    M = _matrix(A)
    k_max = (ctx.n + 1) // 2
    values = []
    P = np.eye(ctx.n + 1, dtype=complex)
    for _ in range(k_max):
        P = P @ M
        values.append(complex(np.trace(P)))
    return TraceTuple(tuple(values))


def classify_isometry(A, ctx, tol=EPS_EIG):
    """'loxodromic' when some eigenvalue modulus exceeds 1 + tol."""
    vals = np.linalg.eigvals(_matrix(A))
    max_mod = float(np.max(np.abs(vals)))
    if abs(max_mod - (1.0 + tol)) < tol / 2:
        raise MarginalClassificationError(
            f"largest eigenvalue modulus {max_mod} sits on the decision "
            "boundary; override tol to decide", max_modulus=max_mod)
    if max_mod > 1.0 + tol:
        return "loxodromic"
    return "nonLoxodromic"


def _split_eigenvalues(vals, tol=EPS_EIG):
    i_max = int(np.argmax(np.abs(vals)))
    i_min = int(np.argmin(np.abs(vals)))
    unit = [i for i in range(len(vals)) if i not in (i_max, i_min)]
    return i_max, i_min, unit


def _cluster_unit_eigenvalues(vals, unit_idx, cluster_tol=EPS_CLUSTER):
    """Group unit-circle eigenvalues; returns clusters as index lists,
    ordered by ascending representative angle in (-pi, pi]."""
    order = sorted(unit_idx, key=lambda i: wrap_angle(float(np.angle(vals[i]))))
    clusters = []
    for i in order:
        if clusters and abs(vals[i] - vals[clusters[-1][-1]]) <= cluster_tol:
            clusters[-1].append(i)
        else:
            clusters.append([i])
    # wrap-around: first and last cluster may straddle the branch cut
    if len(clusters) >= 2 and abs(vals[clusters[0][0]] - vals[clusters[-1][-1]]) <= cluster_tol:
        clusters[-1].extend(clusters[0])
        clusters = clusters[1:]
    for a, b in zip(clusters, clusters[1:]):
        gap = abs(vals[a[-1]] - vals[b[0]])
        if cluster_tol < gap < 10 * cluster_tol:
            raise ClusterAmbiguityError(
                f"cluster gap {gap:.3g} is within a decade of the merge "
                f"threshold {cluster_tol:.3g}")
    return clusters


def eigen_structure(A, ctx, tol=EPS_EIG, cluster_tol=EPS_CLUSTER):
    if classify_isometry(A, ctx, tol) != "loxodromic":
        raise NotLoxodromicError("element is not loxodromic")
    vals = np.linalg.eigvals(_matrix(A))
    i_max, i_min, unit = _split_eigenvalues(vals, tol)
    r = math.sqrt(float(abs(vals[i_max]) / abs(vals[i_min])))
    theta = wrap_angle(float(np.angle(vals[i_max])))
    clusters = _cluster_unit_eigenvalues(vals, unit, cluster_tol)
    phis = []
    cluster_info = []
    for cl in clusters:
        phi = wrap_angle(float(np.angle(np.mean(vals[cl] / np.abs(vals[cl])))))
        phis.extend([phi] * len(cl))
        cluster_info.append((phi, len(cl)))
    total = wrap_angle(2.0 * theta + sum(phis))
    if abs(total) > 1e-8:
        raise NotLoxodromicError(
            f"eigenvalue angles violate the determinant constraint by {total:.3g}")
    return EigenStructure(r=r, theta=theta, phis=tuple(phis),
                          clusters=tuple(cluster_info))


def multiplicity(A, ctx, tol=EPS_EIG, cluster_tol=EPS_CLUSTER):
    st = eigen_structure(A, ctx, tol, cluster_tol)
    return Multiplicity(parts=tuple(count for _, count in st.clusters))


def _phase_pin(v, scale_tol=1e-8):
    """Divide out the phase of the first significant coordinate."""
    norm = float(np.linalg.norm(v))
    for z in v:
        if abs(z) > scale_tol * norm:
            return v * (abs(z) / z)
    return v


def eigenframe(A, ctx, tol=EPS_EIG, cluster_tol=EPS_CLUSTER):
    """Normalized eigenbasis (attracting, positives, repelling).

    Within each unit-circle eigenvalue cluster an H-orthonormal basis of
    the eigenspace is produced; <a,r> = 1, each positive vector has unit
    norm, phases pinned by the first significant coordinate."""
    M = _matrix(A)
    if classify_isometry(M, ctx, tol) != "loxodromic":
        raise NotLoxodromicError("element is not loxodromic")
    vals, vecs = np.linalg.eig(M)
    i_max, i_min, unit = _split_eigenvalues(vals, tol)

    a = vecs[:, i_max] / np.linalg.norm(vecs[:, i_max])
    a = _phase_pin(a)
    rv = vecs[:, i_min]
    g = herm_product(a, rv, ctx)
    if abs(g) < 1e-12:
        raise NotLoxodromicError("fixed-point pairing degenerate")
    rv = rv * np.conj(1.0 / g)

    clusters = _cluster_unit_eigenvalues(vals, unit, cluster_tol)
    positives = []
    for cl in clusters:
        raw = [vecs[:, i] for i in cl]
        block = h_orthonormalize(raw, ctx, breakdown_tol=1e-8)
        positives.extend(_phase_pin(x) for x in block)

    frame = Eigenframe(attracting=a, positives=positives, repelling=rv)
    F = frame.matrix
    st = eigen_structure(M, ctx, tol, cluster_tol)
    resid = np.linalg.norm(M @ F - F @ st.diagonal())
    if resid > 1e-7 * np.linalg.norm(M):
        raise NotLoxodromicError(
            f"eigenframe reconstruction residual {resid:.3g} too large")
    return frame


def eigenpoints(frame, ctx):
    """Boundary points (a, r, (a-r)/sqrt(2) + x_i); every one is null."""
    a = frame.attracting
    rv = frame.repelling
    pts = [BoundaryPoint(a, ctx), BoundaryPoint(rv, ctx)]
    chord = (a - rv) / SQRT2
    for x in frame.positives:
        pts.append(BoundaryPoint(chord + x, ctx))
    return pts


def sylvester_matrix(f, g):
    """Sylvester matrix of two polynomials given by descending coefficients."""
    f = np.asarray(f, dtype=complex)
    g = np.asarray(g, dtype=complex)
    d1 = len(f) - 1
    d2 = len(g) - 1
    S = np.zeros((d1 + d2, d1 + d2), dtype=complex)
    for i in range(d2):
        S[i, i:i + d1 + 1] = f
    for i in range(d1):
        S[d2 + i, i:i + d2 + 1] = g
    return S


def resultant(f, g):
    return complex(np.linalg.det(sylvester_matrix(f, g)))


def eigenvalue_gap_regular(A, tol=EPS_EIG):
    """Independent oracle: all eigenvalues pairwise distinct beyond tol."""
    vals = np.linalg.eigvals(_matrix(A))
    m = len(vals)
    gap = min(abs(vals[i] - vals[j]) for i in range(m) for j in range(i + 1, m))
    return gap > tol


EPS_RES_SING = 1e-11


def is_regular(A, ctx, tol=EPS_RES, sing_tol=EPS_RES_SING,
               check_consistent=False):
    """Resultant-sign regularity test; returns (regular, resultant value).

    R = Res(chi, chi') vanishes exactly at repeated roots; numerically
    this is detected through the smallest singular value of the Sylvester
    matrix (ratio <= sing_tol means singular), since the magnitude of R
    itself shrinks with the product of all root gaps and admits no robust
    absolute threshold.  On a nonsingular Sylvester matrix, regular iff
    Re(R) < 0 with |Im R| <= tol * |R|.  With check_consistent=True,
    disagreement with the eigenvalue-gap oracle raises a diagnostic."""
    s = char_poly(A, ctx)
    f = ((-1.0) ** np.arange(ctx.n + 2)) * s   # back to plain descending coeffs
    fp = np.polyder(f)
    S = sylvester_matrix(f, fp)
    R = complex(np.linalg.det(S))
    sv = np.linalg.svd(S, compute_uv=False)
    if sv[-1] <= sing_tol * sv[0]:
        regular = False
    else:
        if abs(R.imag) > tol * abs(R):
            raise InconsistentRegularityError(
                f"resultant has relative imaginary part {abs(R.imag) / abs(R):.3g}")
        regular = R.real < 0
    if check_consistent and regular != eigenvalue_gap_regular(A):
        raise InconsistentRegularityError(
            f"resultant sign ({R}) disagrees with the eigenvalue-gap oracle")
    return regular, R


def same_element_class(A, A_prime, ctx, tol=1e-8):
    """Conjugacy test for loxodromic elements via trace tuples."""
    t1 = trace_tuple(A, ctx).values
    t2 = trace_tuple(A_prime, ctx).values
    return all(abs(u - v) <= tol * max(1.0, abs(u)) for u, v in zip(t1, t2))


def random_eigenvalue_data(n, rng, r_range=(1.3, 3.0), parts=None,
                           min_separation=0.25):
    """Random (r, theta, phis) satisfying the angle constraint."""
    if parts is None:
        parts = (1,) * (n - 1)
    assert sum(parts) == n - 1
    r = float(rng.uniform(*r_range))
    k = len(parts)
    for _ in range(256):
        base = sorted(float(rng.uniform(-math.pi, math.pi)) for _ in range(k))
        ok = all(abs(wrap_angle(b - a)) > min_separation
                 for a, b in zip(base, base[1:]))
        if k >= 2:
            ok = ok and abs(wrap_angle(base[0] - base[-1])) > min_separation
        if ok:
            break
    phis = []
    for phi, m in zip(base, parts):
        phis.extend([phi] * m)
    # both roots of 2*theta = -sum(phis) mod 2pi are valid; pick one at random
    theta = wrap_angle(-0.5 * sum(phis) + (math.pi if rng.integers(2) else 0.0))
    return r, theta, phis


def random_loxodromic(n, seed=None, rng=None, parts=None, r_range=(1.3, 3.0)):
    """Seeded random loxodromic element with the requested multiplicity."""
    ctx = FormContext(n)
    if rng is None:
        rng = np.random.default_rng(seed)
    r, theta, phis = random_eigenvalue_data(n, rng, r_range, parts)
    E = EigenStructure(r=r, theta=theta, phis=tuple(phis),
                       clusters=tuple()).diagonal()
    C = random_su(n, rng=rng)
    A = C.matrix @ E @ inverse_in_group(C, ctx)
    return Isometry.certify(A, ctx, tol=1e-8)
