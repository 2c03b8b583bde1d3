"""Pair-level machinery: joint eigenframes, reference and canonical
boundary tuples, the good-pair and non-singular normalizations, and the
staged conjugacy decision with conjugator construction.

A valid pair is two loxodromic elements with disjoint fixed-point sets.
The pair's boundary tuple is built from both eigenframes; its invariant
vector, together with the trace tuples, separates conjugation orbits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.optimize

from .boundary import (
    BoundaryPoint,
    BoundaryTuple,
    InvariantVector,
    cartan_invariant,
    invariant_vector,
    projective_distance,
    projectively_equal,
    tuples_congruent,
)
from .errors import (
    CollisionError,
    InvalidPairError,
    NormalizationError,
    NotLoxodromicError,
)
from .form import (
    FormContext,
    Isometry,
    _det_phase_fix,
    _matrix,
    herm_product,
    is_su,
)
from .loxodromic import (
    SQRT2,
    Eigenframe,
    classify_isometry,
    eigen_structure,
    eigenframe,
    is_regular,
    multiplicity,
    same_element_class,
    trace_tuple,
)

EPS_PAIR = 1e-8


@dataclass
class LoxodromicPair:
    A: Isometry
    B: Isometry
    frame_a: Eigenframe
    frame_b: Eigenframe
    convention: str   # which cross-element Gram entry was anchored to 1


@dataclass
class ReferenceEigenpoint:
    points: BoundaryTuple
    labels: tuple          # original slot of each emitted point
    relabel_map: tuple     # original slot -> emitted index (shared on collision)
    torus_tag: str = ""

    @property
    def t(self):
        return len(self.points)


@dataclass
class CanonicalEigenpoint:
    points: BoundaryTuple
    labels: tuple
    relabel_map: tuple
    convention: str
    constraint_residual: float


@dataclass
class PairProfile:
    traces_a: tuple
    traces_b: tuple
    mult_a: tuple
    mult_b: tuple
    flags: dict
    angular: float
    invariants: InvariantVector
    convention: str
    t: int


@dataclass
class ConjugacyVerdict:
    verdict: str                 # "yes" | "no" | "undetermined"
    stage: int
    conjugator: Isometry | None = None
    residual: float | None = None


def transport_frame(frame, C):
    M = _matrix(C)
    return Eigenframe(M @ frame.attracting,
                      [M @ x for x in frame.positives],
                      M @ frame.repelling)


def _scale_second(u, v, ctx):
    """Scalar mu with <u, mu*v> = 1."""
    g = herm_product(u, v, ctx)
    return np.conj(1.0 / g), g


def make_pair(A, B, ctx, frame_a=None, frame_b=None, tol=EPS_PAIR):
    """Validate and jointly normalize a loxodromic pair.

    Frames are rescaled so <a_A,r_A> = <a_B,r_B> = <a_A,a_B> = 1, falling
    back to the anchor <r_A,a_B> = 1 when <a_A,a_B> vanishes; the
    convention used is recorded."""
    A = A if isinstance(A, Isometry) else Isometry.certify(A, ctx)
    B = B if isinstance(B, Isometry) else Isometry.certify(B, ctx)
    fa = frame_a.copy() if frame_a is not None else eigenframe(A, ctx)
    fb = frame_b.copy() if frame_b is not None else eigenframe(B, ctx)

    fixed_a = (fa.attracting, fa.repelling)
    fixed_b = (fb.attracting, fb.repelling)
    for u in fixed_a:
        for v in fixed_b:
            if projectively_equal(u, v, tol):
                raise InvalidPairError("elements share a fixed point")

    g_aa = herm_product(fa.attracting, fb.attracting, ctx)
    scale = float(np.linalg.norm(fa.attracting) * np.linalg.norm(fb.attracting))
    if abs(g_aa) > tol * scale:
        anchor_vec, convention = fa.attracting, "aa"
    else:
        g_ra = herm_product(fa.repelling, fb.attracting, ctx)
        if abs(g_ra) <= tol * scale:
            raise NormalizationError("both cross-element anchors vanish")
        anchor_vec, convention = fa.repelling, "ra"
    mu, _ = _scale_second(anchor_vec, fb.attracting, ctx)
    fb.attracting = mu * fb.attracting
    # restore <a_B, r_B> = 1 (linear in the first slot)
    g = herm_product(fb.attracting, fb.repelling, ctx)
    fb.repelling = fb.repelling * np.conj(1.0 / g)
    return LoxodromicPair(A=A, B=B, frame_a=fa, frame_b=fb,
                          convention=convention)


def _chain_point(frame, idx):
    return (frame.attracting - frame.repelling) / SQRT2 + frame.positives[idx]


def _frame_points(frame):
    pts = [frame.attracting, frame.repelling]
    pts += [_chain_point(frame, i) for i in range(len(frame.positives))]
    return pts


def _canonical_order(pts_a, pts_b):
    """(p1, p2, q1, q2, p3..p_{n+1}, q3..q_{n+1}) with slot labels."""
    out = [("A", 0, pts_a[0]), ("A", 1, pts_a[1]),
           ("B", 0, pts_b[0]), ("B", 1, pts_b[1])]
    out += [("A", i, pts_a[i]) for i in range(2, len(pts_a))]
    out += [("B", i, pts_b[i]) for i in range(2, len(pts_b))]
    return out


def _dedupe(labelled, ctx, tol):
    """Collapse projectively equal entries, keeping first occurrences."""
    kept = []
    labels = []
    relabel = []
    for _, (side, slot, v) in enumerate(labelled):
        match = None
        for k, w in enumerate(kept):
            if projectively_equal(v, w, tol):
                match = k
                break
        if match is None:
            relabel.append(len(kept))
            labels.append((side, slot))
            kept.append(v)
        else:
            relabel.append(match)
    points = BoundaryTuple([BoundaryPoint(v, ctx) for v in kept])
    return points, tuple(labels), tuple(relabel)


def reference_eigenpoint(pair, ctx, seed=0, max_phase_retries=15,
                         tol=1e-8, torus_tag=""):
    """Ordered boundary tuple of both elements' eigenpoints.

    Cross-element collisions are resolved by rotating the colliding
    positive eigenvector by exp(i*pi/4) (up to 7 deterministic retries,
    then seeded random phases); persistent collisions are collapsed with
    a recorded relabel map."""
    fa = pair.frame_a.copy()
    fb = pair.frame_b.copy()
    rng = np.random.default_rng(seed)
    for attempt in range(max_phase_retries + 1):
        labelled = _canonical_order(_frame_points(fa), _frame_points(fb))
        collision = None
        for i in range(len(labelled)):
            for j in range(i + 1, len(labelled)):
                if projectively_equal(labelled[i][2], labelled[j][2], tol):
                    collision = (labelled[i], labelled[j])
                    break
            if collision:
                break
        if collision is None:
            points, labels, relabel = _dedupe(labelled, ctx, tol)
            return ReferenceEigenpoint(points=points, labels=labels,
                                       relabel_map=relabel,
                                       torus_tag=torus_tag)
        if attempt >= max_phase_retries:
            break
        # rotate a chain point's eigenvector; prefer the first element's
        target = None
        for side, slot, _ in collision:
            if slot >= 2:
                target = (side, slot - 2)
                break
        if target is None:
            # two fixed points colliding contradicts pair validity
            raise CollisionError("fixed-point collision in a valid pair")
        phase = (np.exp(1j * math.pi / 4) if attempt < 7
                 else np.exp(2j * math.pi * rng.random()))
        side, k = target
        frame = fa if side == "A" else fb
        frame.positives[k] = phase * frame.positives[k]
    labelled = _canonical_order(_frame_points(fa), _frame_points(fb))
    points, labels, relabel = _dedupe(labelled, ctx, tol)
    return ReferenceEigenpoint(points=points, labels=labels,
                               relabel_map=relabel, torus_tag=torus_tag)


def pair_flags(pair, ctx):
    reg_a, _ = is_regular(pair.A, ctx)
    reg_b, _ = is_regular(pair.B, ctx)
    regular = reg_a and reg_b
    return {
        "regular": regular,
        "goodI": bool(regular and is_good_pair_I(pair, ctx)),
        "nonSingular": bool(regular and is_nonsingular(pair, ctx)),
    }


def reference_invariants(pair, ctx, seed=0):
    """Trace/multiplicity data plus the invariant vector of the reference
    eigenpoint tuple."""
    ref = reference_eigenpoint(pair, ctx, seed=seed)
    iv = invariant_vector(ref.points, ctx)
    return PairProfile(
        traces_a=trace_tuple(pair.A, ctx).values,
        traces_b=trace_tuple(pair.B, ctx).values,
        mult_a=multiplicity(pair.A, ctx).parts,
        mult_b=multiplicity(pair.B, ctx).parts,
        flags=pair_flags(pair, ctx),
        angular=iv.angular,
        invariants=iv,
        convention=pair.convention,
        t=ref.t,
    )


def canonical_eigenpoint(pair, ctx, tol=1e-9):
    """Boundary tuple in the section normalization with anchor <r_A,a_B>=1,
    ordered (a_A, r_A, chain_A, a_B, r_B, chain_B), with the Gram
    constraints derived from the construction verified."""
    fa = pair.frame_a.copy()
    fb = pair.frame_b.copy()
    g = herm_product(fa.repelling, fb.attracting, ctx)
    scale = float(np.linalg.norm(fa.repelling) * np.linalg.norm(fb.attracting))
    if abs(g) <= EPS_PAIR * scale:
        raise NormalizationError("anchor unavailable: <r_A, a_B> vanishes")
    fb.attracting = np.conj(1.0 / g) * fb.attracting
    h = herm_product(fb.attracting, fb.repelling, ctx)
    fb.repelling = fb.repelling * np.conj(1.0 / h)

    pts_a = _frame_points(fa)
    pts_b = _frame_points(fb)
    n = ctx.n

    resid = 0.0

    def check(u, v, target):
        nonlocal resid
        resid = max(resid, abs(herm_product(u, v, ctx) - target))

    check(fa.attracting, fa.repelling, 1.0)
    check(fb.attracting, fb.repelling, 1.0)
    check(fa.repelling, fb.attracting, 1.0)
    for pts in (pts_a, pts_b):
        for i in range(2, n + 1):
            check(pts[0], pts[i], -1.0 / SQRT2)
            check(pts[1], pts[i], 1.0 / SQRT2)
            for j in range(2, n + 1):
                if i != j:
                    check(pts[i], pts[j], -1.0)
    if resid > tol:
        raise NormalizationError(
            f"section constraints violated with residual {resid:.3g}")

    labelled = [("A", i, v) for i, v in enumerate(pts_a)]
    labelled += [("B", i, v) for i, v in enumerate(pts_b)]
    points, labels, relabel = _dedupe(labelled, ctx, 1e-8)
    return CanonicalEigenpoint(points=points, labels=labels,
                               relabel_map=relabel, convention="ra",
                               constraint_residual=resid)


def _positive_gram(pair, ctx):
    xa = pair.frame_a.positives
    xb = pair.frame_b.positives
    return np.array([[herm_product(x, y, ctx) for y in xb] for x in xa])


def is_good_pair_I(pair, ctx, tol=EPS_PAIR):
    """Both elements regular, every positive eigenvector of B pairs with
    some positive eigenvector of A, and a perfect matching of nonzero
    pairings exists."""
    reg_a, _ = is_regular(pair.A, ctx)
    reg_b, _ = is_regular(pair.B, ctx)
    if not (reg_a and reg_b):
        return False
    X = _positive_gram(pair, ctx)
    if X.size == 0:
        return True
    mags = np.abs(X)
    if np.any(mags.max(axis=0) <= tol):
        return False
    return _pairing_matching(mags, tol) is not None


def _pairing_matching(mags, tol):
    """Perfect matching on entries above tol, maximizing the product of
    magnitudes; None when no perfect matching exists."""
    big = 1e6
    cost = np.where(mags > tol, -np.log(np.maximum(mags, tol)), big)
    rows, cols = scipy.optimize.linear_sum_assignment(cost)
    if np.any(cost[rows, cols] >= big):
        return None
    perm = np.empty(len(rows), dtype=int)
    perm[rows] = cols
    return perm


def normalize_good_I(pair, ctx, tol=EPS_PAIR):
    """Rescale frames to <a_A,r_A>=<a_B,r_B>=<a_A,r_B>=1 with the matched
    positive pairings made real positive, then pin the residual torus
    freedom by Gram data.  The result is unique up to one global
    unimodular scalar."""
    if not is_good_pair_I(pair, ctx, tol):
        raise NormalizationError("pair is not good (type I)")
    fa = pair.frame_a.copy()
    fb = pair.frame_b.copy()
    X = np.abs(_positive_gram(pair, ctx))
    if X.size:
        perm = _pairing_matching(X, tol)
        fb.positives = [fb.positives[k] for k in perm]

    nu = herm_product(fa.attracting, fb.repelling, ctx)
    if abs(nu) <= tol:
        raise NormalizationError("<a_A, r_B> vanishes")
    fb.repelling = np.conj(1.0 / nu) * fb.repelling
    g = herm_product(fb.attracting, fb.repelling, ctx)
    fb.attracting = (1.0 / g) * fb.attracting
    for i in range(ctx.n - 1):
        h = herm_product(fa.positives[i], fb.positives[i], ctx)
        if abs(h) <= tol:
            raise NormalizationError(f"matched pairing {i + 1} vanishes")
        fb.positives[i] = np.exp(1j * np.angle(h)) * fb.positives[i]

    # pin the scaling-group modulus: |<a_A, a_B>| -> 1
    tag = "goodI"
    c = herm_product(fa.attracting, fb.attracting, ctx)
    if abs(c) > tol:
        s = 1.0 / math.sqrt(abs(c))
    else:
        c2 = (herm_product(fa.positives[0], fb.attracting, ctx)
              if fa.positives else 0.0)
        if abs(c2) > tol:
            s = 1.0 / abs(c2)
        else:
            s = 1.0
            tag = "goodI-unpinned-modulus"
    fa.attracting = s * fa.attracting
    fa.repelling = fa.repelling / s
    fb.attracting = s * fb.attracting
    fb.repelling = fb.repelling / s

    # pin each circle factor's phase relative to the scaling factor
    for i in range(ctx.n - 1):
        h = herm_product(fa.positives[i], fb.attracting, ctx)
        if abs(h) <= 1e-10:
            h = herm_product(fa.positives[i], fb.repelling, ctx)
        if abs(h) > 1e-10:
            rot = np.exp(-1j * np.angle(h))
            fa.positives[i] = rot * fa.positives[i]
            fb.positives[i] = rot * fb.positives[i]

    pinned = LoxodromicPair(A=pair.A, B=pair.B, frame_a=fa, frame_b=fb,
                            convention="goodI")
    return reference_eigenpoint(pinned, ctx, max_phase_retries=0,
                                torus_tag=tag)


def is_nonsingular(pair, ctx, tol=EPS_PAIR):
    """n-2 positive eigenvectors of each element project nontrivially onto
    the other's attracting-repelling plane (vacuous for n = 2)."""
    reg_a, _ = is_regular(pair.A, ctx)
    reg_b, _ = is_regular(pair.B, ctx)
    if not (reg_a and reg_b):
        return False
    n = ctx.n
    if n == 2:
        return True

    def count(frame_from, frame_to):
        hits = 0
        for x in frame_from.positives:
            proj = (abs(herm_product(x, frame_to.attracting, ctx))
                    + abs(herm_product(x, frame_to.repelling, ctx)))
            if proj > tol:
                hits += 1
        return hits

    return (count(pair.frame_a, pair.frame_b) >= n - 2
            and count(pair.frame_b, pair.frame_a) >= n - 2)


def _nonsingular_relabel(pair, ctx, tol):
    """Indices of A's (resp. B's) positive vectors pairing with the other
    element's attracting vector, strongest first; the weakest goes last."""
    def order(frame_from, other_attracting):
        mags = [abs(herm_product(x, other_attracting, ctx))
                for x in frame_from.positives]
        idx = sorted(range(len(mags)), key=lambda i: -mags[i])
        lead, rest = idx[: ctx.n - 2], idx[ctx.n - 2:]
        if any(mags[i] <= tol for i in lead):
            raise NormalizationError(
                "non-singular flags inconsistent: required pairing with the "
                "attracting vector vanishes")
        return sorted(lead) + rest

    return (order(pair.frame_a, pair.frame_b.attracting),
            order(pair.frame_b, pair.frame_a.attracting))


def normalize_nonsingular(pair, ctx, rng=None, tol=1e-8):
    """The seven-step lift normalization of a non-singular pair.

    Starting lifts may be scrambled by arbitrary nonzero scalars (rng);
    the output boundary tuple (a_A, r_A, chain_A[:n-2], a_B, r_B,
    chain_B[:n-2]) is unique up to one global unimodular scalar."""
    if not is_nonsingular(pair, ctx):
        raise NormalizationError("pair is not non-singular (or not regular)")
    ord_a, ord_b = _nonsingular_relabel(pair, ctx, tol)
    fa = pair.frame_a.copy()
    fb = pair.frame_b.copy()
    fa.positives = [fa.positives[i] for i in ord_a]
    fb.positives = [fb.positives[i] for i in ord_b]

    if rng is not None:
        def scramble(v):
            return v * ((0.5 + 1.5 * rng.random())
                        * np.exp(2j * math.pi * rng.random()))
        fa.attracting = scramble(fa.attracting)
        fa.repelling = scramble(fa.repelling)
        fb.attracting = scramble(fb.attracting)
        fb.repelling = scramble(fb.repelling)
        fa.positives = [scramble(x) for x in fa.positives]
        fb.positives = [scramble(x) for x in fb.positives]

    lam = herm_product(fa.attracting, fa.repelling, ctx)
    mu = herm_product(fb.attracting, fb.repelling, ctx)
    nu = herm_product(fa.attracting, fb.repelling, ctx)
    if min(abs(lam), abs(mu)) <= 1e-12 or abs(nu) <= 1e-12:
        raise NormalizationError("degenerate Gram entry in the seven-step "
                                 "normalization")
    r = [math.sqrt(herm_product(x, x, ctx).real) for x in fa.positives]
    s = [math.sqrt(herm_product(x, x, ctx).real) for x in fb.positives]
    gamma = [herm_product(x, fb.attracting, ctx) for x in fa.positives]
    delta = [herm_product(x, fa.attracting, ctx) for x in fb.positives]
    if abs(gamma[0]) <= 1e-12:
        raise NormalizationError("non-singular flags inconsistent: "
                                 "<x_1A, a_B> vanishes")

    g1 = gamma[0]
    fa.positives[0] = fa.positives[0] / r[0]
    fb.attracting = (r[0] / np.conj(g1)) * fb.attracting
    fb.repelling = (g1 / (r[0] * np.conj(mu))) * fb.repelling
    fa.attracting = (r[0] * mu / (np.conj(g1) * nu)) * fa.attracting
    fa.repelling = (g1 * np.conj(nu)
                    / (r[0] * np.conj(lam) * np.conj(mu))) * fa.repelling
    for i in range(1, len(fa.positives)):
        phase = (np.exp(1j * (np.angle(g1) - np.angle(gamma[i])))
                 if abs(gamma[i]) > 1e-12 else 1.0)
        fa.positives[i] = (phase / r[i]) * fa.positives[i]
    for i in range(len(fb.positives)):
        phase = 1.0
        if abs(delta[i]) > 1e-12:
            phase = np.exp(1j * (np.angle(g1) + np.angle(mu)
                                 - np.angle(nu) - np.angle(delta[i])))
        fb.positives[i] = (phase / s[i]) * fb.positives[i]

    # verify the target conditions
    resid = 0.0
    resid = max(resid, abs(herm_product(fa.attracting, fa.repelling, ctx) - 1))
    resid = max(resid, abs(herm_product(fb.attracting, fb.repelling, ctx) - 1))
    resid = max(resid, abs(herm_product(fa.attracting, fb.repelling, ctx) - 1))
    resid = max(resid, abs(herm_product(fa.positives[0], fb.attracting, ctx) - 1))
    for i in range(ctx.n - 2):
        ga = herm_product(fa.positives[i], fb.attracting, ctx)
        db = herm_product(fb.positives[i], fa.attracting, ctx)
        resid = max(resid, abs(ga.imag), max(0.0, -ga.real),
                    abs(db.imag), max(0.0, -db.real))
    if resid > tol:
        raise NormalizationError(
            f"seven-step normalization failed with residual {resid:.3g}")

    def element_points(frame):
        pts = [frame.attracting, frame.repelling]
        pts += [_chain_point(frame, i) for i in range(ctx.n - 2)]
        return pts

    labelled = [("A", i, v) for i, v in enumerate(element_points(fa))]
    labelled += [("B", i, v) for i, v in enumerate(element_points(fb))]
    points, _, _ = _dedupe(labelled, ctx, 1e-8)
    return points


def global_scalar_deviation(t1, t2):
    """How far two lift tuples are from differing by one unimodular scalar.

    Returns (max per-vector residual, max scalar spread, modulus error)."""
    lifts1 = t1.lifts() if isinstance(t1, BoundaryTuple) else np.asarray(t1)
    lifts2 = t2.lifts() if isinstance(t2, BoundaryTuple) else np.asarray(t2)
    scalars = []
    vec_resid = 0.0
    for v, w in zip(lifts1.T, lifts2.T):
        lam = np.vdot(v, w) / np.vdot(v, v)
        vec_resid = max(vec_resid, float(np.linalg.norm(w - lam * v)
                                         / np.linalg.norm(v)))
        scalars.append(lam)
    spread = max(abs(l - scalars[0]) for l in scalars)
    mod_err = max(abs(abs(l) - 1.0) for l in scalars)
    return vec_resid, float(spread), float(mod_err)


def random_pair(n, seed=None, rng=None, ctx=None, require_regular=True,
                max_attempts=64):
    """Seeded random valid loxodromic pair (both elements regular by
    default)."""
    from .loxodromic import random_loxodromic

    ctx = ctx or FormContext(n)
    if rng is None:
        rng = np.random.default_rng(seed)
    for _ in range(max_attempts):
        A = random_loxodromic(n, rng=rng)
        B = random_loxodromic(n, rng=rng)
        if require_regular and not (is_regular(A, ctx)[0]
                                    and is_regular(B, ctx)[0]):
            continue
        try:
            return make_pair(A, B, ctx)
        except (InvalidPairError, NormalizationError):
            continue
    raise InvalidPairError("random pair generation exhausted its attempts")


def random_nonsingular_pair(n, seed=None, rng=None, ctx=None,
                            max_attempts=128):
    """Rejection-sample random pairs until the non-singular flag holds."""
    ctx = ctx or FormContext(n)
    if rng is None:
        rng = np.random.default_rng(seed)
    for _ in range(max_attempts):
        pair = random_pair(n, rng=rng, ctx=ctx)
        if is_nonsingular(pair, ctx):
            return pair
    raise InvalidPairError(
        "non-singular pair sampling exhausted its attempts")


# ---------------------------------------------------------------------------
# conjugacy decision


def _frame_inverse(F, ctx):
    # frame Gram equals the form matrix, so the inverse is H F* H
    return ctx.H @ F.conj().T @ ctx.H


def _conjugation_residual(C, X1, X2, ctx):
    M = _matrix(C)
    Minv = _frame_inverse(M, ctx) if is_su(M, ctx, 1e-6) else np.linalg.inv(M)
    R = M @ _matrix(X1) @ Minv - _matrix(X2)
    return float(np.linalg.norm(R) / max(1.0, np.linalg.norm(_matrix(X2))))


def _verify_conjugator(C, p1, p2, ctx, tol):
    if not is_su(_matrix(C), ctx, 1e-6):
        return None
    ra = _conjugation_residual(C, p1.A, p2.A, ctx)
    rb = _conjugation_residual(C, p1.B, p2.B, ctx)
    resid = max(ra, rb)
    if resid <= tol:
        return resid
    return None


def _ratio_solve(Bt1, Bt2, tol=1e-6):
    """Diagonal scalars m (up to one global factor) with
    m_i Bt1_{ij} / m_j = Bt2_{ij} on all significant entries.

    Returns (m, status) with status in {"ok", "inconsistent", "disconnected"}.
    """
    n1 = Bt1.shape[0]
    scale = max(float(np.abs(Bt1).max()), float(np.abs(Bt2).max()), 1e-30)
    hi = 1e-7 * scale
    lo = 1e-9 * scale
    sig1 = np.abs(Bt1) > hi
    sig2 = np.abs(Bt2) > hi
    if np.any(sig1 & (np.abs(Bt2) < lo)) or np.any(sig2 & (np.abs(Bt1) < lo)):
        return None, "inconsistent"
    both = sig1 & sig2
    np.fill_diagonal(both, False)

    ratio = np.zeros_like(Bt1)
    ratio[both] = Bt2[both] / Bt1[both]   # = m_i / m_j

    m = np.full(n1, np.nan + 0j)
    m[0] = 1.0
    frontier = [0]
    solved = {0}
    while frontier:
        i = frontier.pop()
        for j in range(n1):
            if j in solved:
                continue
            if both[i, j]:
                m[j] = m[i] / ratio[i, j]
                solved.add(j)
                frontier.append(j)
            elif both[j, i]:
                m[j] = m[i] * ratio[j, i]
                solved.add(j)
                frontier.append(j)
    if len(solved) < n1:
        return None, "disconnected"
    for i in range(n1):
        for j in range(n1):
            if both[i, j]:
                err = abs(m[i] / m[j] - ratio[i, j]) / max(1.0, abs(ratio[i, j]))
                if err > tol:
                    return None, "inconsistent"
    return m, "ok"


def _fit_centralizer_scalar(m, n1, tol=1e-6):
    """Global factor c making diag(c*m) a form-preserving unit-determinant
    centralizer element, or None with a severity flag."""
    mids = np.abs(m[1:-1])
    if mids.size and (mids.max() - mids.min()) > tol * mids.max():
        return None, (mids.max() - mids.min()) / mids.max()
    corner = np.conj(m[0]) * m[-1]
    if corner.real <= 0 or abs(corner.imag) > tol * abs(corner):
        return None, 1.0
    mod_c = 1.0 / math.sqrt(corner.real)
    if mids.size:
        err = abs(mod_c - 1.0 / mids.mean()) / mod_c
        if err > tol:
            return None, err
    prod = np.prod(m)
    c = (1.0 / prod) ** (1.0 / n1)
    mod_err = abs(abs(c) - mod_c) / mod_c
    if mod_err > tol:
        return None, mod_err
    return c, 0.0


def _block_slices(parts):
    sizes = [1] + list(parts) + [1]
    slices = []
    start = 0
    for s in sizes:
        slices.append(slice(start, start + s))
        start += s
    return slices


def _stage3_candidates(Bt1, Bt2, parts, rng, budget):
    """Nullspace of M -> M Bt1 - Bt2 M over centralizer-shaped block
    diagonal M, as (basis matrices, smallest nontrivial singular ratio)."""
    n1 = Bt1.shape[0]
    slices = _block_slices(parts)
    params = []
    for sl in slices:
        for i in range(sl.start, sl.stop):
            for j in range(sl.start, sl.stop):
                params.append((i, j))
    K = np.zeros((n1 * n1, len(params)), dtype=complex)
    for col, (i, j) in enumerate(params):
        E = np.zeros((n1, n1), dtype=complex)
        E[i, j] = 1.0
        K[:, col] = (E @ Bt1 - Bt2 @ E).ravel()
    _, sv, vh = np.linalg.svd(K)
    sv = np.concatenate([sv, np.zeros(max(0, len(params) - len(sv)))])
    s0 = sv[0] if sv[0] > 0 else 1.0
    null_cols = [k for k in range(len(params)) if sv[k] <= 1e-8 * s0]
    basis = []
    for k in null_cols:
        M = np.zeros((n1, n1), dtype=complex)
        for col, (i, j) in enumerate(params):
            M[i, j] = vh[k, col].conj()
        basis.append(M)
    min_ratio = min((sv[k] / s0 for k in range(len(params))
                     if k not in null_cols), default=1.0)
    smallest = sv[len(params) - 1] / s0 if len(params) <= len(sv) else 0.0
    return basis, smallest


def _try_su_scale(M0, ctx, tol=1e-6):
    """Scale a candidate intertwiner into the group, or None."""
    S = M0.conj().T @ ctx.H @ M0
    s = complex(np.trace(S @ ctx.H)) / (ctx.n + 1)
    if s.real <= 0 or abs(s.imag) > tol * abs(s):
        return None
    if np.linalg.norm(S - s * ctx.H) > 1e-6 * abs(s) * (ctx.n + 1):
        return None
    M = M0 / math.sqrt(s.real)
    M = _det_phase_fix(M)
    if not is_su(M, ctx, 1e-6):
        return None
    return M


def pairs_conjugate(p1, p2, ctx, tol=1e-7, budget=256, seed=0):
    """Staged conjugacy decision for two loxodromic pairs.

    Stage 0 compares traces and multiplicities (necessary conditions).
    Stage 1 (regular first elements) reduces to a diagonal-centralizer
    ratio system.  Stage 2 compares pinned normalized tuples for good
    pairs.  Stage 3 solves for an intertwiner in the block centralizer,
    with seeded sampling when the solution space has dimension > 1;
    exhaustion yields "undetermined", never a false "no"."""
    for x1, x2 in ((p1.A, p2.A), (p1.B, p2.B)):
        if not same_element_class(x1, x2, ctx):
            return ConjugacyVerdict("no", stage=0)
        if multiplicity(x1, ctx).parts != multiplicity(x2, ctx).parts:
            return ConjugacyVerdict("no", stage=0)

    F1 = p1.frame_a.matrix
    F2 = p2.frame_a.matrix
    Bt1 = _frame_inverse(F1, ctx) @ _matrix(p1.B) @ F1
    Bt2 = _frame_inverse(F2, ctx) @ _matrix(p2.B) @ F2

    reg1, _ = is_regular(p1.A, ctx)
    reg2, _ = is_regular(p2.A, ctx)
    if reg1 and reg2:
        verdict = _stage1(Bt1, Bt2, F1, F2, p1, p2, ctx, tol)
        if verdict is not None:
            return verdict

    verdict = _stage2(p1, p2, ctx, tol, seed)
    if verdict is not None:
        return verdict

    return _stage3(Bt1, Bt2, F1, F2, p1, p2, ctx, tol, budget, seed)


def _stage1(Bt1, Bt2, F1, F2, p1, p2, ctx, tol):
    """Diagonal ratio propagation; None means 'inconclusive, fall through'."""
    m, status = _ratio_solve(Bt1, Bt2)
    if status == "inconsistent":
        return ConjugacyVerdict("no", stage=1)
    if status == "disconnected":
        # enrich the ratio graph with the squared element's entries
        m, status = _ratio_solve(Bt1 @ Bt1, Bt2 @ Bt2)
        if status != "ok":
            return None
    c, severity = _fit_centralizer_scalar(m, ctx.n + 1)
    if c is None:
        return ConjugacyVerdict("no", stage=1) if severity > 1e-3 else None
    M = np.diag(c * m)
    C = _det_phase_fix(F2 @ M @ _frame_inverse(F1, ctx))
    resid = _verify_conjugator(C, p1, p2, ctx, tol)
    if resid is None:
        return None
    return ConjugacyVerdict("yes", stage=1,
                            conjugator=Isometry(C, certified=True),
                            residual=resid)


def _stage2(p1, p2, ctx, tol, seed):
    try:
        f1 = pair_flags(p1, ctx)
        f2 = pair_flags(p2, ctx)
    except NotLoxodromicError:
        return None
    try:
        if f1["nonSingular"] and f2["nonSingular"]:
            t1 = normalize_nonsingular(p1, ctx)
            t2 = normalize_nonsingular(p2, ctx)
        elif f1["goodI"] and f2["goodI"]:
            t1 = normalize_good_I(p1, ctx).points
            t2 = normalize_good_I(p2, ctx).points
        else:
            return None
        C = tuples_congruent(t1, t2, ctx, tol=1e-6,
                             allow_rank_deficient=True)
    except Exception:
        return None
    if C is None:
        return None
    resid = _verify_conjugator(C.matrix, p1, p2, ctx, tol)
    if resid is None:
        return None
    return ConjugacyVerdict("yes", stage=2, conjugator=C, residual=resid)


def _stage3(Bt1, Bt2, F1, F2, p1, p2, ctx, tol, budget, seed):
    parts = multiplicity(p1.A, ctx).parts
    rng = np.random.default_rng(seed)
    basis, smallest = _stage3_candidates(Bt1, Bt2, parts, rng, budget)
    if not basis:
        if smallest > 1e-3:
            return ConjugacyVerdict("no", stage=3)
        return ConjugacyVerdict("undetermined", stage=3)

    def attempt(M0):
        M = _try_su_scale(M0, ctx)
        if M is None:
            M = _polish_intertwiner(M0, basis, ctx)
        if M is None:
            return None
        C = _det_phase_fix(F2 @ M @ _frame_inverse(F1, ctx))
        resid = _verify_conjugator(C, p1, p2, ctx, tol)
        if resid is None:
            return None
        return ConjugacyVerdict("yes", stage=3,
                                conjugator=Isometry(C, certified=True),
                                residual=resid)

    for M0 in basis:
        out = attempt(M0)
        if out is not None:
            return out
    if len(basis) > 1:
        for _ in range(budget):
            coeffs = rng.standard_normal(len(basis)) \
                + 1j * rng.standard_normal(len(basis))
            M0 = sum(a * M for a, M in zip(coeffs, basis))
            out = attempt(M0)
            if out is not None:
                return out
    return ConjugacyVerdict("undetermined", stage=3)


def _polish_intertwiner(M0, basis, ctx, iterations=12):
    """Alternate Newton steps toward a form-unitary matrix with
    reprojection onto the intertwiner space."""
    flat = np.column_stack([B.ravel() for B in basis])
    Q, _ = np.linalg.qr(flat)
    M = M0 / np.linalg.norm(M0)
    for _ in range(iterations):
        try:
            sharp_inv = np.linalg.inv(ctx.H @ M.conj().T @ ctx.H)
        except np.linalg.LinAlgError:
            return None
        M = 0.5 * (M + sharp_inv)
        v = M.ravel()
        M = (Q @ (Q.conj().T @ v)).reshape(M.shape)
    return _try_su_scale(M, ctx)
