"""Command-line surface over a JSON wire format.

Exit codes: 0 success, 1 parse error, 2 invalid matrix, 3 precondition
failure, 4 undetermined verdict.  Identical invocations (including seed)
produce byte-identical output.
"""

from __future__ import annotations

import os
import sys

import click
import numpy as np

from . import jsonio
from .errors import (
    CxhypError,
    DegenerateConfigurationError,
    DimensionError,
    InvalidPairError,
    NormalizationError,
    NotInGroupError,
    NotLoxodromicError,
)
from .form import FormContext, Isometry, su_residuals
from .loxodromic import (
    char_poly,
    classify_isometry,
    eigen_structure,
    is_regular,
    multiplicity,
    random_loxodromic,
    trace_tuple,
)
from .pairs import (
    canonical_eigenpoint,
    make_pair,
    normalize_good_I,
    normalize_nonsingular,
    pair_flags,
    pairs_conjugate,
    random_nonsingular_pair,
    random_pair,
    reference_eigenpoint,
    reference_invariants,
)

EXIT_PARSE = 1
EXIT_INVALID_MATRIX = 2
EXIT_PRECONDITION = 3
EXIT_UNDETERMINED = 4


class CliFailure(Exception):
    def __init__(self, code, payload):
        self.code = code
        self.payload = payload


def _emit(obj, output):
    text = jsonio.dumps(obj) + "\n"
    if output:
        with open(output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _fail(code, message, **extra):
    raise CliFailure(code, {"error": message, **extra})


def _load_json(path, inline):
    if inline is not None:
        text = inline
    elif path is not None:
        try:
            with open(path) as fh:
                text = fh.read()
        except OSError as exc:
            _fail(EXIT_PARSE, f"cannot read {path}: {exc}")
    else:
        _fail(EXIT_PARSE, "no input given (positional path or --inline)")
    try:
        return jsonio.loads(text)
    except ValueError as exc:
        _fail(EXIT_PARSE, f"invalid JSON: {exc}")


def _decode_matrix(obj, n):
    try:
        M = jsonio.decode_matrix(obj)
    except (ValueError, TypeError) as exc:
        _fail(EXIT_PARSE, f"invalid matrix: {exc}")
    if n is not None and M.shape[0] != n + 1:
        _fail(EXIT_PARSE,
              f"matrix size {M.shape[0]} does not match n={n}")
    return M


def _certify(M, tol):
    ctx = FormContext(M.shape[0] - 1)
    try:
        return Isometry.certify(M, ctx, tol), ctx
    except NotInGroupError as exc:
        form_res, det_res = su_residuals(M, ctx)
        _fail(EXIT_INVALID_MATRIX, "matrix is not in the group",
              formResidual=form_res, detResidual=det_res)


def _default_tol(tol):
    if tol is not None:
        return tol
    env = os.environ.get("CXHYP_TOL")
    if env:
        try:
            return float(env)
        except ValueError:
            _fail(EXIT_PARSE, f"invalid CXHYP_TOL value: {env!r}")
    return 1e-9


def _classify_report(A, ctx):
    kind = classify_isometry(A, ctx)
    report = {"type": kind}
    if kind == "loxodromic":
        st = eigen_structure(A, ctx)
        regular, R = is_regular(A, ctx)
        report.update({
            "r": st.r,
            "theta": st.theta,
            "phis": list(st.phis),
            "regular": bool(regular),
            "resultant": jsonio.encode_complex(R),
            "multiplicity": list(multiplicity(A, ctx).parts),
            "charPoly": [jsonio.encode_complex(s)
                         for s in char_poly(A, ctx)],
            "traces": [jsonio.encode_complex(t)
                       for t in trace_tuple(A, ctx).values],
        })
    return report


def _run(func):
    try:
        func()
    except CliFailure as exc:
        sys.stdout.write(jsonio.dumps(exc.payload) + "\n")
        sys.exit(exc.code)
    except (NotLoxodromicError, InvalidPairError, NormalizationError,
            DegenerateConfigurationError) as exc:
        sys.stdout.write(jsonio.dumps({"error": str(exc)}) + "\n")
        sys.exit(EXIT_PRECONDITION)
    except (CxhypError, ValueError, DimensionError) as exc:
        sys.stdout.write(jsonio.dumps({"error": str(exc)}) + "\n")
        sys.exit(EXIT_PARSE)


@click.group()
def main():
    """Classification and conjugacy tools for loxodromic pairs."""


@main.command()
@click.argument("input_path", required=False)
@click.option("--inline", default=None, help="inline matrix JSON")
@click.option("--n", type=int, default=None)
@click.option("--tol", type=float, default=None)
@click.option("--output", default=None)
def classify(input_path, inline, n, tol, output):
    """Type, eigenvalue structure and regularity of one element."""

    def go():
        tol_ = _default_tol(tol)
        M = _decode_matrix(_load_json(input_path, inline), n)
        A, ctx = _certify(M, tol_)
        _emit(_classify_report(A, ctx), output)

    _run(go)


def _load_pair(path_a, path_b, inline, n, tol):
    if inline is not None:
        obj = _load_json(None, inline)
        if not (isinstance(obj, dict) and "A" in obj and "B" in obj):
            _fail(EXIT_PARSE, 'inline pair JSON needs keys "A" and "B"')
        obj_a, obj_b = obj["A"], obj["B"]
    else:
        obj_a = _load_json(path_a, None)
        obj_b = _load_json(path_b, None)
    Ma = _decode_matrix(obj_a, n)
    Mb = _decode_matrix(obj_b, n)
    if Ma.shape != Mb.shape:
        _fail(EXIT_PARSE, "pair matrices have different sizes")
    A, ctx = _certify(Ma, tol)
    B, _ = _certify(Mb, tol)
    return A, B, ctx


@main.command()
@click.argument("input_a", required=False)
@click.argument("input_b", required=False)
@click.option("--inline", default=None, help='inline JSON {"A":…,"B":…}')
@click.option("--mode", default="reference",
              type=click.Choice(["reference", "canonical", "nonsingular",
                                 "goodI"]))
@click.option("--n", type=int, default=None)
@click.option("--tol", type=float, default=None)
@click.option("--seed", type=int, default=0)
@click.option("--output", default=None)
def pair(input_a, input_b, inline, mode, n, tol, seed, output):
    """Profile and normalized boundary tuple of a loxodromic pair."""

    def go():
        tol_ = _default_tol(tol)
        A, B, ctx = _load_pair(input_a, input_b, inline, n, tol_)
        p = make_pair(A, B, ctx)
        out = {"mode": mode, "convention": p.convention}
        if mode == "reference":
            profile = reference_invariants(p, ctx, seed=seed)
            ref = reference_eigenpoint(p, ctx, seed=seed)
            out["profile"] = jsonio.encode_profile(profile)
            out["points"] = jsonio.encode_tuple(ref.points)
            out["relabelMap"] = list(ref.relabel_map)
        elif mode == "canonical":
            can = canonical_eigenpoint(p, ctx)
            out["convention"] = can.convention
            out["points"] = jsonio.encode_tuple(can.points)
            out["relabelMap"] = list(can.relabel_map)
            out["constraintResidual"] = can.constraint_residual
        elif mode == "nonsingular":
            try:
                pts = normalize_nonsingular(p, ctx)
            except NormalizationError as exc:
                _fail(EXIT_PRECONDITION, str(exc),
                      flags=pair_flags(p, ctx))
            out["points"] = jsonio.encode_tuple(pts)
        else:
            try:
                ref = normalize_good_I(p, ctx)
            except NormalizationError as exc:
                _fail(EXIT_PRECONDITION, str(exc),
                      flags=pair_flags(p, ctx))
            out["points"] = jsonio.encode_tuple(ref.points)
            out["torusTag"] = ref.torus_tag
        _emit(out, output)

    _run(go)


@main.command("conjugate-test")
@click.argument("input_1", required=False)
@click.argument("input_2", required=False)
@click.option("--inline", default=None,
              help='inline JSON {"pair1":{"A":…,"B":…},"pair2":{…}}')
@click.option("--n", type=int, default=None)
@click.option("--tol", type=float, default=None)
@click.option("--seed", type=int, default=0)
@click.option("--budget", type=int, default=256)
@click.option("--output", default=None)
def conjugate_test(input_1, input_2, inline, n, tol, seed, budget, output):
    """Decide whether two pairs are conjugate; exit 4 when undetermined."""

    def go():
        tol_ = _default_tol(tol)
        if inline is not None:
            obj = _load_json(None, inline)
            if not (isinstance(obj, dict) and "pair1" in obj
                    and "pair2" in obj):
                _fail(EXIT_PARSE,
                      'inline JSON needs keys "pair1" and "pair2"')
            specs = [obj["pair1"], obj["pair2"]]
        else:
            specs = [_load_json(input_1, None), _load_json(input_2, None)]
        pairs = []
        ctx = None
        for spec_ in specs:
            if not (isinstance(spec_, dict) and "A" in spec_
                    and "B" in spec_):
                _fail(EXIT_PARSE, 'each pair needs keys "A" and "B"')
            A, ctx = _certify(_decode_matrix(spec_["A"], n), tol_)
            B, _ = _certify(_decode_matrix(spec_["B"], n), tol_)
            pairs.append(make_pair(A, B, ctx))
        verdict = pairs_conjugate(pairs[0], pairs[1], ctx,
                                  budget=budget, seed=seed)
        _emit(jsonio.encode_verdict(verdict), output)
        if verdict.verdict == "undetermined":
            sys.exit(EXIT_UNDETERMINED)

    _run(go)


@main.command()
@click.option("--kind", default="element",
              type=click.Choice(["element", "pair", "nonsingular-pair"]))
@click.option("--n", type=int, required=True)
@click.option("--seed", type=int, default=0)
@click.option("--output", default=None)
def random(kind, n, seed, output):
    """Seeded random instance with its classification report."""

    def go():
        if n < 1:
            _fail(EXIT_PARSE, "n must be >= 1")
        ctx = FormContext(n)
        if kind == "element":
            A = random_loxodromic(n, seed=seed)
            out = {"kind": kind, "n": n, "seed": seed,
                   "matrix": jsonio.encode_matrix(A.matrix),
                   "report": _classify_report(A, ctx)}
        else:
            if kind == "pair":
                p = random_pair(n, seed=seed, ctx=ctx)
            else:
                p = random_nonsingular_pair(n, seed=seed, ctx=ctx)
            out = {"kind": kind, "n": n, "seed": seed,
                   "A": jsonio.encode_matrix(p.A.matrix),
                   "B": jsonio.encode_matrix(p.B.matrix),
                   "flags": pair_flags(p, ctx),
                   "convention": p.convention}
        _emit(out, output)

    _run(go)


if __name__ == "__main__":
    main()
