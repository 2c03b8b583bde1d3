"""JSON wire format: complex scalars as [re, im], vectors as arrays of
scalars, matrices as arrays of rows.  Serialization is deterministic
(sorted keys, fixed separators) so identical inputs give identical bytes.
"""

from __future__ import annotations

import json

import numpy as np


def encode_complex(z):
    z = complex(z)
    return [z.real, z.imag]


def decode_complex(obj):
    if isinstance(obj, (int, float)):
        return complex(obj)
    if isinstance(obj, list) and len(obj) == 2:
        return complex(float(obj[0]), float(obj[1]))
    raise ValueError(f"not a complex scalar: {obj!r}")


def encode_vector(v):
    return [encode_complex(z) for z in np.asarray(v, dtype=complex)]


def decode_vector(obj):
    return np.array([decode_complex(z) for z in obj], dtype=complex)


def encode_matrix(M):
    return [encode_vector(row) for row in np.asarray(M, dtype=complex)]


def decode_matrix(obj):
    M = np.array([[decode_complex(z) for z in row] for row in obj],
                 dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"not a square matrix: shape {M.shape}")
    return M


def encode_invariant_vector(iv):
    return {
        "angular": iv.angular,
        "cross": [{"k": e.k, "j": e.j, "value": encode_complex(e.value)}
                  for e in iv.cross],
    }


def encode_eigen_structure(st):
    return {"r": st.r, "theta": st.theta, "phis": list(st.phis)}


def encode_profile(profile):
    return {
        "tracesA": [encode_complex(t) for t in profile.traces_a],
        "tracesB": [encode_complex(t) for t in profile.traces_b],
        "multA": list(profile.mult_a),
        "multB": list(profile.mult_b),
        "flags": profile.flags,
        "angular": profile.angular,
        "invariants": encode_invariant_vector(profile.invariants),
        "convention": profile.convention,
        "t": profile.t,
    }


def encode_tuple(points):
    return encode_matrix(points.lifts().T)


def encode_verdict(v):
    out = {"verdict": v.verdict, "stage": v.stage}
    if v.conjugator is not None:
        out["conjugator"] = encode_matrix(v.conjugator.matrix)
    if v.residual is not None:
        out["residual"] = v.residual
    return out


def dumps(obj):
    """Deterministic serialization (byte-identical for equal inputs)."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"),
                      allow_nan=False)


def loads(text):
    return json.loads(text)
