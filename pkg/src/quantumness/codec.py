"""JSON encoding shared by configs and reports.

Complex scalars are ``[re, im]`` pairs; matrices are row-major nested lists
of such pairs.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import SchemaViolation, ValidationError
from .opalg import DensityMatrix, HermitianOperator, make_hermitian, make_pure_state


def encode_complex(z) -> list[float]:
    z = complex(z)
    return [z.real, z.imag]


def decode_complex(pair) -> complex:
    if isinstance(pair, (int, float)) and not isinstance(pair, bool):
        return complex(pair)
    if not (isinstance(pair, (list, tuple)) and len(pair) == 2):
        raise SchemaViolation(f"complex scalar must be [re, im], got {pair!r}")
    re, im = pair
    if not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in (re, im)):
        raise SchemaViolation(f"complex scalar must hold two numbers, got {pair!r}")
    return complex(re, im)


def encode_vector(v) -> list[list[float]]:
    return [encode_complex(z) for z in np.asarray(v).ravel()]


def decode_vector(data) -> np.ndarray:
    if not isinstance(data, list) or not data:
        raise SchemaViolation("vector must be a non-empty list of [re, im] pairs")
    return np.array([decode_complex(z) for z in data], dtype=np.complex128)


def encode_matrix(m) -> list[list[list[float]]]:
    m = np.asarray(m)
    return [[encode_complex(z) for z in row] for row in m]


def decode_matrix(data) -> np.ndarray:
    if not isinstance(data, list) or not data or not all(isinstance(r, list) for r in data):
        raise SchemaViolation("matrix must be a non-empty list of rows")
    widths = {len(r) for r in data}
    if len(widths) != 1:
        raise SchemaViolation("matrix rows have different lengths")
    return np.array([[decode_complex(z) for z in row] for row in data], dtype=np.complex128)


def read_json(path) -> dict:
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(str(path))
    try:
        return json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise SchemaViolation(f"{path}: invalid JSON ({exc})") from exc


def pair_from_dict(d: dict) -> tuple[HermitianOperator, HermitianOperator]:
    if not isinstance(d, dict) or "a" not in d or "b" not in d:
        raise SchemaViolation('pair file needs keys "a" and "b"')
    return make_hermitian(decode_matrix(d["a"])), make_hermitian(decode_matrix(d["b"]))


def pair_to_dict(a: HermitianOperator, b: HermitianOperator) -> dict:
    return {"a": encode_matrix(a.matrix), "b": encode_matrix(b.matrix)}


def state_from_dict(d: dict) -> DensityMatrix:
    if not isinstance(d, dict):
        raise SchemaViolation("state file must hold an object")
    if "amplitudes" in d:
        return make_pure_state(decode_vector(d["amplitudes"]))
    if "rho" in d:
        return DensityMatrix(decode_matrix(d["rho"]))
    raise SchemaViolation('state file needs "amplitudes" or "rho"')


def observable_from_dict(d: dict) -> HermitianOperator:
    if isinstance(d, dict):
        for key in ("observable", "x", "matrix"):
            if key in d:
                return make_hermitian(decode_matrix(d[key]))
        raise SchemaViolation('observable file needs key "observable"')
    return make_hermitian(decode_matrix(d))


def parse_amplitudes(text: str) -> np.ndarray:
    """Parse ``'[re,im],[re,im]'`` (outer brackets optional)."""
    text = text.strip()
    if not text.startswith("[["):
        text = f"[{text}]"
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"cannot parse amplitudes {text!r}") from exc
    return decode_vector(data)
