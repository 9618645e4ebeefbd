"""Operator serialization.

Two equivalent wire formats for complex square matrices, both
bit-exact on round-trip:

* JSON object ``{"dim": d, "re": [[...]], "im": [[...]]}``
* packed binary: an 8-byte little-endian dimension header followed by
  row-major interleaved re/im float64 pairs, little-endian.
"""

from __future__ import annotations

import json
import struct

import numpy as np

from .errors import InvalidInputError
from .operators import complex_matrix

_HEADER = struct.Struct("<q")


def matrix_to_json(a) -> str:
    m = complex_matrix(a)
    return json.dumps(
        {"dim": m.shape[0], "re": m.real.tolist(), "im": m.imag.tolist()},
        separators=(",", ":"),
    )


def matrix_from_json(text: str) -> np.ndarray:
    try:
        obj = json.loads(text)
        dim = int(obj["dim"])
        re = np.asarray(obj["re"], dtype=float)
        im = np.asarray(obj["im"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidInputError(f"malformed operator JSON: {exc}") from exc
    if re.shape != (dim, dim) or im.shape != (dim, dim):
        raise InvalidInputError(
            f"operator JSON blocks have shape {re.shape}/{im.shape}, expected ({dim},{dim})"
        )
    return complex_matrix(re + 1j * im)


def matrix_to_bytes(a) -> bytes:
    m = complex_matrix(a)
    dim = m.shape[0]
    inter = np.empty((dim, dim, 2), dtype="<f8")
    inter[..., 0] = m.real
    inter[..., 1] = m.imag
    return _HEADER.pack(dim) + inter.tobytes()


def matrix_from_bytes(blob: bytes) -> np.ndarray:
    if len(blob) < _HEADER.size:
        raise InvalidInputError("binary operator too short for header")
    (dim,) = _HEADER.unpack_from(blob)
    expected = _HEADER.size + 16 * dim * dim
    if dim < 1 or len(blob) != expected:
        raise InvalidInputError(
            f"binary operator length {len(blob)} inconsistent with dim {dim}"
        )
    inter = np.frombuffer(blob, dtype="<f8", offset=_HEADER.size).reshape(dim, dim, 2)
    return complex_matrix(inter[..., 0] + 1j * inter[..., 1])
