"""JSON schemas for contractions, embedding models and reports.

Complex numbers are ``[re, im]`` pairs, matrices are row-major nested lists
and monomials are exponent vectors. ``A_W`` uses column action on W-basis
coordinates: ``coords(gamma^* w) = A_W @ coords(w)``.
"""

from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path
from typing import Any

import numpy as np

from .contraction import ContractionSpec
from .errors import InvalidInputError
from .jets import monomial_basis
from .linearizer import EmbeddingModel

SCHEMA_VERSION = 1
A_W_CONVENTION = "column action: coords(gamma^* w) = A_W @ coords(w); Psi(gamma z) = A_W^T Psi(z)"


def encode_complex(c) -> list[float]:
    c = complex(c)
    return [c.real, c.imag]


def decode_complex(v, where: str) -> complex:
    if isinstance(v, bool):
        raise InvalidInputError(f"{where}: expected [re, im], got a boolean")
    if isinstance(v, (int, float)):
        return complex(float(v))
    if (not isinstance(v, (list, tuple)) or len(v) != 2
            or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in v)):
        raise InvalidInputError(f"{where}: expected [re, im] pair of numbers, got {v!r}")
    c = complex(float(v[0]), float(v[1]))
    if not (math.isfinite(c.real) and math.isfinite(c.imag)):
        raise InvalidInputError(f"{where}: coefficient is not finite")
    return c


def encode_matrix(M) -> list:
    M = np.atleast_2d(np.asarray(M, dtype=complex))
    return [[encode_complex(x) for x in row] for row in M]


def decode_matrix(rows, where: str, shape=None) -> np.ndarray:
    if not isinstance(rows, list) or not rows or not all(isinstance(r, list) for r in rows):
        raise InvalidInputError(f"{where}: expected a non-empty list of rows")
    if len({len(r) for r in rows}) != 1:
        raise InvalidInputError(f"{where}: rows have different lengths")
    M = np.array([[decode_complex(x, f"{where}[{i}][{j}]") for j, x in enumerate(r)]
                  for i, r in enumerate(rows)], dtype=complex)
    if shape is not None and M.shape != tuple(shape):
        raise InvalidInputError(f"{where}: expected shape {tuple(shape)}, got {M.shape}")
    return M


def _decode_terms(raw, n: int, where: str) -> tuple:
    if not isinstance(raw, list):
        raise InvalidInputError(f"{where}: expected a list of terms")
    terms = []
    for k, t in enumerate(raw):
        here = f"{where}[{k}]"
        if not isinstance(t, dict):
            raise InvalidInputError(f"{here}: expected an object with 'exponents' and 'coeff'")
        for key in ("exponents", "coeff"):
            if key not in t:
                raise InvalidInputError(f"{here}: missing field '{key}'")
        e = t["exponents"]
        if (not isinstance(e, list) or len(e) != n
                or not all(isinstance(x, int) and not isinstance(x, bool) and x >= 0 for x in e)):
            raise InvalidInputError(
                f"{here}.exponents: expected {n} non-negative integers, got {e!r}")
        terms.append((tuple(e), decode_complex(t["coeff"], f"{here}.coeff")))
    return tuple(terms)


def _encode_terms(poly) -> list[dict]:
    return [{"exponents": list(e), "coeff": encode_complex(c)} for e, c in poly]


def spec_from_dict(data: Any) -> ContractionSpec:
    if not isinstance(data, dict):
        raise InvalidInputError("top level: expected a JSON object")
    if "dimension" not in data:
        raise InvalidInputError("missing field 'dimension'")
    n = data["dimension"]
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise InvalidInputError(f"dimension: expected a positive integer, got {n!r}")
    if "components" not in data:
        raise InvalidInputError("missing field 'components'")
    comps = data["components"]
    if not isinstance(comps, list) or len(comps) != n:
        raise InvalidInputError(f"components: expected a list of {n} term lists")
    parsed = tuple(_decode_terms(c, n, f"components[{i}]") for i, c in enumerate(comps))
    inv = data.get("inverse")
    if inv is not None:
        if not isinstance(inv, list) or len(inv) != n:
            raise InvalidInputError(f"inverse: expected a list of {n} term lists")
        inv = tuple(_decode_terms(c, n, f"inverse[{i}]") for i, c in enumerate(inv))
    name = data.get("name", "")
    if not isinstance(name, str):
        raise InvalidInputError("name: expected a string")
    return ContractionSpec(n, parsed, inverse=inv, name=name)


def spec_to_dict(spec: ContractionSpec) -> dict:
    out: dict[str, Any] = {
        "dimension": spec.n,
        "components": [_encode_terms(p) for p in spec.components],
    }
    if spec.inverse is not None:
        out["inverse"] = [_encode_terms(p) for p in spec.inverse]
    if spec.name:
        out["name"] = spec.name
    return out


def load_json(path) -> Any:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise InvalidInputError(f"{p}: cannot read file ({exc.strerror})") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidInputError(
            f"{p}: malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc


def parse_contraction(path) -> ContractionSpec:
    try:
        return spec_from_dict(load_json(path))
    except InvalidInputError as exc:
        msg = str(exc)
        raise InvalidInputError(msg if msg.startswith(str(path)) else f"{path}: {msg}") from exc


def write_contraction(spec: ContractionSpec, path) -> None:
    Path(path).write_text(dumps(spec_to_dict(spec)))


def model_to_dict(model: EmbeddingModel) -> dict:
    """Psi as explicit term lists (every basis monomial with a nonzero coefficient)."""
    ex = model.basis.exponents
    psi = [[{"exponents": list(ex[k]), "coeff": encode_complex(c)}
            for k, c in enumerate(model.B[:, j]) if c != 0] for j in range(model.N)]
    return {
        "kind": "embedding-model",
        "schema_version": SCHEMA_VERSION,
        "strategy": model.strategy,
        "n": model.n,
        "degree": model.d,
        "N": model.N,
        "psi": psi,
        "A_W": encode_matrix(model.A_W),
        "A_W_convention": A_W_CONVENTION,
        "provenance": list(model.provenance),
        "jet_residual": model.jet_residual,
    }


def model_from_dict(data: Any) -> EmbeddingModel:
    if isinstance(data, dict) and "model" in data and "psi" not in data:
        data = data["model"]
    if not isinstance(data, dict):
        raise InvalidInputError("model: expected a JSON object")
    for key in ("strategy", "n", "degree", "N", "psi", "A_W"):
        if key not in data:
            raise InvalidInputError(f"model: missing field '{key}'")
    n, d, N = data["n"], data["degree"], data["N"]
    for key, v in (("n", n), ("degree", d), ("N", N)):
        if not isinstance(v, int) or isinstance(v, bool) or v < 1:
            raise InvalidInputError(f"model.{key}: expected a positive integer, got {v!r}")
    psi = data["psi"]
    if not isinstance(psi, list) or len(psi) != N:
        raise InvalidInputError(f"model.psi: expected {N} term lists")
    basis = monomial_basis(n, d)
    B = np.zeros((len(basis), N), dtype=complex)
    for j, raw in enumerate(psi):
        for e, c in _decode_terms(raw, n, f"model.psi[{j}]"):
            if not 1 <= sum(e) <= d:
                raise InvalidInputError(f"model.psi[{j}]: monomial {list(e)} outside degrees 1..{d}")
            B[basis.index[e], j] += c
    A = decode_matrix(data["A_W"], "model.A_W", (N, N))
    prov = data.get("provenance", [])
    if not isinstance(prov, list):
        raise InvalidInputError("model.provenance: expected a list")
    res = data.get("jet_residual", 0.0)
    if not isinstance(res, (int, float)):
        raise InvalidInputError("model.jet_residual: expected a number")
    return EmbeddingModel(str(data["strategy"]), n, d, basis, B, A, [str(p) for p in prov],
                          float(res))


def load_model(path) -> EmbeddingModel:
    try:
        return model_from_dict(load_json(path))
    except InvalidInputError as exc:
        raise InvalidInputError(f"{path}: {exc}") from exc


def to_jsonable(obj: Any) -> Any:
    """Plain JSON types; complex as ``[re, im]``, non-finite floats as strings."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else str(f)
    if isinstance(obj, (complex, np.complexfloating)):
        return [to_jsonable(obj.real), to_jsonable(obj.imag)]
    if obj is None or isinstance(obj, str):
        return obj
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj: Any) -> str:
    return json.dumps(to_jsonable(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def content_hash(obj: Any) -> str:
    canon = json.dumps(to_jsonable(obj), sort_keys=True, separators=(",", ":"), allow_nan=False)
    return hashlib.sha256(canon.encode()).hexdigest()
