"""JSON encodings for subspaces, quadratic tuples, functions and colourings."""

from __future__ import annotations

import json
import math
from fractions import Fraction
from pathlib import Path

import numpy as np

from .gf import Subspace, check_range, symmetrize
from .quadsets import QuadraticPoly, QuadTuple


def poly_from_dict(d: dict, p: int, n: int) -> tuple[QuadraticPoly, bool]:
    """Load one polynomial; returns it and whether ``B`` was already symmetric."""
    B = check_range(d.get("B", np.zeros((n, n), dtype=np.int64)), p).reshape(n, n)
    L = check_range(d.get("L", np.zeros(n, dtype=np.int64)), p).reshape(n)
    c = int(check_range([d.get("c", 0)], p)[0])
    was_symmetric = bool(np.array_equal(B, B.T))
    return QuadraticPoly(symmetrize(B, p) if not was_symmetric else B, L, c, p), was_symmetric


def load_tuple(d: dict) -> tuple[QuadTuple, bool]:
    """Load ``{p, ambient_dim, domain, polys}``; non-symmetric ``B`` is symmetrised.

    Returns the tuple and whether every input matrix was already symmetric.
    """
    p, n = int(d["p"]), int(d["ambient_dim"])
    domain = Subspace.from_dict(d["domain"], p) if d.get("domain") else Subspace.full(p, n)
    loaded = [poly_from_dict(q, p, n) for q in d.get("polys", [])]
    return QuadTuple([q for q, _ in loaded], domain, p, n), all(s for _, s in loaded)


def tuple_from_dict(d: dict) -> QuadTuple:
    return load_tuple(d)[0]


def tuple_to_dict(Q: QuadTuple) -> dict:
    return Q.to_dict()


def jsonable(obj):
    """Convert numpy scalars/arrays, fractions and infinities for ``json``."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        if math.isnan(v):
            return "nan"
        return v
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if hasattr(obj, "to_dict"):
        return jsonable(obj.to_dict())
    return obj


def dumps(obj) -> str:
    return json.dumps(jsonable(obj), indent=2, sort_keys=True) + "\n"


def load(path) -> dict:
    return json.loads(Path(path).read_text())


def save(obj, path) -> None:
    Path(path).write_text(dumps(obj))


def points_from_json(data, n: int, p: int) -> np.ndarray:
    return check_range(np.asarray(data, dtype=np.int64).reshape(-1, n), p)
