"""Exact linear algebra over the prime field F_p.

Vectors, linear forms and matrices are plain ``numpy`` integer arrays whose
entries are reduced into ``[0, p)``. Linear forms are row covectors: a form
``l`` acts on ``x`` by ``l @ x mod p``. Subspaces and cosets are represented
by :class:`Subspace`, which stores its basis in reduced row-echelon form so
that two equal subspaces always have identical representations.
"""

from __future__ import annotations

import itertools
from functools import lru_cache

import numpy as np

from . import budget as _budget
from .errors import ZeroInverse

SUPPORTED_PRIMES = (3, 5, 7)


def check_prime(p: int) -> int:
    if p not in SUPPORTED_PRIMES:
        raise ValueError(f"p must be one of {SUPPORTED_PRIMES}, got {p}")
    return p


def reduce(a, p: int) -> np.ndarray:
    """Return ``a`` as an int64 array with entries in ``[0, p)``."""
    return np.mod(np.asarray(a, dtype=np.int64), p)


def fp_inv(a: int, p: int) -> int:
    """Multiplicative inverse of ``a`` modulo ``p``.

    >>> fp_inv(3, 7)
    5
    """
    a = int(a) % p
    if a == 0:
        raise ZeroInverse(f"0 has no inverse mod {p}")
    return pow(a, -1, p)


def rref(M, p: int) -> tuple[np.ndarray, list[int]]:
    """Reduced row-echelon form of ``M`` over F_p.

    Returns:
        (R, pivots): ``R`` holds only the nonzero rows (so ``len(R)`` is the
        rank) and ``pivots[i]`` is the pivot column of row ``i``.
    """
    R = reduce(M, p).copy()
    if R.ndim != 2:
        raise ValueError("rref expects a 2-d array")
    m, n = R.shape
    pivots: list[int] = []
    row = 0
    for col in range(n):
        if row == m:
            break
        nz = np.nonzero(R[row:, col])[0]
        if nz.size == 0:
            continue
        piv = row + nz[0]
        if piv != row:
            R[[row, piv]] = R[[piv, row]]
        R[row] = (R[row] * fp_inv(R[row, col], p)) % p
        others = np.nonzero(R[:, col])[0]
        others = others[others != row]
        if others.size:
            R[others] = (R[others] - np.outer(R[others, col], R[row])) % p
        pivots.append(col)
        row += 1
    return R[:row], pivots


def rank(M, p: int) -> int:
    M = np.asarray(M)
    if M.size == 0:
        return 0
    return len(rref(M, p)[1])


def nullspace(M, p: int) -> np.ndarray:
    """Basis (as rows, in RREF) of the right kernel ``{x : M x = 0}``."""
    M = reduce(M, p)
    if M.ndim != 2:
        raise ValueError("nullspace expects a 2-d array")
    n = M.shape[1]
    if M.shape[0] == 0:
        return np.eye(n, dtype=np.int64)
    R, pivots = rref(M, p)
    free = [j for j in range(n) if j not in pivots]
    basis = np.zeros((len(free), n), dtype=np.int64)
    for k, j in enumerate(free):
        basis[k, j] = 1
        for i, pc in enumerate(pivots):
            basis[k, pc] = (-R[i, j]) % p
    if len(basis) == 0:
        return basis
    return rref(basis, p)[0]


def solve(M, b, p: int) -> np.ndarray | None:
    """One solution ``x`` of ``M x = b`` over F_p, or ``None`` if inconsistent."""
    M = reduce(M, p)
    b = reduce(b, p).reshape(-1)
    m, n = M.shape
    aug = np.concatenate([M, b[:, None]], axis=1)
    R, pivots = rref(aug, p)
    if n in pivots:
        return None
    x = np.zeros(n, dtype=np.int64)
    for i, pc in enumerate(pivots):
        x[pc] = R[i, n]
    return x


def batch_rank(M, p: int) -> np.ndarray:
    """Ranks of a stack of matrices ``M`` with shape ``(N, rows, cols)``."""
    M = reduce(M, p).copy()
    N, r, c = M.shape
    inv = np.zeros(p, dtype=np.int64)
    for a in range(1, p):
        inv[a] = pow(a, -1, p)
    rk = np.zeros(N, dtype=np.int64)
    rows = np.arange(r)
    idx = np.arange(N)
    for col in range(c):
        elig = (M[:, :, col] != 0) & (rows[None, :] >= rk[:, None])
        has = elig.any(axis=1)
        if not has.any():
            continue
        b = idx[has]
        piv = np.argmax(elig[has], axis=1)
        tgt = rk[has]
        # swap pivot row into position ``tgt``
        prow = M[b, piv].copy()
        M[b, piv] = M[b, tgt]
        M[b, tgt] = prow
        prow = (prow * inv[prow[:, col]][:, None]) % p
        M[b, tgt] = prow
        below = rows[None, :] > tgt[:, None]
        factors = np.where(below, M[b, :, col], 0)
        M[b] = (M[b] - factors[:, :, None] * prow[:, None, :]) % p
        rk[has] += 1
    return rk


def symmetrize(M, p: int) -> np.ndarray:
    """The symmetric matrix ``(M + M^T) / 2`` with the same quadratic values."""
    M = reduce(M, p)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("symmetrize expects a square matrix")
    return ((M + M.T) * fp_inv(2, p)) % p


@lru_cache(maxsize=64)
def _coeff_grid(k: int, p: int) -> np.ndarray:
    if k == 0:
        return np.zeros((1, 0), dtype=np.int64)
    grid = np.indices((p,) * k).reshape(k, -1).T
    grid = np.ascontiguousarray(grid, dtype=np.int64)
    grid.setflags(write=False)
    return grid


def coefficient_vectors(k: int, p: int) -> np.ndarray:
    """All of F_p^k in lexicographic order (first coordinate most significant)."""
    return _coeff_grid(k, p)


def point_index(points, p: int) -> np.ndarray:
    """Lexicographic index of each point of F_p^n (rows of ``points``)."""
    points = np.asarray(points, dtype=np.int64)
    n = points.shape[-1]
    weights = p ** np.arange(n - 1, -1, -1, dtype=np.int64)
    return points @ weights


def index_to_points(idx, n: int, p: int) -> np.ndarray:
    idx = np.asarray(idx, dtype=np.int64)
    out = np.empty(idx.shape + (n,), dtype=np.int64)
    rest = idx.copy()
    for i in range(n - 1, -1, -1):
        out[..., i] = rest % p
        rest //= p
    return out


class Subspace:
    """A subspace of F_p^n, or a coset of one when ``offset`` is given.

    The basis is kept in reduced row-echelon form and the offset is reduced
    to be zero on the pivot columns, so equality is representation equality.
    """

    __slots__ = ("p", "ambient_dim", "basis", "pivots", "offset")

    def __init__(self, p: int, ambient_dim: int, basis=None, offset=None):
        check_prime(p)
        self.p = p
        self.ambient_dim = int(ambient_dim)
        if basis is None or len(basis) == 0:
            B = np.zeros((0, self.ambient_dim), dtype=np.int64)
            piv: list[int] = []
        else:
            B = reduce(basis, p).reshape(-1, self.ambient_dim)
            B, piv = rref(B, p)
        B.setflags(write=False)
        self.basis = B
        self.pivots = tuple(piv)
        if offset is not None:
            off = reduce(offset, p).reshape(self.ambient_dim).copy()
            if len(piv):
                off = (off - off[list(piv)] @ B) % p
            if not off.any():
                off = None
            else:
                off.setflags(write=False)
        self.offset = off if offset is not None else None

    @classmethod
    def span(cls, vectors, p: int, n: int | None = None) -> "Subspace":
        vectors = np.asarray(vectors, dtype=np.int64)
        if n is None:
            n = vectors.shape[-1]
        return cls(p, n, vectors.reshape(-1, n))

    @classmethod
    def full(cls, p: int, n: int) -> "Subspace":
        return cls(p, n, np.eye(n, dtype=np.int64))

    @classmethod
    def zero(cls, p: int, n: int) -> "Subspace":
        return cls(p, n)

    @property
    def dim(self) -> int:
        return len(self.basis)

    @property
    def codim(self) -> int:
        return self.ambient_dim - self.dim

    @property
    def size(self) -> int:
        return self.p**self.dim

    @property
    def is_coset(self) -> bool:
        return self.offset is not None

    def linear_part(self) -> "Subspace":
        if self.offset is None:
            return self
        return Subspace(self.p, self.ambient_dim, self.basis)

    def coset(self, offset) -> "Subspace":
        return Subspace(self.p, self.ambient_dim, self.basis, offset)

    def _off(self) -> np.ndarray:
        if self.offset is None:
            return np.zeros(self.ambient_dim, dtype=np.int64)
        return self.offset

    def coords(self, x) -> np.ndarray:
        """Coefficients of ``x`` (or rows of ``x``) in the RREF basis."""
        x = reduce(x, self.p)
        x = (x - self._off()) % self.p
        return x[..., list(self.pivots)]

    def contains(self, x) -> np.ndarray | bool:
        x = reduce(x, self.p)
        c = self.coords(x)
        back = (c @ self.basis + self._off()) % self.p
        res = np.all(back == x, axis=-1)
        return bool(res) if res.ndim == 0 else res

    def lift(self, coeffs) -> np.ndarray:
        coeffs = reduce(coeffs, self.p)
        return (coeffs @ self.basis + self._off()) % self.p

    def lift_form(self, coeffs) -> np.ndarray:
        """An ambient linear form whose values on the basis are ``coeffs``."""
        coeffs = reduce(coeffs, self.p)
        out = np.zeros(coeffs.shape[:-1] + (self.ambient_dim,), dtype=np.int64)
        out[..., list(self.pivots)] = coeffs
        return out

    def restrict_form(self, form) -> np.ndarray:
        """Coefficients of an ambient form restricted to the linear part."""
        return (reduce(form, self.p) @ self.basis.T) % self.p

    def points(self, budget: int | None = None) -> np.ndarray:
        return enumerate_points(self, budget)

    def intersect(self, other: "Subspace") -> "Subspace":
        if self.is_coset or other.is_coset:
            raise ValueError("intersect is defined for linear subspaces")
        return kernel(annihilator(other).basis, self)

    def is_subspace_of(self, other: "Subspace") -> bool:
        if self.dim == 0:
            return True
        return bool(np.all(other.linear_part().contains(self.basis)))

    def key(self) -> tuple:
        off = None if self.offset is None else tuple(int(v) for v in self.offset)
        return (self.p, self.ambient_dim, self.basis.tobytes(), self.basis.shape, off)

    def __eq__(self, other) -> bool:
        return isinstance(other, Subspace) and self.key() == other.key()

    def __hash__(self) -> int:
        return hash(self.key())

    def __repr__(self) -> str:
        off = "" if self.offset is None else f", offset={self.offset.tolist()}"
        return f"Subspace(p={self.p}, n={self.ambient_dim}, basis={self.basis.tolist()}{off})"

    def to_dict(self) -> dict:
        d = {"p": self.p, "ambient_dim": self.ambient_dim, "basis": self.basis.tolist()}
        if self.offset is not None:
            d["offset"] = self.offset.tolist()
        return d

    @classmethod
    def from_dict(cls, d: dict, p: int | None = None) -> "Subspace":
        p = d.get("p", p)
        if p is None:
            raise ValueError("subspace JSON needs p")
        n = int(d["ambient_dim"])
        basis = check_range(d.get("basis", []), p)
        offset = d.get("offset")
        if offset is not None:
            offset = check_range(offset, p)
        return cls(p, n, np.asarray(basis, dtype=np.int64).reshape(-1, n), offset)


def check_range(values, p: int) -> np.ndarray:
    """Load integers from JSON, rejecting anything outside ``[0, p)``."""
    arr = np.asarray(values, dtype=object)
    flat = arr.reshape(-1)
    for v in flat:
        if isinstance(v, bool) or not isinstance(v, (int, np.integer)):
            raise ValueError(f"expected an integer, got {v!r}")
        if not 0 <= v < p:
            raise ValueError(f"value {v} out of range for p={p}")
    return np.asarray(values, dtype=np.int64)


def annihilator(V: Subspace) -> Subspace:
    """``V^perp``: linear forms vanishing on ``V``, as a subspace of the dual."""
    if V.is_coset:
        raise ValueError("annihilator needs a linear subspace")
    if V.dim == 0:
        return Subspace.full(V.p, V.ambient_dim)
    return Subspace(V.p, V.ambient_dim, nullspace(V.basis, V.p))


def kernel(forms, V: Subspace) -> Subspace:
    """``{x in V : l x = 0 for every form l}``."""
    forms = reduce(forms, V.p).reshape(-1, V.ambient_dim)
    if V.is_coset:
        raise ValueError("kernel needs a linear subspace")
    if len(forms) == 0 or V.dim == 0:
        return V
    restricted = (forms @ V.basis.T) % V.p  # forms in V's coordinates
    coeffs = nullspace(restricted, V.p)
    if len(coeffs) == 0:
        return Subspace.zero(V.p, V.ambient_dim)
    return Subspace(V.p, V.ambient_dim, (coeffs @ V.basis) % V.p)


def enumerate_points(S: Subspace, budget: int | None = None) -> np.ndarray:
    """All ``p^dim`` points of ``S``, lexicographic in the basis coefficients."""
    _budget.check("points", S.size, budget)
    return S.lift(coefficient_vectors(S.dim, S.p))


def all_points(n: int, p: int) -> np.ndarray:
    return coefficient_vectors(n, p)


def random_subspace(rng: np.random.Generator, p: int, n: int, dim: int) -> Subspace:
    """Uniform-ish random subspace of the given dimension (rejection on rank)."""
    if dim == 0:
        return Subspace.zero(p, n)
    while True:
        vecs = rng.integers(0, p, size=(dim, n))
        if rank(vecs, p) == dim:
            return Subspace(p, n, vecs)


def hyperplanes(p: int, n: int) -> list[Subspace]:
    """Every codimension-1 subspace of F_p^n, one per projective nonzero form."""
    out = []
    for form in projective_points(n, p):
        out.append(kernel(form[None, :], Subspace.full(p, n)))
    return out


def projective_points(k: int, p: int) -> np.ndarray:
    """Nonzero vectors of F_p^k whose first nonzero entry is 1, in lex order."""
    rows = []
    for v in itertools.product(range(p), repeat=k):
        nz = [c for c in v if c]
        if nz and nz[0] == 1:
            rows.append(v)
    return np.asarray(rows, dtype=np.int64).reshape(-1, k)
