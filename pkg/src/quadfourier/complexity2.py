"""Linear systems of complexity two, level-set projections and four-point counts."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import budget as _budget
from . import records
from .errors import (
    CoefficientSumNonzero,
    DegenerateCoefficients,
    PreconditionUnmet,
    TooManyRows,
)
from .gf import check_prime, coefficient_vectors, fp_inv, nullspace, point_index, rank, reduce, solve
from .harmonic import DenseFunction, addition_table, tensor_transform, u3_norm
from .quadsets import QuadTuple, level_labels


@dataclass(frozen=True)
class LinearSystem:
    """Rows ``phi_1 .. phi_k`` in F_p^d describing the forms ``phi_i . (x, y, ...)``."""

    rows: tuple
    p: int

    def __init__(self, rows, p: int):
        check_prime(p)
        M = reduce(np.asarray(rows, dtype=np.int64), p)
        if M.ndim != 2 or M.shape[0] < 1 or M.shape[1] < 1:
            raise ValueError("a system needs k >= 1 rows of length d >= 1")
        object.__setattr__(self, "rows", tuple(tuple(int(v) for v in r) for r in M))
        object.__setattr__(self, "p", p)

    @property
    def matrix(self) -> np.ndarray:
        return np.array(self.rows, dtype=np.int64)

    @property
    def k(self) -> int:
        return len(self.rows)

    @property
    def d(self) -> int:
        return len(self.rows[0])

    def to_dict(self) -> dict:
        return {"p": self.p, "rows": [list(r) for r in self.rows]}

    @classmethod
    def from_dict(cls, d: dict) -> "LinearSystem":
        return cls(d["rows"], int(d["p"]))


def is_translation_invariant(S: LinearSystem) -> bool:
    """Whether ``(1, ..., 1)`` lies in the row space of ``[phi_1 .. phi_k]``."""
    return solve(S.matrix, np.ones(S.k, dtype=np.int64), S.p) is not None


def tensor_powers(S: LinearSystem, power: int) -> np.ndarray:
    """Rows ``phi_i^{tensor power}`` flattened in lexicographic index order."""
    out = []
    for r in S.matrix:
        t = r
        for _ in range(power - 1):
            t = np.outer(t, r).reshape(-1)
        out.append(t % S.p)
    return np.array(out, dtype=np.int64)


def _rank_by_columns(M: np.ndarray, p: int) -> int:
    """Rank by eliminating on the transpose with plain Python integers."""
    A = [[int(v) % p for v in row] for row in np.asarray(M).T.tolist()]
    r = 0
    cols = len(A[0]) if A else 0
    for c in range(cols - 1, -1, -1):  # reverse column order
        piv = next((i for i in range(r, len(A)) if A[i][c]), None)
        if piv is None:
            continue
        A[r], A[piv] = A[piv], A[r]
        inv = pow(A[r][c], -1, p)
        A[r] = [(v * inv) % p for v in A[r]]
        for i in range(len(A)):
            if i != r and A[i][c]:
                f = A[i][c]
                A[i] = [(a - f * b) % p for a, b in zip(A[i], A[r])]
        r += 1
    return r


def complexity_at_most_two(S: LinearSystem) -> bool:
    """Tensor cubes of the rows are linearly independent.

    Two independent rank computations must agree.
    """
    if S.k > S.d**3:
        raise TooManyRows(f"k = {S.k} exceeds d^3 = {S.d**3}")
    cubes = tensor_powers(S, 3)
    r1 = rank(cubes, S.p)
    r2 = _rank_by_columns(cubes, S.p)
    if r1 != r2:
        raise AssertionError(f"rank routines disagree: {r1} vs {r2}")
    return r1 == S.k


def kernel_sum_check(S: LinearSystem) -> records.Check:
    """Every ``mu`` with ``sum mu_i phi_i^{tensor 2} = 0`` has ``sum mu_i = 0``."""
    if not is_translation_invariant(S):
        raise PreconditionUnmet("system is not translation-invariant")
    squares = tensor_powers(S, 2)
    K = nullspace(squares.T, S.p)
    sums = [int(v.sum() % S.p) for v in K]
    bad = sum(1 for s in sums if s)
    rec = records.hard("tensor-square-kernel", bad, 0, bad == 0, kernel_dim=len(K), kernel=K.tolist())
    if len(K) == 0:
        rec.status = records.VACUOUS
    return rec


class ProjectedFunction:
    """``Pi_Q f``: the mean of ``f`` on each fibre ``Q^{-1}(a)`` (0 on empty fibres)."""

    def __init__(self, f: DenseFunction, Q: QuadTuple):
        if f.domain != Q.domain:
            raise ValueError("f must live on the tuple's domain")
        self.Q = Q
        self.domain = f.domain
        self.labels = level_labels(Q, f.points)
        nfib = Q.p**Q.d
        self.sizes = np.bincount(self.labels, minlength=nfib)
        self.exact = f.is_integer
        if self.exact:
            sums = np.zeros(nfib, dtype=object)
            np.add.at(sums, self.labels, f.values.astype(object))
            self.fiber_means = [Fraction(int(s), int(c)) if c else Fraction(0) for s, c in zip(sums, self.sizes)]
        else:
            v = f.complex_values()
            sums = np.bincount(self.labels, weights=v.real, minlength=nfib) + 1j * np.bincount(
                self.labels, weights=v.imag, minlength=nfib
            )
            self.fiber_means = [s / c if c else 0j for s, c in zip(sums, self.sizes)]

    def mean(self, a) -> Fraction | complex:
        return self.fiber_means[int(point_index(reduce(a, self.Q.p), self.Q.p))] if self.Q.d else self.fiber_means[0]

    def function(self) -> DenseFunction:
        if self.exact:
            vals = np.array([float(self.fiber_means[j]) for j in self.labels])
        else:
            vals = np.array([self.fiber_means[j] for j in self.labels], dtype=complex)
        return DenseFunction(self.domain, vals)

    def exact_values(self) -> list:
        return [self.fiber_means[j] for j in self.labels]


def project(f: DenseFunction, Q: QuadTuple, budget: int | None = None) -> ProjectedFunction:
    _budget.check("points", f.domain.size, budget)
    return ProjectedFunction(f, Q)


def ci_coefficients(c1: int, c2: int, c3: int, p: int) -> tuple[int, int, int, int]:
    """``(C0, C1, C2, C3)`` with ``C0 = 1``; they sum to 0 and are all nonzero.

    ``C_i`` is the multiple of ``gamma_0`` forced on ``gamma_i`` by
    ``sum gamma_i = sum c_i gamma_i = sum c_i^2 gamma_i = 0`` (with
    ``c_0 = 0``).
    """
    check_prime(p)
    c1, c2, c3 = c1 % p, c2 % p, c3 % p
    if 0 in (c1, c2, c3) or len({c1, c2, c3}) < 3:
        raise DegenerateCoefficients(f"need distinct nonzero c_i mod {p}, got {(c1, c2, c3)}")

    def frac(num: int, den: int) -> int:
        if den % p == 0:
            raise DegenerateCoefficients("vanishing denominator")
        return (num * fp_inv(den % p, p)) % p

    C1 = frac(-c2 * c3, (c1 - c2) * (c1 - c3))
    C2 = frac(c1 * c3, (c1 - c2) * (c2 - c3))
    C3 = frac(-c1 * c2, (c1 - c3) * (c2 - c3))
    C = (1, C1, C2, C3)
    if sum(C) % p:
        raise AssertionError(f"coefficients {C} do not sum to zero mod {p}")
    if any(c == 0 for c in C):
        raise AssertionError(f"zero coefficient in {C}")
    return C


def _check_coeffs(C, p: int) -> tuple:
    C = tuple(int(c) % p for c in C)
    if len(C) != 4 or any(c == 0 for c in C):
        raise DegenerateCoefficients("need four nonzero coefficients")
    if sum(C) % p:
        raise CoefficientSumNonzero(f"coefficients {C} do not sum to zero")
    return C


def _scaled_index(k: int, p: int, c: int) -> np.ndarray:
    """Index of ``c x`` for every enumeration index of ``x``."""
    return point_index((coefficient_vectors(k, p) * c) % p, p)


def weighted_solution_count(f: DenseFunction, C, method: str = "fourier", budget: int | None = None) -> float:
    """``sum_{C0 x0 + C1 x1 + C2 x2 + C3 x3 = 0} f(x0) f(x1) f(x2) f(x3)``.

    ``method="fourier"`` evaluates ``E_l prod_i fhat(C_i l)``; ``"brute"``
    loops over ``(x0, x1, x2)`` and solves for ``x3``.
    """
    H = f.domain
    p, k = H.p, H.dim
    C = _check_coeffs(C, p)
    v = f.complex_values()
    if method == "fourier":
        F = tensor_transform(v, k, p)
        prod = np.ones(H.size, dtype=complex)
        for c in C:
            prod *= F[_scaled_index(k, p, c)]
        val = prod.sum() / H.size
        if abs(val.imag) > 1e-9 * max(1.0, abs(val.real)):
            raise AssertionError(f"imaginary residue {val.imag}")
        return float(val.real)
    if method != "brute":
        raise ValueError(f"unknown method {method!r}")
    _budget.check("brauer", H.size**3, budget)
    T = addition_table(H)
    s = [_scaled_index(k, p, c) for c in C[:3]]
    back = _scaled_index(k, p, (-fp_inv(C[3], p)) % p)
    total = 0j
    for i0 in range(H.size):
        a = T[s[0][i0]][s[1]]  # C0 x0 + C1 x1, over x1
        tot = T[a[:, None], s[2][None, :]]  # + C2 x2
        x3 = back[tot]
        total += v[i0] * np.sum(v[:, None] * v[None, :] * v[x3])
    return float(total.real)


def config_count(f0: DenseFunction, f1: DenseFunction, f2: DenseFunction, f3: DenseFunction, c1: int, c2: int, c3: int, budget: int | None = None) -> float:
    """``E_{x,y in H} f0(x) f1(x + c1 y) f2(x + c2 y) f3(x + c3 y)``."""
    H = f0.domain
    for f in (f1, f2, f3):
        if f.domain != H:
            raise ValueError("all functions must share a domain")
    _budget.check("brauer", H.size**2, budget)
    p, k = H.p, H.dim
    T = addition_table(H)
    vals = [f.complex_values() for f in (f0, f1, f2, f3)]
    cols = [T[:, _scaled_index(k, p, c)] for c in (c1, c2, c3)]  # [x, y] -> x + c y
    prod = vals[0][:, None] * vals[1][cols[0]] * vals[2][cols[1]] * vals[3][cols[2]]
    val = prod.sum() / H.size**2
    return float(val.real) if abs(val.imag) < 1e-12 else complex(val)


def check_von_neumann(f: DenseFunction, Q: QuadTuple, c1: int, c2: int, c3: int) -> records.Check:
    """Four-point count of ``f`` against that of ``Pi_Q f``, relative to a U3 distance.

    Reports ``|Lambda(f) - Lambda(Pi_Q f)| / (||f - Pi_Q f||_{U^3} / ||1_H||_{U^3})``.
    Only finiteness and the trivial bound ``|difference| <= 1`` are asserted.
    """
    H = f.domain
    g = project(f, Q).function()
    lam_f = config_count(f, f, f, f, c1, c2, c3)
    lam_g = config_count(g, g, g, g, c1, c2, c3)
    lhs = abs(lam_f - lam_g)
    rhs = u3_norm(f - g) / u3_norm(DenseFunction.constant(H))
    if lhs < 1e-12:
        ratio = 0.0
    elif rhs > 0:
        ratio = lhs / rhs
    else:
        ratio = float("inf")
    finite = np.isfinite(ratio)
    if not finite or lhs > 1 + 1e-9:
        return records.Check("von-neumann", lhs, rhs, records.FAIL, ratio=ratio)
    return records.report("von-neumann", lhs, rhs, ratio)


def valid_coefficient_triples(p: int):
    """All ordered triples of distinct nonzero residues mod ``p``."""
    return list(itertools.permutations(range(1, p), 3))


def brauer_system(p: int = 3) -> LinearSystem:
    return LinearSystem([(1, 0), (1, 1), (1, 2), (0, 1)], p)


def four_ap_system(p: int = 5) -> LinearSystem:
    return LinearSystem([(1, 0), (1, 1), (1, 2), (1, 3)], p)

