"""Brauer quadruples ``x, y, x+y, x+2y``: counting, colourings and expansion sets."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import budget as _budget
from . import records
from .errors import DimensionTooLarge, SupportViolation
from .gf import Subspace, all_points, check_prime, point_index, reduce
from .harmonic import DenseFunction, addition_table, u3_norm
from .quadsets import QuadTuple, level_mask, tuple_rank

# Empirical bound on the normalised counting error. The underlying estimate
# has an unspecified constant; the largest value seen on the exhaustive d=1,
# n<=3 family and 20000 random n<=4, d<=2 instances is 4/9.
COUNTING_CONSTANT = 0.5


@dataclass(frozen=True)
class BrauerWitness:
    x: tuple
    y: tuple
    color: int

    def points(self, p: int) -> list[tuple]:
        x, y = np.array(self.x), np.array(self.y)
        return [tuple(int(v) for v in pt) for pt in (x, y, (x + y) % p, (x + 2 * y) % p)]


class Coloring:
    """An ``r``-colouring of the nonzero points of F_p^n.

    ``colors`` lists the colour (1..r) of each nonzero point in enumeration
    order, i.e. of points with indices ``1 .. p^n - 1``.
    """

    __slots__ = ("p", "n", "r", "colors")

    def __init__(self, p: int, n: int, r: int, colors):
        check_prime(p)
        colors = np.asarray(colors, dtype=np.int64).reshape(-1)
        if len(colors) != p**n - 1:
            raise ValueError(f"expected {p**n - 1} colours, got {len(colors)}")
        if colors.size and (colors.min() < 1 or colors.max() > r):
            raise ValueError("colours must lie in 1..r")
        colors.setflags(write=False)
        self.p, self.n, self.r, self.colors = p, n, r, colors

    def table(self) -> np.ndarray:
        """Colour per point index, with 0 marking the uncoloured origin."""
        return np.concatenate([[0], self.colors])

    def color_of(self, x) -> int:
        return int(self.table()[int(point_index(reduce(x, self.p), self.p))])

    def classes(self) -> dict[int, np.ndarray]:
        pts = all_points(self.n, self.p)[1:]
        return {c: pts[self.colors == c] for c in range(1, self.r + 1)}

    @classmethod
    def monochrome(cls, p: int, n: int) -> "Coloring":
        return cls(p, n, 1, np.ones(p**n - 1, dtype=np.int64))

    @classmethod
    def random(cls, rng: np.random.Generator, p: int, n: int, r: int) -> "Coloring":
        return cls(p, n, r, rng.integers(1, r + 1, size=p**n - 1))

    def to_dict(self) -> dict:
        return {"p": self.p, "n": self.n, "r": self.r, "colors": self.colors.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "Coloring":
        return cls(int(d["p"]), int(d["n"]), int(d["r"]), d["colors"])


def lower_bound_coloring(p: int, n: int, r: int) -> Coloring:
    """Colour ``x`` by the largest index ``i`` (1-based) with ``x_i != 0``."""
    check_prime(p)
    if n > r:
        raise DimensionTooLarge(f"need n <= r, got n={n}, r={r}")
    pts = all_points(n, p)[1:]
    nz = pts != 0
    last = n - np.argmax(nz[:, ::-1], axis=1)
    return Coloring(p, n, r, last)


def find_monochromatic_brauer(c: Coloring) -> BrauerWitness | None:
    """First ``(x, y)`` in enumeration order whose four points share a colour.

    Points equal to 0 carry no colour, so quadruples touching 0 never count.
    """
    p, n = c.p, c.n
    col = c.table()
    T = addition_table(Subspace.full(p, n))
    pts = all_points(n, p)
    ys = np.arange(1, p**n)
    two_y = T[ys, ys]
    for x in range(1, p**n):
        cx = col[x]
        s1 = T[x, ys]
        s2 = T[x, two_y]
        ok = (col[ys] == cx) & (col[s1] == cx) & (col[s2] == cx)
        if ok.any():
            y = ys[np.argmax(ok)]
            return BrauerWitness(tuple(pts[x].tolist()), tuple(pts[y].tolist()), int(cx))
    return None


def count_monochromatic(c: Coloring) -> int:
    """Number of monochromatic admissible ``(x, y)`` pairs."""
    p, n = c.p, c.n
    col = c.table()
    T = addition_table(Subspace.full(p, n))
    idx = np.arange(p**n)
    two = T[idx, idx]
    cx = col[:, None]
    ok = (cx > 0) & (col[None, :] == cx) & (col[T] == cx) & (col[T[:, two]] == cx)
    return int(ok.sum())


def _integer_values(f: DenseFunction):
    v = f.values
    if np.iscomplexobj(v):
        if np.any(v.imag):
            return None
        v = v.real
    if np.all(v == np.round(v)):
        return np.round(v).astype(np.int64)
    return None


def count_brauer(f0: DenseFunction, f1: DenseFunction, f2: DenseFunction, g: DenseFunction, budget: int | None = None):
    """``sum_{x,y} f0(x) f1(x+y) f2(x+2y) g(y)`` over ``H x H``.

    Integer-valued inputs take an exact integer path and return ``int``;
    otherwise the result is complex.
    """
    H = f0.domain
    for f in (f1, f2, g):
        if f.domain != H:
            raise ValueError("all functions must share a domain")
    if H.is_coset:
        raise ValueError("counting needs a linear subspace as domain")
    _budget.check("brauer", H.size * H.size, budget)
    T = addition_table(H)
    idx = np.arange(H.size)
    two = T[idx, idx]
    ints = [_integer_values(f) for f in (f0, f1, f2, g)]
    if all(v is not None for v in ints):
        a0, a1, a2, b = ints
        bound = max(1, *(int(np.abs(v).max(initial=0)) for v in ints))
        wide = bound**4 * H.size * H.size >= 2**62
        total = 0
        for y in np.flatnonzero(b):
            terms = a0 * a1[T[:, y]] * a2[T[:, two[y]]]
            s = sum(int(t) for t in terms) if wide else int(terms.sum())
            total += s * int(b[y])
        return total
    v0, v1, v2, vg = (f.complex_values() for f in (f0, f1, f2, g))
    # rows indexed by y
    inner = (v1[T] * v2[T[:, two]]).T @ v0
    return complex(np.sum(vg * inner))


def counting_lemma(Q: QuadTuple, A) -> dict:
    """Exact count and main term for Brauer quadruples on ``Q^{-1}(0)`` with ``y in A``.

    ``A`` must lie inside the zero set of the homogeneous part of ``Q``.
    """
    H = Q.domain
    A = reduce(np.asarray(A, dtype=np.int64).reshape(-1, Q.n), Q.p)
    if len(A):
        if not np.all(H.contains(A)):
            raise SupportViolation("A must lie in the domain")
        if not np.all(level_mask(Q.homogeneous(), np.zeros(Q.d, dtype=np.int64), A)):
            raise SupportViolation("A must lie in the zero set of the homogeneous part")
    pts = H.points()
    zero = level_mask(Q, np.zeros(Q.d, dtype=np.int64), pts)
    f = DenseFunction(H, zero.astype(np.int64))
    g = DenseFunction.indicator(H, A) if len(A) else DenseFunction.zeros(H)
    count = count_brauer(f, f, f, g)
    main = Fraction(H.size * len(A), Q.p ** (2 * Q.d))
    R = tuple_rank(Q).rank
    diff = abs(Fraction(count) - main)
    if diff == 0:
        err = 0.0
    elif R == math.inf:
        err = math.inf
    else:
        err = float(diff) * Q.p ** (R / 2) / H.size**2
    return {"count": count, "main_term": main, "normalized_error": err, "rank": R}


def check_counting_lemma(Q: QuadTuple, A, constant: float = COUNTING_CONSTANT) -> records.Check:
    """Normalised error ``|count - main| p^(R/2) / |H|^2`` against ``constant``.

    ``lhs`` is the error and ``rhs`` the constant; the exact count and main
    term are kept in ``detail``.
    """
    res = counting_lemma(Q, A)
    err = res["normalized_error"]
    return records.hard(
        "brauer-counting",
        err,
        constant,
        err <= constant,
        count=res["count"],
        main_term=str(res["main_term"]),
        rank=res["rank"],
    )


def expansion_set(A, Q: QuadTuple, budget: int | None = None) -> np.ndarray:
    """``{y in H cap Q^{-1}(0) : exists x with x, x+y, x+2y in A}``.

    ``x`` ranges over the whole ambient space F_p^n.
    """
    p, n = Q.p, Q.n
    A = reduce(np.asarray(A, dtype=np.int64).reshape(-1, n), p)
    Y = Q.domain.points()
    Y = Y[level_mask(Q, np.zeros(Q.d, dtype=np.int64), Y)]
    if len(A) == 0 or len(Y) == 0:
        return Y[:0]
    _budget.check("brauer", len(A) * len(Y), budget)
    mask = np.zeros(p**n, dtype=bool)
    mask[point_index(A, p)] = True
    keep = np.zeros(len(Y), dtype=bool)
    for j, y in enumerate(Y):
        keep[j] = np.any(mask[point_index((A + y) % p, p)] & mask[point_index((A + 2 * y) % p, p)])
    return Y[keep]


def check_u3_control(f0, f1, f2, g, Q: QuadTuple, structured: bool = False, c: float = 0.25) -> records.Check:
    """Brauer non-uniformity ``eta`` against the relative U3 ratios of the ``f_i``.

    ``eta`` is the ratio of ``|sum f0(x) f1(x+y) f2(x+2y) g(y)|`` to the same
    count with the indicators of ``Q^{-1}(0)`` and of the homogeneous zero set.
    On structured families ``min ratio >= c * eta`` is asserted; otherwise the
    ratio is reported.
    """
    H = Q.domain
    pts = H.points()
    zero = level_mask(Q, np.zeros(Q.d, dtype=np.int64), pts)
    zero0 = level_mask(Q.homogeneous(), np.zeros(Q.d, dtype=np.int64), pts)
    for f in (f0, f1, f2):
        if np.any(f.support_mask() & ~zero):
            raise SupportViolation("f_i must be supported on Q^{-1}(0)")
    if np.any(g.support_mask() & ~zero0):
        raise SupportViolation("g must be supported on the homogeneous zero set")
    one = DenseFunction(H, zero.astype(np.int64))
    one0 = DenseFunction(H, zero0.astype(np.int64))
    ref = count_brauer(one, one, one, one0)
    val = abs(count_brauer(f0, f1, f2, g))
    eta = float(val) / float(ref) if ref else 0.0
    base = u3_norm(one)
    ratios = [u3_norm(f) / base if base else 0.0 for f in (f0, f1, f2)]
    lo = min(ratios)
    if not structured:
        return records.report("brauer-u3-control", lo, eta, lo / eta if eta else math.inf, eta=eta, ratios=ratios)
    ok = lo >= c * eta - 1e-12
    status = records.VACUOUS if ok and eta == 0 else (records.PASS if ok else records.FAIL)
    return records.Check("brauer-u3-control", lo, c * eta, status, detail={"eta": eta, "ratios": ratios})
