"""Quadratic polynomials on a subspace H, their level sets and character sums.

A :class:`QuadraticPoly` ``q(x) = x^T B x + L x + c`` stores the symmetric
matrix ``B`` of its associated bilinear form ``b``, the homogeneous linear
part ``L`` and the constant ``c``, all in ambient coordinates of F_p^n.
A :class:`QuadTuple` couples ``d`` such polynomials with the subspace ``H``
they are considered on; ranks and level sets are always relative to ``H``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import budget as _budget
from . import records
from .errors import BudgetExceeded
from .gf import (
    Subspace,
    batch_rank,
    check_prime,
    coefficient_vectors,
    kernel,
    point_index,
    projective_points,
    rank,
    reduce,
    symmetrize,
)
from .harmonic import addition_table, tensor_transform

TOL = 1e-9


class QuadraticPoly:
    """``x -> x^T B x + L x + c`` over F_p with ``B`` symmetric."""

    __slots__ = ("p", "B", "L", "c")

    def __init__(self, B, L=None, c: int = 0, p: int = 3):
        check_prime(p)
        B = reduce(B, p)
        if B.ndim != 2 or B.shape[0] != B.shape[1]:
            raise ValueError("B must be square")
        if not np.array_equal(B, B.T):
            raise ValueError("B must be symmetric; use QuadraticPoly.from_matrix")
        n = B.shape[0]
        L = np.zeros(n, dtype=np.int64) if L is None else reduce(L, p).reshape(n)
        B.setflags(write=False)
        L.setflags(write=False)
        self.p = p
        self.B = B
        self.L = L
        self.c = int(c) % p

    @classmethod
    def from_matrix(cls, M, L=None, c: int = 0, p: int = 3) -> "QuadraticPoly":
        """Build from any matrix ``M`` with ``q(x) = x^T M x + L x + c``."""
        return cls(symmetrize(M, p), L, c, p)

    @classmethod
    def zero(cls, n: int, p: int) -> "QuadraticPoly":
        return cls(np.zeros((n, n), dtype=np.int64), None, 0, p)

    @property
    def n(self) -> int:
        return self.B.shape[0]

    def __call__(self, x):
        return self.eval(x)

    def eval(self, x):
        """Value at a point, or at every row of a 2-d array of points."""
        x = reduce(x, self.p)
        quad = np.einsum("...i,ij,...j->...", x, self.B, x)
        out = (quad + x @ self.L + self.c) % self.p
        return int(out) if out.ndim == 0 else out

    def homogeneous(self) -> "QuadraticPoly":
        return QuadraticPoly(self.B, None, 0, self.p)

    def bilinear(self, x, y) -> int:
        return int(reduce(x, self.p) @ self.B @ reduce(y, self.p)) % self.p

    def is_homogeneous(self) -> bool:
        return not self.L.any() and self.c == 0

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, QuadraticPoly)
            and self.p == other.p
            and np.array_equal(self.B, other.B)
            and np.array_equal(self.L, other.L)
            and self.c == other.c
        )

    def __repr__(self) -> str:
        return f"QuadraticPoly(B={self.B.tolist()}, L={self.L.tolist()}, c={self.c}, p={self.p})"

    def to_dict(self) -> dict:
        return {"B": self.B.tolist(), "L": self.L.tolist(), "c": self.c}


@dataclass(frozen=True)
class RankCertificate:
    """Minimum pencil rank and the (projective) combination attaining it.

    ``rank`` is ``math.inf`` for the empty tuple, whose rank is vacuously
    at least any bound.
    """

    rank: float
    minimizing_lambda: tuple | None


class QuadTuple:
    """A ``d``-tuple of quadratic polynomials considered on a subspace ``H``."""

    __slots__ = ("p", "n", "polys", "domain", "_Bs", "_Ls", "_cs")

    def __init__(self, polys, domain: Subspace | None = None, p: int | None = None, n: int | None = None):
        polys = list(polys)
        if domain is None:
            if polys:
                p, n = polys[0].p, polys[0].n
            if p is None or n is None:
                raise ValueError("an empty tuple needs a domain or (p, n)")
            domain = Subspace.full(p, n)
        if domain.is_coset:
            raise ValueError("the domain of a quadratic tuple must be a linear subspace")
        self.p = domain.p
        self.n = domain.ambient_dim
        for q in polys:
            if q.p != self.p or q.n != self.n:
                raise ValueError("all polynomials must share p and the ambient dimension")
        self.polys = tuple(polys)
        self.domain = domain
        d = len(polys)
        self._Bs = np.array([q.B for q in polys], dtype=np.int64).reshape(d, self.n, self.n)
        self._Ls = np.array([q.L for q in polys], dtype=np.int64).reshape(d, self.n)
        self._cs = np.array([q.c for q in polys], dtype=np.int64).reshape(d)

    @property
    def d(self) -> int:
        return len(self.polys)

    @property
    def Bs(self) -> np.ndarray:
        return self._Bs

    @property
    def Ls(self) -> np.ndarray:
        return self._Ls

    @property
    def cs(self) -> np.ndarray:
        return self._cs

    def eval(self, x) -> np.ndarray:
        """``Q(x)`` as a length-``d`` vector (or ``(m, d)`` for ``m`` points)."""
        x = reduce(x, self.p)
        quad = np.einsum("...i,kij,...j->...k", x, self._Bs, x)
        return (quad + x @ self._Ls.T + self._cs) % self.p

    def homogeneous(self) -> "QuadTuple":
        return QuadTuple([q.homogeneous() for q in self.polys], self.domain)

    def bilinear_forms(self, h) -> np.ndarray:
        """The ``d`` ambient forms ``h^T b_i`` as a ``(d, n)`` array."""
        return np.einsum("i,kij->kj", reduce(h, self.p), self._Bs) % self.p

    def restricted_matrices(self) -> np.ndarray:
        """Gram matrices of the bilinear forms on the domain's RREF basis."""
        M = self.domain.basis
        return np.einsum("ai,kij,bj->kab", M, self._Bs, M) % self.p

    def coordinates(self) -> "QuadTuple":
        """The same tuple written in the domain's basis coordinates."""
        M = self.domain.basis
        k = self.domain.dim
        polys = [
            QuadraticPoly((M @ q.B @ M.T) % self.p, (M @ q.L) % self.p, q.c, self.p)
            for q in self.polys
        ]
        return QuadTuple(polys, Subspace.full(self.p, k) if k else Subspace.zero(self.p, 0), self.p, k)

    def append(self, q: QuadraticPoly) -> "QuadTuple":
        return QuadTuple(self.polys + (q,), self.domain)

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "ambient_dim": self.n,
            "domain": self.domain.to_dict(),
            "polys": [q.to_dict() for q in self.polys],
        }

    def __repr__(self) -> str:
        return f"QuadTuple(d={self.d}, p={self.p}, n={self.n}, domain_dim={self.domain.dim})"


def tuple_rank(Q: QuadTuple, budget: int | None = None) -> RankCertificate:
    """Minimum rank over nonzero ``lambda`` of ``sum lambda_i b_i`` on ``H``.

    The search runs over projective representatives (first nonzero entry
    equal to 1) in lexicographic order; the first minimiser is returned.
    """
    if Q.d == 0:
        return RankCertificate(math.inf, None)
    _budget.check("lambda", Q.p**Q.d, budget)
    lams = projective_points(Q.d, Q.p)
    G = Q.restricted_matrices()
    k = Q.domain.dim
    if k == 0:
        return RankCertificate(0, tuple(int(v) for v in lams[0]))
    combos = np.einsum("li,iab->lab", lams, G) % Q.p
    ranks = batch_rank(combos, Q.p)
    j = int(np.argmin(ranks))
    return RankCertificate(int(ranks[j]), tuple(int(v) for v in lams[j]))


def restrict(Q: QuadTuple, V: Subspace, check: bool = True) -> QuadTuple:
    """``Q`` considered on ``V <= H``; asserts the rank-decrement bound."""
    if not V.is_subspace_of(Q.domain):
        raise ValueError("V must be a subspace of the tuple's domain")
    out = QuadTuple(Q.polys, V, Q.p, Q.n)
    if check and Q.d:
        before = tuple_rank(Q).rank
        after = tuple_rank(out).rank
        drop = 2 * (Q.domain.dim - V.dim)
        if after < before - drop:
            raise AssertionError(f"rank decrement violated: {after} < {before} - {drop}")
    return out


def level_labels(Q: QuadTuple, points) -> np.ndarray:
    """Integer label of ``Q(x)`` (lexicographic index in F_p^d) per point."""
    if Q.d == 0:
        return np.zeros(len(points), dtype=np.int64)
    return point_index(Q.eval(points), Q.p)


def level_mask(Q: QuadTuple, a, points=None) -> np.ndarray:
    if points is None:
        points = Q.domain.points()
    a = reduce(a, Q.p).reshape(Q.d)
    if Q.d == 0:
        return np.ones(len(points), dtype=bool)
    return np.all(Q.eval(points) == a, axis=1)


def level_set(Q: QuadTuple, a=None, budget: int | None = None) -> np.ndarray:
    """``{x in H : Q(x) = a}`` in enumeration order (``a`` defaults to 0)."""
    pts = Q.domain.points(budget)
    if a is None:
        a = np.zeros(Q.d, dtype=np.int64)
    return pts[level_mask(Q, a, pts)]


def _char(values, p: int) -> np.ndarray:
    return np.exp(2j * np.pi * np.asarray(values) / p)


def weyl_sum(q: QuadraticPoly, coset: Subspace) -> complex:
    """``sum_{x in V + x0} e_p(q(x))``."""
    pts = coset.points()
    return complex(np.sum(_char(q.eval(pts), q.p)))


def form_rank(B, H: Subspace) -> int:
    M = H.basis
    if M.shape[0] == 0:
        return 0
    return rank((M @ reduce(B, H.p) @ M.T) % H.p, H.p)


def check_weyl(q: QuadraticPoly, coset: Subspace, H: Subspace | None = None) -> records.Check:
    """``|weyl_sum| <= |V| p^(D - R/2)``, ``R`` the rank of ``b`` on ``H``."""
    if H is None:
        H = Subspace.full(q.p, q.n)
    V = coset.linear_part()
    if not V.is_subspace_of(H):
        raise ValueError("coset must lie in H")
    R = form_rank(q.B, H)
    D = H.dim - V.dim
    lhs = abs(weyl_sum(q, coset))
    rhs = V.size * q.p ** (D - R / 2)
    ok = lhs <= rhs + TOL
    status = records.PASS if ok else records.FAIL
    if ok and rhs >= V.size:
        status = records.VACUOUS
    return records.Check("weyl-bound", lhs, rhs, status, detail={"rank": R, "codim": D})


def _forms_subspace(forms, H: Subspace) -> Subspace:
    return kernel(np.asarray(forms, dtype=np.int64).reshape(-1, H.ambient_dim), H)


def differenced_subspace(Q: QuadTuple, u, v) -> Subspace:
    """``V_{u,v} = {x : B(u_i, x) = 0, B(v_j, x) + L x = 0}`` inside ``H``."""
    forms = []
    for ui in np.asarray(u, dtype=np.int64).reshape(-1, Q.n):
        forms.extend(Q.bilinear_forms(ui))
    for vj in np.asarray(v, dtype=np.int64).reshape(-1, Q.n):
        forms.extend((Q.bilinear_forms(vj) + Q.Ls) % Q.p)
    return _forms_subspace(forms, Q.domain)


def differenced_set(Q: QuadTuple, u, v) -> tuple[np.ndarray, Subspace]:
    """The set ``Phi_{u,v}`` by direct intersection, and ``V_{u,v}``.

    ``Phi_{u,v}`` is the set of ``x`` with ``Q(x) = 0``, ``Q(x + u_i) = 0``
    for each ``i`` and ``Q(v_j - x) = 0`` for each ``j``.
    """
    pts = Q.domain.points()
    zero = np.zeros(Q.d, dtype=np.int64)
    mask = level_mask(Q, zero, pts)
    for ui in np.asarray(u, dtype=np.int64).reshape(-1, Q.n):
        mask &= level_mask(Q, zero, (pts + ui) % Q.p)
    for vj in np.asarray(v, dtype=np.int64).reshape(-1, Q.n):
        mask &= level_mask(Q, zero, (vj - pts) % Q.p)
    return pts[mask], differenced_subspace(Q, u, v)


def check_differenced_set(Q: QuadTuple, u, v) -> records.Check:
    """Exact set identity ``Phi_{u,v} = Q^{-1}(0) cap (V_{u,v} + x0)``.

    Checked for every ``x0`` in ``Phi_{u,v}``; sets are compared as sorted
    index arrays, byte for byte.
    """
    phi, V = differenced_set(Q, u, v)
    zeros = level_set(Q)
    target = np.sort(point_index(phi, Q.p)).tobytes()
    bad = 0
    for x0 in phi:
        members = zeros[V.contains((zeros - x0) % Q.p)]
        if np.sort(point_index(members, Q.p)).tobytes() != target:
            bad += 1
    return records.hard(
        "differenced-level-set", bad, 0, bad == 0, phi_size=len(phi), V_dim=V.dim
    )


def _census_cap_ok(count: int, size_pow: int, kd: int, R, p: int) -> tuple[bool, float]:
    """Exact test of ``count <= size_pow * p^(kd - R)``."""
    if R == math.inf:
        return count == 0, 0.0
    ok = count * p**R <= size_pow * p**kd
    return ok, size_pow * float(p) ** (kd - R)


def generic_codim_census(Q: QuadTuple, Ls=None, k: int = 1, budget: int | None = None) -> records.Check:
    """Count ``(h_1..h_k)`` for which the ``kd`` forms ``h_j^T b_i + l_ij`` are dependent.

    ``Ls`` has shape ``(k, d, n)`` (zeros when omitted). The count is compared
    with the cap ``|H|^k p^(kd - R)``.
    """
    H = Q.domain
    d, p = Q.d, Q.p
    Ls = np.zeros((k, d, Q.n), dtype=np.int64) if Ls is None else reduce(Ls, p).reshape(k, d, Q.n)
    total = H.size**k
    _budget.check("census", total, budget)
    R = tuple_rank(Q).rank
    if d == 0:
        ok, cap = _census_cap_ok(0, total, 0, R, p)
        return records.hard("generic-codim", 0, cap, ok, k=k, rank=R)
    # per point h: the d forms h^T b_i restricted to H, shape (|H|, d, dimH)
    G = Q.restricted_matrices()
    C = coefficient_vectors(H.dim, p)
    hb = np.einsum("ha,kab->hkb", C, G) % p
    Lr = (Ls @ H.basis.T) % p  # (k, d, dimH)
    count = 0
    chunk = max(1, 2**18 // max(1, H.size ** (k - 1)))
    grids = np.indices((H.size,) * k).reshape(k, -1).T if k > 1 else np.arange(H.size)[:, None]
    for start in range(0, len(grids), chunk * H.size ** (k - 1)):
        idx = grids[start : start + chunk * H.size ** (k - 1)]
        mats = np.concatenate([(hb[idx[:, j]] + Lr[j]) % p for j in range(k)], axis=1)
        count += int(np.sum(batch_rank(mats, p) < k * d))
    ok, cap = _census_cap_ok(count, total, k * d, R, p)
    return records.hard("generic-codim", count, cap, ok, k=k, rank=R, tuples=total)


def check_coset_uniformity(Q: QuadTuple, V: Subspace, h, form) -> records.Check:
    """Fourier uniformity of ``Q^{-1}(0)`` on the coset ``V + h``.

    Compares ``sum_{x in Q^{-1}(0) cap (V+h)} e_p(l x)`` with its main term
    ``1_{V^perp}(l) e_p(l h) |V| p^(-d)``; the allowed error is
    ``|H| p^(-R/2)``.
    """
    H = Q.domain
    p = Q.p
    if not V.is_subspace_of(H) or not H.contains(h):
        raise ValueError("V and h must lie in the tuple's domain")
    form = reduce(form, p)
    coset = V.coset(h)
    pts = coset.points()
    inside = pts[level_mask(Q, np.zeros(Q.d, dtype=np.int64), pts)]
    total = complex(np.sum(_char(inside @ form, p)))
    on_V_perp = not np.any((V.basis @ form) % p)
    main = (_char(int(form @ reduce(h, p)) % p, p) * V.size * p ** (-Q.d)) if on_V_perp else 0
    R = tuple_rank(Q).rank
    bound = 0.0 if R == math.inf else H.size * p ** (-R / 2)
    lhs = abs(total - main)
    ok = lhs <= bound + TOL
    trivial = V.size * (1 + p ** (-Q.d))
    status = records.PASS if ok else records.FAIL
    if ok and bound >= trivial:
        status = records.VACUOUS
    return records.Check("coset-uniformity", lhs, bound, status, detail={"rank": R})


def _span_membership(rows: np.ndarray, forms: np.ndarray, p: int) -> np.ndarray:
    """Which rows of ``forms`` lie in the span of ``rows`` (both intrinsic)."""
    k = forms.shape[1]
    if len(rows) == 0 or not np.any(rows):
        return ~np.any(forms, axis=1)
    S = Subspace(p, k, rows)
    return np.asarray(S.contains(forms), dtype=bool).reshape(len(forms))


def _shifted_sums(mask: np.ndarray, x0c, dim: int, p: int) -> np.ndarray:
    """``sum_{x in S} e_p(l (x - x0))`` for every dual index ``l`` (intrinsic)."""
    F = tensor_transform(mask.astype(complex), dim, p)
    if x0c is None:
        return F
    C = coefficient_vectors(dim, p)
    return F * _char(-(C @ x0c) % p, p)


def differenced_uniformity_census(Q: QuadTuple, budget: int | None = None) -> dict:
    """Once-differenced level sets ``Phi_h``, ``Psi_h`` over every ``h`` in ``H``.

    For each ``h`` and every form ``l`` the two inequalities with error
    ``|H| p^(-R/2)`` are evaluated; ``h`` is exceptional when either fails for
    some ``l``. Returns counts and the hard check of the exceptional count
    against ``|H| p^(d - R)``.
    """
    H = Q.domain
    p, d = Q.p, Q.d
    _budget.check("census", H.size * H.size, budget)
    R = tuple_rank(Q).rank
    bound = 0.0 if R == math.inf else H.size * p ** (-R / 2)
    pts = H.points()
    C = coefficient_vectors(H.dim, p)
    zero_mask = level_mask(Q, np.zeros(d, dtype=np.int64), pts)
    T = addition_table(H)
    G = Q.restricted_matrices()
    Lr = (Q.Ls @ H.basis.T) % p
    main_size = H.size * p ** (-2 * d)
    exceptional = []
    degenerate = 0
    worst = 0.0
    neg = (-C) % p
    neg_idx = point_index(neg, p)
    for hi in range(H.size):
        hc = C[hi]
        hb = np.einsum("a,kab->kb", hc, G) % p  # h^T b_i on H
        phi_mask = zero_mask & zero_mask[T[:, hi]]  # x and x + h in Q^{-1}(0)
        # Psi_h: x and h - x in Q^{-1}(0)
        psi_mask = zero_mask & zero_mask[T[neg_idx, hi]]
        failed = False
        for mask, rows in ((phi_mask, hb), (psi_mask, (hb + Lr) % p)):
            if rank(rows, p) < d if d else False:
                degenerate += 1
            x0c = C[np.argmax(mask)] if mask.any() else None
            S = _shifted_sums(mask, x0c, H.dim, p)
            main = np.where(_span_membership(rows, C, p), main_size, 0.0)
            err = np.abs(S - main)
            worst = max(worst, float(err.max()))
            if np.any(err > bound + TOL):
                failed = True
        if failed:
            exceptional.append(pts[hi].tolist())
    count = len(exceptional)
    ok, cap = _census_cap_ok(count, H.size, d, R, p)
    check = records.hard(
        "differenced-uniformity", count, cap, ok, rank=R, degenerate=degenerate, worst_error=worst, bound=bound
    )
    return {"check": check, "exceptional": exceptional, "degenerate": degenerate, "worst_error": worst}


def thrice_differenced_census(
    Q: QuadTuple, triples, x0=None
) -> dict:
    """Thrice-differenced level sets on the supplied ``(h1, h2, h3)`` triples.

    Both the printed error ``|H| p^(R/2)`` and the corrected ``|H| p^(-R/2)``
    are evaluated. Triples whose forms ``h_j^T b_i`` span fewer than ``3d``
    dimensions are exceptional; on every other triple the corrected bound
    is asserted.
    """
    H = Q.domain
    p, d = Q.p, Q.d
    R = tuple_rank(Q).rank
    tight = 0.0 if R == math.inf else H.size * p ** (-R / 2)
    loose = math.inf if R == math.inf else H.size * p ** (R / 2)
    pts = H.points()
    C = coefficient_vectors(H.dim, p)
    if x0 is None:
        x0 = np.zeros(Q.n, dtype=np.int64)
    x0c = H.coords(x0)
    zero_mask = level_mask(Q, np.zeros(d, dtype=np.int64), pts)
    G = Q.restricted_matrices()
    main_size = H.size * float(p) ** (-4 * d)
    degenerate = 0
    tight_fail = loose_fail = 0
    worst = 0.0
    for tri in np.asarray(triples, dtype=np.int64).reshape(-1, 3, Q.n):
        rows = np.concatenate([np.einsum("a,kab->kb", H.coords(h), G) % p for h in tri])
        full = rank(rows, p) == 3 * d
        if not full:
            degenerate += 1
        in_V = ~np.any((C @ rows.T) % p, axis=1) if d else np.ones(H.size, dtype=bool)
        shifted = point_index((C - x0c) % p, p)
        mask = zero_mask & in_V[shifted]  # x in Q^{-1}(0) with x - x0 in V
        S = _shifted_sums(mask, x0c, H.dim, p)
        main = np.where(_span_membership(rows, C, p), main_size, 0.0)
        err = float(np.abs(S - main).max())
        worst = max(worst, err)
        if err > loose + TOL:
            loose_fail += 1
        if err > tight + TOL and full:
            tight_fail += 1
    n_tri = len(np.asarray(triples).reshape(-1, 3, Q.n))
    check = records.hard(
        "thrice-differenced-uniformity",
        tight_fail,
        0,
        tight_fail == 0,
        rank=R,
        degenerate=degenerate,
        sampled=n_tri,
        loose_failures=loose_fail,
        worst_error=worst,
        bound=tight,
        printed_bound=loose,
    )
    return {"check": check, "degenerate": degenerate, "loose_failures": loose_fail, "worst_error": worst}


def random_quadratic(rng: np.random.Generator, n: int, p: int, homogeneous: bool = False) -> QuadraticPoly:
    M = rng.integers(0, p, size=(n, n))
    B = np.triu(M) + np.triu(M, 1).T
    if homogeneous:
        return QuadraticPoly(B % p, None, 0, p)
    return QuadraticPoly(B % p, rng.integers(0, p, size=n), int(rng.integers(0, p)), p)


def random_tuple(
    rng: np.random.Generator,
    n: int,
    p: int,
    d: int,
    min_rank: int = 0,
    homogeneous: bool = False,
    domain: Subspace | None = None,
    max_tries: int = 10_000,
) -> QuadTuple:
    """Rejection-sample a tuple whose rank on the domain is at least ``min_rank``."""
    for _ in range(max_tries):
        Q = QuadTuple([random_quadratic(rng, n, p, homogeneous) for _ in range(d)], domain, p, n)
        if tuple_rank(Q).rank >= min_rank:
            return Q
    raise BudgetExceeded("random_tuple rejection sampling", max_tries, max_tries)
