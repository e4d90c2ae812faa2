"""Maximal level-set density, high-rank partitioning and the density-increment driver.

Densities are exact :class:`fractions.Fraction` values throughout. Linear
shifts ``L`` are enumerated as forms on the tuple's domain ``H`` and lifted
to ambient coordinates; two ambient forms with the same restriction to
``H`` cut out the same level sets, so this covers every ambient ``L``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import budget as _budget
from .brauer import expansion_set
from .errors import IncrementNotFound
from .gf import (
    Subspace,
    all_points,
    coefficient_vectors,
    fp_inv,
    kernel,
    point_index,
    reduce,
)
from .quadsets import QuadraticPoly, QuadTuple, level_mask, tuple_rank

SPARSE = "Sparse"
EXPANDING = "DenseExpanding"
NON_EXPANDING = "DenseNonExpanding"


@dataclass(frozen=True)
class DensityWitness:
    """``|(A - x) cap (Q+L)^{-1}(a)| / |(Q+L)^{-1}(a)| = delta``."""

    delta: Fraction
    x: tuple
    L: tuple  # d ambient forms
    a: tuple
    sampled: bool = False

    def to_dict(self) -> dict:
        return {
            "delta": [self.delta.numerator, self.delta.denominator],
            "x": list(self.x),
            "L": [list(r) for r in self.L],
            "a": list(self.a),
            "sampled": self.sampled,
        }


def _as_mask(A, p: int, n: int) -> np.ndarray:
    mask = np.zeros(p**n, dtype=bool)
    A = reduce(np.asarray(A, dtype=np.int64).reshape(-1, n), p)
    if len(A):
        mask[point_index(A, p)] = True
    return mask


def witness_density(A, Q: QuadTuple, x, L, a) -> Fraction:
    """Exact density for a given ``(x, L, a)``; raises if the cell is empty."""
    p, n = Q.p, Q.n
    mask = _as_mask(A, p, n)
    pts = Q.domain.points()
    L = reduce(np.asarray(L, dtype=np.int64).reshape(Q.d, n), p)
    vals = (Q.eval(pts) + pts @ L.T) % p if Q.d else np.zeros((len(pts), 0), dtype=np.int64)
    cell = np.all(vals == reduce(a, p).reshape(Q.d), axis=1)
    if not cell.any():
        raise ValueError("empty level set")
    inA = mask[point_index((pts + reduce(x, p)) % p, p)]
    return Fraction(int(np.sum(cell & inA)), int(cell.sum()))


class _TranslateTable:
    """``M[x, h] = 1_A(x + h)`` for every ambient ``x`` and ``h`` in ``H``."""

    def __init__(self, mask: np.ndarray, H: Subspace):
        p, n = H.p, H.ambient_dim
        self.H = H
        self.ambient = all_points(n, p)
        self.hpts = H.points()
        idx = point_index((self.ambient[:, None, :] + self.hpts[None, :, :]) % p, p)
        self.M = mask[idx].astype(np.float32)


def _labels(Q: QuadTuple, hpts: np.ndarray) -> np.ndarray:
    """Level label of ``(Q + L)(h)`` for every ``h`` and every intrinsic ``L``.

    Shape ``(|H|, p^(k d))``; ``L`` index is lexicographic in the
    concatenated coefficient vectors ``(L_1, ..., L_d)``.
    """
    p, d = Q.p, Q.d
    k = Q.domain.dim
    if d == 0:
        return np.zeros((len(hpts), 1), dtype=np.int64)
    C = coefficient_vectors(k, p)
    F = (Q.domain.coords(hpts) @ C.T) % p  # F[h, l] = l . coords(h)
    qv = Q.eval(hpts)
    nL = p**k
    lab = np.zeros((len(hpts),) + (nL,) * d, dtype=np.int64)
    for i in range(d):
        vi = (qv[:, i : i + 1] + F) % p
        shape = [len(hpts)] + [1] * d
        shape[1 + i] = nL
        lab = lab * p + vi.reshape(shape)
    return lab.reshape(len(hpts), -1)


def _unpack(Q: QuadTuple, Lidx: int, aidx: int) -> tuple[np.ndarray, np.ndarray]:
    p, d, k = Q.p, Q.d, Q.domain.dim
    nL = p**k
    C = coefficient_vectors(k, p)
    parts = []
    for _ in range(d):
        parts.append(Lidx % nL)
        Lidx //= nL
    parts = parts[::-1]
    L = np.array([Q.domain.lift_form(C[j]) for j in parts], dtype=np.int64).reshape(d, Q.n)
    a = np.zeros(d, dtype=np.int64)
    for i in range(d - 1, -1, -1):
        a[i] = aidx % p
        aidx //= p
    return L, a


def _density_table(table: _TranslateTable, Q: QuadTuple, cols=None):
    p, d = Q.p, Q.d
    lab = _labels(Q, table.hpts)
    nL = lab.shape[1]
    na = p**d
    if cols is not None:
        lab = lab[:, cols]
        nL = lab.shape[1]
    flat = lab + (np.arange(nL) * na)[None, :]
    onehot = np.zeros((len(table.hpts), nL * na), dtype=np.float32)
    rows = np.repeat(np.arange(len(table.hpts)), nL)
    onehot[rows, flat.reshape(-1)] = 1.0
    den = onehot.sum(axis=0)
    counts = table.M @ onehot
    return counts, den


def _best(counts: np.ndarray, den: np.ndarray) -> tuple[int, int, Fraction]:
    """First maximiser (row-major) of ``counts / den`` over nonempty cells.

    Counts and sizes are at most ``|H|``, so distinct ratios differ by at
    least ``|H|^-2`` and the float comparison is exact at these sizes.
    """
    valid = den > 0
    ratio = np.where(valid[None, :], counts / np.where(valid, den, 1)[None, :], -1.0)
    xi, ci = np.unravel_index(int(np.argmax(ratio)), ratio.shape)
    return int(xi), int(ci), Fraction(int(round(counts[xi, ci])), int(round(den[ci])))


def max_level_density(
    A,
    Q: QuadTuple,
    budget: int | None = None,
    mode: str = "exhaustive",
    rng: np.random.Generator | None = None,
    samples: int = 256,
    table: _TranslateTable | None = None,
) -> DensityWitness:
    """``delta_Q(A)``: best density of a translate of ``A`` in a shifted level set.

    The search order is translate, then ``L``, then ``a`` (each
    lexicographic); the first maximiser is returned. In ``"sampled"`` mode
    only ``samples`` random choices of ``L`` are tried and the witness is a
    flagged lower bound.
    """
    p, n, d = Q.p, Q.n, Q.d
    k = Q.domain.dim
    if table is None:
        table = _TranslateTable(_as_mask(A, p, n), Q.domain)
    nL = p ** (k * d)
    cols = None
    if mode == "exhaustive":
        _budget.check("density", p**n * nL * p**d * max(1, len(table.hpts)), budget)
    elif mode == "sampled":
        if rng is None:
            rng = np.random.default_rng(0)
        if nL > samples:
            cols = np.sort(rng.choice(nL, size=samples, replace=False))
    else:
        raise ValueError(f"unknown mode {mode!r}")
    counts, den = _density_table(table, Q, cols)
    xi, ci, val = _best(counts, den)
    Lidx, aidx = divmod(ci, p**d)
    if cols is not None:
        Lidx = int(cols[Lidx])
    L, a = _unpack(Q, Lidx, aidx)
    return DensityWitness(
        val,
        tuple(int(v) for v in table.ambient[xi]),
        tuple(tuple(int(v) for v in r) for r in L),
        tuple(int(v) for v in a),
        sampled=mode == "sampled" and cols is not None,
    )


def check_density_preservation(A, Q: QuadTuple, q: QuadraticPoly, budget: int | None = None) -> dict:
    """Hard check that appending ``q`` never lowers the maximal density."""
    before = max_level_density(A, Q, budget).delta
    after = max_level_density(A, Q.append(q), budget).delta
    ok = after >= before
    if not ok:
        raise AssertionError(f"density dropped: {after} < {before}")
    return {"before": before, "after": after, "pass": ok}


# ---------------------------------------------------------------- partitioning


@dataclass
class PartitionResult:
    new_domain: Subspace
    new_tuple: QuadTuple
    stats: dict = field(default_factory=dict)


def _coset_reps(points: np.ndarray, K: Subspace) -> np.ndarray:
    """Canonical representative index of ``x + K`` for each point ``x``."""
    p = K.p
    if K.dim == 0:
        return point_index(points, p)
    reps = (points - K.coords(points) @ K.basis) % p
    return point_index(reps, p)


def _best_coset(inA: np.ndarray, cell: np.ndarray, reps: np.ndarray):
    """Representative index of the coset maximising the cell density."""
    keys, inv = np.unique(reps, return_inverse=True)
    num = np.bincount(inv, weights=(inA & cell).astype(np.int64), minlength=len(keys))
    den = np.bincount(inv, weights=cell.astype(np.int64), minlength=len(keys))
    best = None
    for j in range(len(keys)):
        if den[j] == 0:
            continue
        val = Fraction(int(num[j]), int(den[j]))
        if best is None or val > best[1]:
            best = (j, val)
    return int(np.argmax(inv == best[0])), best[1]


class _Witness:
    """Mutable witness data tracked through the partitioning recursion."""

    def __init__(self, x, L, a):
        self.x = np.array(x, dtype=np.int64)
        self.L = np.array(L, dtype=np.int64).reshape(len(a), -1)
        self.a = np.array(a, dtype=np.int64)

    def shift(self, Q: QuadTuple, t: np.ndarray) -> None:
        """Re-express the cell on ``t + K`` as a cell on ``K``."""
        p = Q.p
        # q(t + k) + L(t + k) = q(k) + (L + 2 t^T B) k + q(t) - c + L t
        const = (Q.eval(t) - Q.cs + self.L @ t) % p
        self.L = (self.L + 2 * np.einsum("i,kij->kj", t, Q.Bs)) % p
        self.a = (self.a - const) % p
        self.x = (self.x + t) % p

    def cell(self, Q: QuadTuple, pts: np.ndarray, mask: np.ndarray):
        p = Q.p
        if Q.d:
            vals = (Q.eval(pts) + pts @ self.L.T) % p
            cell = np.all(vals == self.a, axis=1)
        else:
            cell = np.ones(len(pts), dtype=bool)
        inA = mask[point_index((pts + self.x) % p, p)]
        return inA, cell


def high_rank_partition(Q: QuadTuple, R: int, sets, budget: int | None = None) -> PartitionResult:
    """Pass to a subspace on which a sub-tuple of ``Q`` has rank at least ``R``.

    Every maximal density is preserved, the codimension grows by at most
    ``(R + r - 1) d`` and the number of forms does not grow. All four
    guarantees are asserted on the result.
    """
    p, n = Q.p, Q.n
    masks = [_as_mask(A, p, n) for A in sets]
    r = len(masks)
    start = [max_level_density(A, Q, budget) for A in sets]
    wits = [_Witness(w.x, w.L, w.a) for w in start]
    H0 = Q.domain
    polys = list(Q.polys)
    H = H0
    levels = []
    while True:
        cur = QuadTuple(polys, H, p, n)
        cert = tuple_rank(cur)
        if cur.d == 0 or cert.rank >= R:
            break
        lam = np.array(cert.minimizing_lambda, dtype=np.int64)
        j = int(np.flatnonzero(lam)[-1])
        order = [i for i in range(cur.d) if i != j] + [j]
        polys = [polys[i] for i in order]
        for w in wits:
            w.L, w.a = w.L[order], w.a[order]
        lam = (lam[order] * (-fp_inv(int(lam[j]), p))) % p  # last entry is now -1
        cur = QuadTuple(polys, H, p, n)
        B_lam = np.einsum("i,ijk->jk", lam, cur.Bs) % p
        K = kernel((H.basis @ B_lam) % p, H)
        hpts = H.points()
        reps = _coset_reps(hpts, K)
        for m, w in zip(masks, wits):
            inA, cell = w.cell(cur, hpts, m)
            pos, val = _best_coset(inA, cell, reps)
            w.shift(cur, hpts[pos])
            onK = QuadTuple(polys, K, p, n)
            got = Fraction(*map(int, _ratio(w, onK, m)))
            if got != val:
                raise AssertionError("witness rewrite on the radical is inconsistent")
        # the last form is an affine function of the others on K
        kpts = K.points()
        onK = QuadTuple(polys, K, p, n)
        lam_head = lam[:-1]
        forms, consts = [], []
        basis_pts = np.vstack([np.zeros((1, n), dtype=np.int64), K.basis])
        for w in wits:
            vals = (onK.eval(basis_pts) + basis_pts @ w.L.T) % p
            g = (vals[:, -1] - vals[:, :-1] @ lam_head) % p
            ell = (g[1:] - g[0]) % p
            forms.append(K.lift_form(ell))
            consts.append(int((w.a[-1] - w.a[:-1] @ lam_head - g[0]) % p))
        Khat = kernel(np.array(forms, dtype=np.int64).reshape(r, n), K) if r else K
        reps = _coset_reps(kpts, Khat)
        for m, w in zip(masks, wits):
            inA, cell = w.cell(onK, kpts, m)
            pos, val = _best_coset(inA, cell, reps)
            w.shift(onK, kpts[pos])
            w.L, w.a = w.L[:-1], w.a[:-1]
        polys = polys[:-1]
        levels.append({"radical_codim": H.dim - K.dim, "slice_codim": K.dim - Khat.dim})
        H = Khat
    out = QuadTuple(polys, H, p, n)
    final = [max_level_density(A, out, budget) for A in sets]
    rank_out = tuple_rank(out).rank
    codim = H0.dim - H.dim
    for s, f in zip(start, final):
        if f.delta < s.delta:
            raise AssertionError(f"density not preserved: {f.delta} < {s.delta}")
    if rank_out < R:
        raise AssertionError(f"rank {rank_out} below {R}")
    if codim > (R + r - 1) * Q.d:
        raise AssertionError(f"codimension {codim} exceeds {(R + r - 1) * Q.d}")
    if out.d > Q.d:
        raise AssertionError("number of forms grew")
    stats = {
        "codim_increase": codim,
        "d_out": out.d,
        "rank_achieved": rank_out,
        "levels": levels,
        "density_before": [s.delta for s in start],
        "density_after": [f.delta for f in final],
        "witnesses": final,
    }
    return PartitionResult(H, out, stats)


def _ratio(w: _Witness, Q: QuadTuple, mask: np.ndarray) -> tuple[int, int]:
    inA, cell = w.cell(Q, Q.domain.points(), mask)
    return int(np.sum(inA & cell)), int(cell.sum())


# ------------------------------------------------------------ classification


def zero_set_size(Q: QuadTuple) -> int:
    return int(level_mask(Q, np.zeros(Q.d, dtype=np.int64), Q.domain.points()).sum())


def classify(A, Q: QuadTuple, alpha: Fraction, beta: Fraction, budget: int | None = None) -> dict:
    """Tag ``A`` as sparse, dense expanding or dense non-expanding.

    Uses exact rational comparisons; the expansion set has ``y`` in
    ``H cap Q^{-1}(0)`` and ``x`` anywhere in F_p^n.
    """
    alpha, beta = Fraction(alpha), Fraction(beta)
    w = max_level_density(A, Q, budget)
    if w.delta < alpha:
        return {"tag": SPARSE, "delta": w.delta, "witness": w}
    E = len(expansion_set(A, Q))
    Z = zero_set_size(Q)
    tag = EXPANDING if E > (1 - beta) * Z else NON_EXPANDING
    return {"tag": tag, "delta": w.delta, "witness": w, "expansion": E, "zero_set": Z}


def homogeneous_forms(H: Subspace):
    """Every homogeneous quadratic form on ``H``, lifted to ambient coordinates.

    Yields ``QuadraticPoly`` objects in lexicographic order of the upper
    triangle of the intrinsic symmetric matrix.
    """
    p, k, n = H.p, H.dim, H.ambient_dim
    iu = np.triu_indices(k)
    E = np.zeros((n, k), dtype=np.int64)
    E[list(H.pivots), np.arange(k)] = 1
    for coeffs in coefficient_vectors(len(iu[0]), p):
        S = np.zeros((k, k), dtype=np.int64)
        S[iu] = coeffs
        # x^T S x with S upper triangular: symmetrise over F_p
        yield QuadraticPoly.from_matrix(E @ S @ E.T, None, 0, p)


def find_increment(
    A,
    Q: QuadTuple,
    gain_threshold: Fraction = Fraction(0),
    budget: int | None = None,
    mode: str = "exhaustive",
    rng: np.random.Generator | None = None,
    samples: int = 2000,
):
    """Best homogeneous ``q`` for the gain ``delta_{Q,q}(A) - delta_Q(A)``.

    Linear parts need not be searched: the density already maximises over
    linear shifts. Returns ``(q, gain)`` when the gain reaches
    ``gain_threshold`` and ``None`` otherwise.
    """
    p, n = Q.p, Q.n
    H = Q.domain
    k = H.dim
    total = p ** (k * (k + 1) // 2)
    table = _TranslateTable(_as_mask(A, p, n), H)
    base = max_level_density(A, Q, budget, table=table).delta
    if mode == "exhaustive":
        _budget.check("quadratic_search", total, budget)
        candidates = homogeneous_forms(H)
    else:
        if rng is None:
            rng = np.random.default_rng(0)
        forms = list(homogeneous_forms(H)) if total <= 10 * samples else None
        if forms is not None:
            pick = np.sort(rng.choice(total, size=min(samples, total), replace=False))
            candidates = [forms[i] for i in pick]
        else:
            from .quadsets import random_quadratic

            candidates = []
            for _ in range(samples):
                q = random_quadratic(rng, n, p, homogeneous=True)
                candidates.append(q)
    best_q, best_val = None, None
    for q in candidates:
        val = max_level_density(A, Q.append(q), budget, table=table).delta
        if best_val is None or val > best_val:
            best_q, best_val = q, val
            if val == 1:
                break
    gain = best_val - base
    if gain < Fraction(gain_threshold) or best_q is None:
        return None
    return best_q, gain


# ------------------------------------------------------------------ driver


@dataclass
class IterationState:
    m: int
    H: Subspace
    Q: QuadTuple
    classifications: list
    density_sum: Fraction

    def summary(self) -> dict:
        return {
            "m": self.m,
            "d": self.Q.d,
            "codim": self.H.codim,
            "rank": _rank_repr(tuple_rank(self.Q).rank),
            "classifications": [c["tag"] for c in self.classifications],
            "densities": [str(c["delta"]) for c in self.classifications],
            "density_sum": str(self.density_sum),
        }


def _rank_repr(R):
    return "inf" if R == math.inf else int(R)


def check_stage(state: IterationState, R: int, r: int) -> None:
    """Stage bookkeeping and the dimension bound forced by a trivial zero set."""
    m, d = state.m, state.Q.d
    if d > m:
        raise AssertionError(f"stage {m}: d = {d} exceeds m")
    if tuple_rank(state.Q).rank < R:
        raise AssertionError(f"stage {m}: rank below {R}")
    if state.H.codim > (R + r - 1) * m * (m + 1) // 2:
        raise AssertionError(f"stage {m}: codimension {state.H.codim} too large")
    if zero_set_size(state.Q) == 1 and state.H.dim > 2 * d:
        raise AssertionError(f"stage {m}: trivial zero set with dim H = {state.H.dim} > 2d")


def sparsity_expansion_iterate(
    sets,
    alpha,
    beta,
    R: int,
    p: int = 3,
    n: int | None = None,
    gain_threshold: Fraction = Fraction(0),
    max_stages: int = 16,
    budget: int | None = None,
) -> tuple[IterationState, dict]:
    """Run the density increment until no set is dense and non-expanding.

    Returns the final state and a certificate recording ``(H, Q)`` and a
    verdict per set. Raises :class:`IncrementNotFound` when a dense
    non-expanding set remains but no quadratic with enough gain exists.
    """
    alpha, beta = Fraction(alpha), Fraction(beta)
    sets = [reduce(np.asarray(A, dtype=np.int64).reshape(-1, n), p) for A in sets]
    r = len(sets)
    H = Subspace.full(p, n)
    Q = QuadTuple([], H, p, n)
    trace = []
    m = 0
    prev_sum = None
    while True:
        cls = [classify(A, Q, alpha, beta, budget) for A in sets]
        dsum = sum((c["delta"] for c in cls), Fraction(0))
        state = IterationState(m, H, Q, cls, dsum)
        check_stage(state, R, r)
        entry = state.summary()
        if prev_sum is not None and dsum < prev_sum:
            raise AssertionError(f"stage {m}: density sum decreased")
        bad = [i for i, c in enumerate(cls) if c["tag"] == NON_EXPANDING]
        if not bad:
            entry["action"] = "terminate"
            trace.append(entry)
            cert = make_certificate(state, sets, alpha, beta, R)
            verify_certificate(cert)
            return state, {"certificate": cert, "trace": trace}
        if m >= max_stages:
            entry["action"] = "stage limit"
            trace.append(entry)
            raise IncrementNotFound("stage limit reached", state=state, trace=trace)
        i = bad[0]
        found = find_increment(sets[i], Q, gain_threshold, budget)
        if found is None:
            entry["action"] = f"no increment for set {i}"
            trace.append(entry)
            raise IncrementNotFound(f"no quadratic increment for set {i}", state=state, trace=trace)
        q, gain = found
        entry["action"] = f"increment set {i}"
        entry["gain"] = str(gain)
        trace.append(entry)
        part = high_rank_partition(Q.append(q), R, sets, budget)
        H, Q = part.new_domain, part.new_tuple
        prev_sum = dsum
        m += 1


def make_certificate(state: IterationState, sets, alpha, beta, R) -> dict:
    verdicts = []
    for c in state.classifications:
        verdicts.append("sparse" if c["tag"] == SPARSE else "expanding")
    return {
        "p": state.Q.p,
        "n": state.Q.n,
        "alpha": str(Fraction(alpha)),
        "beta": str(Fraction(beta)),
        "rank": R,
        "stage": state.m,
        "tuple": state.Q.to_dict(),
        "sets": [np.asarray(A).tolist() for A in sets],
        "verdicts": verdicts,
    }


def verify_certificate(cert: dict) -> dict:
    """Recompute each verdict from the raw definitions.

    A sparse set needs ``|A cap H cap Q^{-1}(0)| < alpha |H cap Q^{-1}(0)|``;
    an expanding set needs more than ``(1 - beta) |H cap Q^{-1}(0)|``
    differences ``y`` in the zero set with ``x, x+y, x+2y`` all in ``A``.
    The check loops over points directly and does not reuse the driver.
    """
    p, n = int(cert["p"]), int(cert["n"])
    alpha, beta = Fraction(cert["alpha"]), Fraction(cert["beta"])
    from .io import tuple_from_dict

    Q = tuple_from_dict(cert["tuple"])
    H = Q.domain
    zero = [tuple(x) for x in H.points() if not np.any(Q.eval(x))] if Q.d else [tuple(x) for x in H.points()]
    Z = len(zero)
    results = []
    for A, verdict in zip(cert["sets"], cert["verdicts"]):
        Aset = {tuple(int(v) % p for v in pt) for pt in np.asarray(A, dtype=np.int64).reshape(-1, n)}
        if verdict == "sparse":
            inside = sum(1 for z in zero if z in Aset)
            ok = inside < alpha * Z
        elif verdict == "expanding":
            E = 0
            for y in zero:
                for x in Aset:
                    x1 = tuple((a + b) % p for a, b in zip(x, y))
                    x2 = tuple((a + 2 * b) % p for a, b in zip(x, y))
                    if x1 in Aset and x2 in Aset:
                        E += 1
                        break
            ok = E > (1 - beta) * Z
        else:
            ok = False
        results.append(bool(ok))
    rank = tuple_rank(Q).rank
    rank_ok = rank >= int(cert["rank"])
    if not all(results) or not rank_ok:
        raise AssertionError(f"certificate failed: sets {results}, rank ok {rank_ok}")
    return {"sets": results, "rank": _rank_repr(rank), "zero_set": Z}
