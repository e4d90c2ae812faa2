"""Relative U3 ratios and exhaustive search for correlating quadratic phases."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import budget as _budget
from .errors import EmptyLevelSet, SupportViolation
from .gf import coefficient_vectors
from .harmonic import DenseFunction, tensor_transform, u3_norm
from .quadsets import QuadraticPoly, QuadTuple, level_mask, tuple_rank

QUADRATIC = "quadratic-witness"
LOW_RANK = "low-rank"
NONE_FOUND = "no-witness"


def _zero_mask(Q: QuadTuple) -> np.ndarray:
    return level_mask(Q, np.zeros(Q.d, dtype=np.int64), Q.domain.points())


def _check_support(f: DenseFunction, Q: QuadTuple) -> np.ndarray:
    if f.domain != Q.domain:
        raise ValueError("f must live on the tuple's domain")
    zero = _zero_mask(Q)
    if np.any(f.support_mask() & ~zero):
        raise SupportViolation("supp(f) must lie in Q^{-1}(0)")
    return zero


def u3_relative_ratio(f: DenseFunction, Q: QuadTuple) -> float:
    """``||f||_{U^3} / ||1_{Q^{-1}(0)}||_{U^3}``."""
    zero = _check_support(f, Q)
    if not zero.any():
        raise EmptyLevelSet("Q^{-1}(0) is empty")
    return u3_norm(f) / u3_norm(DenseFunction(Q.domain, zero.astype(np.int64)))


def correlation(f: DenseFunction, q: QuadraticPoly) -> float:
    """``|sum_x f(x) e_p(q(x))|`` evaluated directly."""
    vals = q.eval(f.points)
    return float(abs(np.sum(f.complex_values() * np.exp(2j * np.pi * vals / f.p))))


def low_rank_certificate(Q: QuadTuple, cutoff: int, budget: int | None = None):
    """``(lambda, rank)`` when the tuple rank is at most ``cutoff``, else ``None``."""
    cert = tuple_rank(Q, budget)
    if cert.minimizing_lambda is None or cert.rank > cutoff:
        return None
    return cert.minimizing_lambda, int(cert.rank)


@dataclass
class InverseVerdict:
    """Outcome of a witness search.

    ``branch`` is one of ``quadratic-witness``, ``low-rank`` or
    ``no-witness``. The best polynomial found and its correlation are kept
    in every branch.
    """

    eta: float
    branch: str
    q: QuadraticPoly | None
    correlation: float
    level_size: int
    low_rank: tuple | None = None
    searched: int = 0
    detail: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "eta": self.eta,
            "branch": self.branch,
            "q": None if self.q is None else self.q.to_dict(),
            "correlation": self.correlation,
            "level_size": self.level_size,
            "low_rank": None if self.low_rank is None else {"lambda": list(self.low_rank[0]), "rank": self.low_rank[1]},
            "searched": self.searched,
        }


def _monomials(coords: np.ndarray) -> tuple[np.ndarray, tuple]:
    k = coords.shape[1]
    iu = np.triu_indices(k)
    return coords[:, iu[0]] * coords[:, iu[1]], iu


def quadratic_witness_search(
    f: DenseFunction,
    Q: QuadTuple,
    mode: str = "exhaustive",
    threshold: float = 0.5,
    cutoff: int = 0,
    budget: int | None = None,
    rng: np.random.Generator | None = None,
    samples: int = 4096,
    chunk: int = 2048,
) -> InverseVerdict:
    """Maximise ``|sum_x f(x) e_p(q(x))|`` over quadratics ``q`` on ``H``.

    Homogeneous parts are enumerated (all of them, or ``samples`` random
    ones); for each, every linear part is covered at once by one Fourier
    transform. Constants only rotate the sum and are fixed to 0. A witness
    is reported when the correlation reaches ``threshold * |Q^{-1}(0)|``;
    otherwise the low-rank branch applies when the tuple rank is at most
    ``cutoff``.
    """
    zero = _check_support(f, Q)
    H = Q.domain
    p, k, n = H.p, H.dim, H.ambient_dim
    size = int(zero.sum())
    if size == 0:
        raise EmptyLevelSet("Q^{-1}(0) is empty")
    eta = u3_relative_ratio(f, Q)
    coords = coefficient_vectors(k, p)
    mon, iu = _monomials(coords)
    m = mon.shape[1]
    total = p**m
    if mode == "exhaustive":
        _budget.check("quadratic_search", total, budget)
        order = np.arange(total)
    elif mode == "sampled":
        if rng is None:
            rng = np.random.default_rng(0)
        order = np.sort(rng.choice(total, size=min(samples, total), replace=False))
    else:
        raise ValueError(f"unknown mode {mode!r}")
    fv = f.complex_values()
    char = np.exp(2j * np.pi * np.arange(p) / p)
    best_mag, best_q, best_l = -1.0, None, None
    for start in range(0, len(order), chunk):
        idx = order[start : start + chunk]
        S = coefficient_vectors(m, p)[idx] if m else np.zeros((len(idx), 0), dtype=np.int64)
        phase = (S @ mon.T) % p  # q(x) for each homogeneous q in the chunk
        F = tensor_transform(fv[None, :] * char[phase], k, p)
        mags = np.abs(F)
        top = float(mags.max())
        if top > best_mag + 1e-9:
            j, l = np.argwhere(mags >= top - 1e-9)[0]
            best_mag, best_q, best_l = top, S[j], l
    Ssym = np.zeros((k, k), dtype=np.int64)
    Ssym[iu] = best_q
    E = np.zeros((n, k), dtype=np.int64)
    E[list(H.pivots), np.arange(k)] = 1
    q = QuadraticPoly.from_matrix(E @ Ssym @ E.T, H.lift_form(coords[best_l]), 0, p)
    corr = correlation(f, q)
    if abs(corr - best_mag) > 1e-9 * max(1.0, corr):
        raise AssertionError("witness correlation does not match the transform value")
    low = low_rank_certificate(Q, cutoff) if Q.d else None
    if corr >= threshold * size - 1e-9:
        branch = QUADRATIC
    elif low is not None:
        branch = LOW_RANK
    else:
        branch = NONE_FOUND
    return InverseVerdict(eta, branch, q, corr, size, low, searched=len(order))


def planted_phase(Q: QuadTuple, q_star: QuadraticPoly) -> DenseFunction:
    """``e_p(q*(x)) 1_{Q^{-1}(0)}(x)`` on the tuple's domain."""
    H = Q.domain
    zero = _zero_mask(Q)
    vals = np.exp(2j * np.pi * q_star.eval(H.points()) / H.p) * zero
    return DenseFunction(H, vals)
