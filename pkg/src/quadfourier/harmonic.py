"""Fourier analysis on a subspace H of F_p^n.

Functions on ``H`` are stored as value arrays indexed by the enumeration
order of ``H`` (lexicographic in the RREF basis coefficients). The dual of
``H`` is indexed the same way: position ``j`` holds the form whose values on
the basis vectors are the ``j``-th coefficient vector. Forms handed back to
callers are lifted to ambient covectors with :meth:`Subspace.lift_form`.

Transform convention: ``fhat(l) = sum_x f(x) e_p(l x)`` with
``e_p(t) = exp(2 pi i t / p)``.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from . import budget as _budget
from . import records
from .errors import EmptySet, SupportViolation
from .gf import Subspace, coefficient_vectors, point_index, reduce


class DenseFunction:
    """A complex-valued function on a subspace (or coset) ``H``."""

    __slots__ = ("domain", "values", "_points")

    def __init__(self, domain: Subspace, values):
        values = np.asarray(values)
        if values.dtype.kind not in "iubfc":
            raise TypeError("values must be numeric")
        if values.shape != (domain.size,):
            raise ValueError(f"expected {domain.size} values, got shape {values.shape}")
        self.domain = domain
        self.values = values
        self._points = None

    @classmethod
    def zeros(cls, domain: Subspace) -> "DenseFunction":
        return cls(domain, np.zeros(domain.size, dtype=complex))

    @classmethod
    def constant(cls, domain: Subspace, c=1.0) -> "DenseFunction":
        return cls(domain, np.full(domain.size, c, dtype=complex))

    @classmethod
    def indicator(cls, domain: Subspace, points) -> "DenseFunction":
        """``1_S`` for a point set ``S`` contained in ``domain``."""
        vals = np.zeros(domain.size, dtype=np.int64)
        pts = reduce(points, domain.p).reshape(-1, domain.ambient_dim)
        if len(pts):
            if not np.all(domain.contains(pts)):
                raise SupportViolation("indicator set is not contained in the domain")
            vals[position(domain, pts)] = 1
        return cls(domain, vals)

    @classmethod
    def from_callable(cls, domain: Subspace, fn) -> "DenseFunction":
        pts = domain.points()
        return cls(domain, np.asarray([fn(x) for x in pts]))

    @property
    def p(self) -> int:
        return self.domain.p

    @property
    def points(self) -> np.ndarray:
        if self._points is None:
            self._points = self.domain.points()
        return self._points

    @property
    def is_integer(self) -> bool:
        return self.values.dtype.kind in "iu"

    def complex_values(self) -> np.ndarray:
        return self.values.astype(complex)

    def support_mask(self) -> np.ndarray:
        return self.values != 0

    def support(self) -> np.ndarray:
        return self.points[self.support_mask()]

    def is_bounded(self, tol: float = 1e-12) -> bool:
        return bool(np.all(np.abs(self.values) <= 1 + tol))

    def l2_norm(self) -> float:
        return math.sqrt(float(np.sum(np.abs(self.values) ** 2)))

    def with_values(self, values) -> "DenseFunction":
        return DenseFunction(self.domain, values)

    def conj(self) -> "DenseFunction":
        return self.with_values(np.conj(self.values))

    def __mul__(self, other: "DenseFunction") -> "DenseFunction":
        _same_domain(self, other)
        return self.with_values(self.values * other.values)

    def __sub__(self, other: "DenseFunction") -> "DenseFunction":
        _same_domain(self, other)
        return self.with_values(self.values - other.values)

    def __repr__(self) -> str:
        return f"DenseFunction(domain={self.domain!r}, size={self.values.size})"

    def to_dict(self) -> dict:
        v = self.complex_values()
        return {
            "domain": self.domain.to_dict(),
            "values": [[float(z.real), float(z.imag)] for z in v],
        }

    @classmethod
    def from_dict(cls, d: dict, p: int | None = None) -> "DenseFunction":
        domain = Subspace.from_dict(d["domain"], p)
        if "indicator" in d:
            pts = np.asarray(d["indicator"], dtype=np.int64).reshape(-1, domain.ambient_dim)
            return cls.indicator(domain, pts)
        vals = np.asarray(d["values"], dtype=float)
        if vals.ndim == 2:
            vals = vals[:, 0] + 1j * vals[:, 1]
        return cls(domain, vals)


class DualFunction:
    """Values of a Fourier transform, indexed like the domain's points."""

    __slots__ = ("domain", "values")

    def __init__(self, domain: Subspace, values):
        self.domain = domain
        self.values = np.asarray(values)

    def forms(self) -> np.ndarray:
        """The ambient covector for every dual index."""
        return self.domain.lift_form(coefficient_vectors(self.domain.dim, self.domain.p))


def _same_domain(f: DenseFunction, g: DenseFunction) -> None:
    if f.domain != g.domain:
        raise ValueError("functions live on different domains")


def position(domain: Subspace, points) -> np.ndarray:
    """Enumeration index of each point of ``domain``."""
    return point_index(domain.coords(points), domain.p)


@lru_cache(maxsize=16)
def _char_matrix(p: int, sign: int) -> np.ndarray:
    j = np.arange(p)
    W = np.exp(sign * 2j * np.pi * np.outer(j, j) / p)
    W.setflags(write=False)
    return W


def tensor_transform(values: np.ndarray, k: int, p: int, sign: int = 1) -> np.ndarray:
    """Apply the p-point character matrix along each of the last ``k`` axes.

    ``values`` has shape ``(..., p**k)``; the output has the same shape. One
    pass per coordinate gives ``O(|H| k p)`` work per transform.
    """
    lead = values.shape[:-1]
    v = np.asarray(values, dtype=complex).reshape(lead + (p,) * k)
    W = _char_matrix(p, sign)
    for ax in range(len(lead), len(lead) + k):
        v = np.moveaxis(np.tensordot(v, W, axes=([ax], [0])), -1, ax)
    return v.reshape(lead + (p**k,))


def _require_group(f: DenseFunction) -> None:
    if f.domain.is_coset:
        raise ValueError("Fourier analysis needs a linear subspace as domain")


def dft(f: DenseFunction, budget: int | None = None) -> DualFunction:
    _require_group(f)
    _budget.check("points", f.domain.size, budget)
    return DualFunction(f.domain, tensor_transform(f.values, f.domain.dim, f.p, +1))


def inverse_dft(F: DualFunction) -> DenseFunction:
    H = F.domain
    vals = tensor_transform(F.values, H.dim, H.p, -1) / H.size
    return DenseFunction(H, vals)


@lru_cache(maxsize=32)
def _addition_table(k: int, p: int) -> np.ndarray:
    C = coefficient_vectors(k, p)
    table = point_index((C[:, None, :] + C[None, :, :]) % p, p)
    table.setflags(write=False)
    return table


def addition_table(H: Subspace) -> np.ndarray:
    """``T[i, j]`` is the index of ``point_i + point_j`` in ``H``."""
    return _addition_table(H.dim, H.p)


def shift_index(H: Subspace, h) -> np.ndarray:
    """Index of ``x + h`` for every point ``x`` of ``H`` (``h`` in ``H``)."""
    C = coefficient_vectors(H.dim, H.p)
    hc = H.linear_part().coords(h)
    return point_index((C + hc) % H.p, H.p)


def u2_norm(f: DenseFunction, method: str = "fourier") -> float:
    """``||f||_{U^2}``; ``method="direct"`` evaluates the defining triple sum."""
    return float(u2_fourth_power(f, method)) ** 0.25


def u2_fourth_power(f: DenseFunction, method: str = "fourier") -> float:
    _require_group(f)
    v = f.complex_values()
    N = v.size
    if method == "fourier":
        fh = tensor_transform(v, f.domain.dim, f.p)
        return max(float(np.sum(np.abs(fh) ** 4)) / N, 0.0)
    if method != "direct":
        raise ValueError(f"unknown method {method!r}")
    _budget.check("u2_direct", N)
    T = addition_table(f.domain)
    A1 = v[:, None] * np.conj(v[T])  # f(x) conj f(x+h1), indexed [x, h1]
    total = 0j
    for h2 in range(N):
        b = np.conj(v[T[:, h2]])  # conj f(x+h2)
        c = v[T[T, h2]]  # f(x+h1+h2)
        total += np.sum(A1 * b[:, None] * c)
    return max(float(total.real), 0.0)


def u3_norm(f: DenseFunction, budget: int | None = None) -> float:
    return u3_eighth_power(f, budget) ** 0.125


def u3_eighth_power(f: DenseFunction, budget: int | None = None) -> float:
    """``sum_h ||Delta_h f||_{U^2}^4`` using the Fourier form of each term."""
    _require_group(f)
    N = f.domain.size
    _budget.check("u3", N, budget)
    v = f.complex_values()
    T = addition_table(f.domain)
    k, p = f.domain.dim, f.p
    chunk = max(1, 2**20 // N)
    total = 0.0
    for start in range(0, N, chunk):
        rows = T[start : start + chunk]  # rows[h, x] = index of x + h
        D = v[None, :] * np.conj(v[rows])
        Dh = tensor_transform(D, k, p)
        total += float(np.sum(np.sum(np.abs(Dh) ** 4, axis=1) / N))
    return max(total, 0.0)


def difference_fn(f: DenseFunction, h) -> DenseFunction:
    """``Delta_h f(x) = f(x) conj(f(x + h))``."""
    _require_group(f)
    if not f.domain.contains(h):
        raise ValueError("shift must lie in the domain")
    idx = shift_index(f.domain, h)
    v = f.values
    if f.is_integer:
        return f.with_values(v * v[idx])
    return f.with_values(v * np.conj(v[idx]))


def spectrum(f: DenseFunction, K: float) -> np.ndarray:
    """Ambient forms ``l`` with ``|fhat(l)| >= K``, in enumeration order."""
    if K <= 0:
        raise ValueError("K must be positive")
    F = dft(f)
    mask = np.abs(F.values) >= K
    return F.forms()[mask]


class UniformityReport:
    __slots__ = ("density", "epsilon", "max_witness", "size")

    def __init__(self, density: float, epsilon: float, max_witness, size: int):
        self.density = density
        self.epsilon = epsilon
        self.max_witness = max_witness
        self.size = size

    def __repr__(self) -> str:
        return (
            f"UniformityReport(density={self.density:.6g}, epsilon={self.epsilon:.6g}, "
            f"max_witness={None if self.max_witness is None else self.max_witness.tolist()})"
        )


def fourier_uniformity(phi, H: Subspace) -> UniformityReport:
    """Largest nontrivial normalised Fourier coefficient of ``1_phi`` on ``H``."""
    pts = reduce(phi, H.p).reshape(-1, H.ambient_dim)
    if len(pts) == 0:
        raise EmptySet("Fourier uniformity of the empty set is undefined")
    ind = DenseFunction.indicator(H, pts)
    size = int(ind.values.sum())
    F = dft(ind)
    mags = np.abs(F.values) / size
    if H.size == 1:
        return UniformityReport(1.0, 0.0, None, size)
    nontrivial = mags[1:]
    eps = float(nontrivial.max())
    j = 1 + int(np.nonzero(nontrivial >= eps - 1e-12)[0][0])
    witness = F.forms()[j]
    return UniformityReport(size / H.size, eps, witness, size)


def _check_support(f: DenseFunction, phi) -> np.ndarray:
    ind = DenseFunction.indicator(f.domain, phi).values.astype(bool)
    if np.any(f.support_mask() & ~ind):
        raise SupportViolation("supp(f) is not contained in the given set")
    return ind


def check_spectral_estimate(f: DenseFunction, phi, K: float, eps: float | None = None) -> records.Check:
    """Large-spectrum cardinality against ``2 |phi| ||f||_2^2 / K^2``."""
    ind = _check_support(f, phi)
    size = int(ind.sum())
    if eps is None:
        eps = fourier_uniformity(phi, f.domain).epsilon
    norm2 = f.l2_norm()
    threshold = math.sqrt(2 * eps * size) * norm2
    rhs = 2 * size * norm2**2 / K**2
    lhs = len(spectrum(f, K))
    detail = {"K": K, "epsilon": eps, "threshold": threshold, "phi_size": size}
    if K < threshold:
        return records.Check("spectral-estimate", lhs, rhs, records.PRECONDITION, detail=detail)
    return records.hard("spectral-estimate", lhs, rhs, lhs <= rhs * (1 + 1e-9) + 1e-9, **detail)


def check_restriction(f: DenseFunction, phi, q_exp: float, eps: float | None = None) -> records.Check:
    """Measured constant in the restriction estimate on a Fourier uniform set."""
    if q_exp <= 2:
        raise ValueError("the restriction exponent must exceed 2")
    ind = _check_support(f, phi)
    size = int(ind.sum())
    if eps is None:
        eps = fourier_uniformity(phi, f.domain).epsilon
    G = f.domain.size
    lhs = float(np.mean(np.abs(dft(f).values) ** q_exp))
    norm2 = f.l2_norm()
    rhs = norm2**q_exp * size ** (q_exp / 2) * (1 / G + eps ** (q_exp / 2 - 1) / size)
    ratio = 0.0 if lhs == 0 else lhs / rhs
    return records.report("restriction-estimate", lhs, rhs, ratio, q=q_exp, epsilon=eps)


def u2_inverse_witness(f: DenseFunction, phi) -> tuple[np.ndarray, float]:
    """The character most correlated with ``f`` and the correlation size."""
    _check_support(f, phi)
    F = dft(f)
    mags = np.abs(F.values)
    j = int(np.nonzero(mags >= mags.max() - 1e-9)[0][0])
    return F.forms()[j], float(mags[j])


def u2_inverse_check(f: DenseFunction, phi, c: float = 0.5) -> records.Check:
    """Compare the best correlation with ``c * eta^4 * |phi|``.

    ``eta`` is ``||f||_{U^2} / ||1_phi||_{U^2}``. The uniformity hypothesis
    ``epsilon <= density^2`` is recorded in ``detail``; the caller decides
    whether the comparison is a hard assertion for its instance family.
    """
    ind = _check_support(f, phi)
    size = int(ind.sum())
    rep = fourier_uniformity(phi, f.domain)
    eta = u2_norm(f) / u2_norm(DenseFunction(f.domain, ind.astype(np.int64)))
    form, corr = u2_inverse_witness(f, phi)
    rhs = c * eta**4 * size
    return records.hard(
        "u2-inverse",
        corr,
        rhs,
        corr >= rhs - 1e-9,
        eta=eta,
        hypothesis=rep.epsilon <= rep.density**2,
        witness=form.tolist(),
    )
