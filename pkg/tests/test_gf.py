from __future__ import annotations

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quadfourier.errors import ZeroInverse
from quadfourier.gf import (
    Subspace,
    all_points,
    annihilator,
    batch_rank,
    check_range,
    coefficient_vectors,
    enumerate_points,
    fp_inv,
    hyperplanes,
    index_to_points,
    kernel,
    nullspace,
    point_index,
    projective_points,
    rank,
    rref,
    solve,
    symmetrize,
)

primes = st.sampled_from([3, 5, 7])


def matrices(max_rows=5, max_cols=5):
    return st.tuples(primes, st.integers(1, max_rows), st.integers(1, max_cols), st.integers(0, 2**32 - 1)).map(
        lambda t: (t[0], np.random.default_rng(t[3]).integers(0, t[0], size=(t[1], t[2])))
    )


@pytest.mark.parametrize(("a", "p", "expected"), [(2, 3, 2), (1, 5, 1), (1, 7, 1), (3, 7, 5), (-1, 5, 4)])
def test_fp_inv_examples(a, p, expected):
    assert fp_inv(a, p) == expected


@pytest.mark.parametrize("p", [3, 5, 7])
def test_fp_inv_all_units(p):
    for a in range(1, p):
        assert a * fp_inv(a, p) % p == 1


def test_fp_inv_zero_raises():
    with pytest.raises(ZeroInverse):
        fp_inv(0, 3)
    with pytest.raises(ZeroDivisionError):
        fp_inv(7, 7)


def test_unsupported_prime():
    with pytest.raises(ValueError):
        Subspace.full(2, 3)


@pytest.mark.parametrize(
    ("M", "p", "expected"),
    [
        (np.eye(3, dtype=int), 3, 3),
        (np.zeros((3, 3), dtype=int), 3, 0),
        ([[1, 2], [2, 4]], 3, 1),
        ([[1, 2], [3, 4]], 5, 2),
        ([[1, 2], [3, 6]], 7, 1),
    ],
)
def test_rank_examples(M, p, expected):
    assert rank(M, p) == expected


@given(matrices())
@settings(max_examples=60, deadline=None)
def test_rank_transpose(pm):
    p, M = pm
    assert rank(M, p) == rank(M.T, p)


@given(matrices())
@settings(max_examples=60, deadline=None)
def test_batch_rank_matches_rref(pm):
    p, M = pm
    stack = np.stack([M, (2 * M) % p, np.zeros_like(M)])
    assert batch_rank(stack, p).tolist() == [rank(M, p), rank(M, p), 0]


@given(matrices())
@settings(max_examples=60, deadline=None)
def test_nullspace_rank_nullity(pm):
    p, M = pm
    N = nullspace(M, p)
    assert len(N) + rank(M, p) == M.shape[1]
    if len(N):
        assert not np.any((M @ N.T) % p)


@given(matrices(), st.integers(0, 2**32 - 1))
@settings(max_examples=60, deadline=None)
def test_solve_consistency(pm, seed):
    p, M = pm
    x = np.random.default_rng(seed).integers(0, p, size=M.shape[1])
    b = (M @ x) % p
    y = solve(M, b, p)
    assert y is not None
    assert np.array_equal((M @ y) % p, b)


def test_solve_inconsistent():
    assert solve([[1, 0], [1, 0]], [0, 1], 3) is None


def test_rref_is_canonical():
    R1, piv1 = rref([[1, 2, 0], [2, 1, 1]], 3)
    R2, piv2 = rref([[0, 0, 1], [1, 2, 1]], 3)
    assert piv1 == piv2 == [0, 2]
    assert np.array_equal(R1, R2)


def test_annihilator_examples():
    full = Subspace.full(3, 2)
    assert annihilator(full) == Subspace.zero(3, 2)
    assert annihilator(Subspace.zero(3, 2)) == full
    assert annihilator(Subspace.span([[1, 0]], 3)) == Subspace.span([[0, 1]], 3)


def _all_subspaces(n: int, p: int):
    seen = set()
    vecs = all_points(n, p)[1:]
    for k in range(n + 1):
        for combo in itertools.combinations(range(len(vecs)), k):
            S = Subspace(p, n, vecs[list(combo)]) if combo else Subspace.zero(p, n)
            if S not in seen:
                seen.add(S)
                yield S


def test_double_annihilator_exhaustive():
    # every subspace of F_3^3, and random ones of F_3^4
    count = 0
    for S in _all_subspaces(3, 3):
        assert annihilator(annihilator(S)) == S
        assert annihilator(S).dim + S.dim == 3
        count += 1
    assert count == 1 + 13 + 13 + 1
    rng = np.random.default_rng(1)
    for _ in range(200):
        k = int(rng.integers(0, 5))
        S = Subspace(3, 4, rng.integers(0, 3, size=(k, 4)))
        assert annihilator(annihilator(S)) == S


@pytest.mark.parametrize("n", [1, 2, 3])
def test_kernel_examples(n):
    full = Subspace.full(3, n)
    assert kernel(np.zeros((0, n), dtype=int), full) == full
    assert kernel(np.eye(n, dtype=int), full) == Subspace.zero(3, n)


def test_kernel_single_form():
    K = kernel([[1, 2, 0]], Subspace.full(3, 3))
    assert K.dim == 2
    assert not np.any((K.points() @ np.array([1, 2, 0])) % 3)


@given(primes, st.integers(1, 4), st.integers(0, 2**32 - 1))
@settings(max_examples=60, deadline=None)
def test_kernel_rank_nullity(p, n, seed):
    rng = np.random.default_rng(seed)
    V = Subspace(p, n, rng.integers(0, p, size=(int(rng.integers(0, n + 1)), n)))
    forms = rng.integers(0, p, size=(int(rng.integers(0, 4)), n))
    K = kernel(forms, V)
    restricted = (forms @ V.basis.T) % p if len(forms) and V.dim else np.zeros((0, 0))
    assert K.dim + rank(restricted, p) == V.dim
    assert K.is_subspace_of(V)


@pytest.mark.parametrize(
    ("M", "expected"),
    [([[1, 2], [2, 0]], [[1, 2], [2, 0]]), ([[0, 1], [0, 0]], [[0, 2], [2, 0]])],
)
def test_symmetrize_examples(M, expected):
    assert symmetrize(M, 3).tolist() == expected


@given(primes, st.integers(1, 4), st.integers(0, 2**32 - 1))
@settings(max_examples=40, deadline=None)
def test_symmetrize_idempotent_and_value_preserving(p, n, seed):
    M = np.random.default_rng(seed).integers(0, p, size=(n, n))
    S = symmetrize(M, p)
    assert np.array_equal(symmetrize(S, p), S)
    X = all_points(n, p)
    vals_M = np.einsum("xi,ij,xj->x", X, M, X) % p
    vals_S = np.einsum("xi,ij,xj->x", X, S, X) % p
    assert np.array_equal(vals_M, vals_S)


def test_enumerate_examples():
    t = np.array([1, 2])
    assert enumerate_points(Subspace.zero(3, 2).coset(t)).tolist() == [[1, 2]]
    assert enumerate_points(Subspace.full(3, 1)).tolist() == [[0], [1], [2]]
    assert enumerate_points(Subspace.span([[1, 1]], 3)).tolist() == [[0, 0], [1, 1], [2, 2]]


@pytest.mark.parametrize(("n", "p"), [(1, 3), (3, 3), (2, 5), (2, 7)])
def test_point_index_roundtrip(n, p):
    X = all_points(n, p)
    assert np.array_equal(point_index(X, p), np.arange(p**n))
    assert np.array_equal(index_to_points(np.arange(p**n), n, p), X)
    assert np.array_equal(coefficient_vectors(n, p), X)


def test_coset_canonical_offset():
    V = Subspace.span([[1, 1, 0]], 3)
    a = V.coset([1, 1, 2])
    b = V.coset([0, 0, 2])
    assert a == b
    assert a.contains([2, 2, 2]) and not a.contains([0, 0, 0])
    assert V.coset([2, 2, 0]) == V
    assert len({tuple(x) for x in a.points()}) == 3


def test_subspace_roundtrip_dict():
    V = Subspace.span([[1, 2, 0], [0, 1, 1]], 5).coset([1, 0, 3])
    assert Subspace.from_dict(V.to_dict()) == V


def test_check_range_rejects():
    with pytest.raises(ValueError):
        check_range([0, 3], 3)
    with pytest.raises(ValueError):
        check_range([-1], 3)
    with pytest.raises(ValueError):
        check_range([1.5], 3)


@pytest.mark.parametrize(("k", "p"), [(1, 3), (2, 3), (3, 5)])
def test_projective_points(k, p):
    P = projective_points(k, p)
    assert len(P) == (p**k - 1) // (p - 1)
    assert len(hyperplanes(p, k)) == len(P)


def test_intersect():
    A = Subspace.span([[1, 0, 0], [0, 1, 0]], 3)
    B = Subspace.span([[0, 1, 0], [0, 0, 1]], 3)
    assert A.intersect(B) == Subspace.span([[0, 1, 0]], 3)


def test_lift_and_restrict_form():
    V = Subspace.span([[1, 2, 0], [0, 0, 1]], 3)
    coeffs = np.array([2, 1])
    form = V.lift_form(coeffs)
    assert np.array_equal(V.restrict_form(form), coeffs)
