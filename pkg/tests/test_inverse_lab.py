from __future__ import annotations

import itertools

import numpy as np
import pytest

from quadfourier.errors import EmptyLevelSet, SupportViolation
from quadfourier.gf import rank
from quadfourier.harmonic import DenseFunction
from quadfourier.inverse_lab import (
    LOW_RANK,
    NONE_FOUND,
    QUADRATIC,
    correlation,
    low_rank_certificate,
    planted_phase,
    quadratic_witness_search,
    u3_relative_ratio,
)
from quadfourier.quadsets import (
    QuadraticPoly,
    QuadTuple,
    level_mask,
    random_quadratic,
    random_tuple,
    tuple_rank,
)


def _zero_indicator(Q: QuadTuple) -> DenseFunction:
    return DenseFunction(Q.domain, level_mask(Q, np.zeros(Q.d, dtype=int)).astype(np.int64))


@pytest.fixture(scope="module")
def high_rank_f33():
    return QuadTuple([QuadraticPoly(np.eye(3, dtype=int), [1, 0, 2], 0, 3)])


def test_ratio_examples(high_rank_f33):
    Q = high_rank_f33
    one = _zero_indicator(Q)
    assert u3_relative_ratio(one, Q) == pytest.approx(1)
    assert u3_relative_ratio(DenseFunction.zeros(Q.domain), Q) == 0
    rng = np.random.default_rng(0)
    for _ in range(5):
        g = planted_phase(Q, random_quadratic(rng, 3, 3))
        assert u3_relative_ratio(g, Q) == pytest.approx(1, abs=1e-9)


def test_ratio_errors():
    Q = QuadTuple([QuadraticPoly(np.zeros((2, 2), dtype=int), None, 1, 3)])  # Q = 1 has no zeros
    with pytest.raises(EmptyLevelSet):
        u3_relative_ratio(DenseFunction.zeros(Q.domain), Q)
    P = QuadTuple([QuadraticPoly(np.eye(2, dtype=int), p=3)])
    with pytest.raises(SupportViolation):
        u3_relative_ratio(DenseFunction.constant(P.domain), P)


def test_eta_invariances():
    rng = np.random.default_rng(3)
    Q = random_tuple(rng, 3, 3, 1, min_rank=3)
    one = _zero_indicator(Q)
    f = one.with_values(one.values * rng.uniform(-1, 1, Q.domain.size))
    eta = u3_relative_ratio(f, Q)
    assert u3_relative_ratio(f.with_values(f.values * np.exp(0.7j)), Q) == pytest.approx(eta, rel=1e-9)
    # translate by t and move Q along: Q_t(x) = Q(x + t)
    t = np.array([1, 2, 0])
    q = Q.polys[0]
    qt = QuadraticPoly(q.B, (q.L + 2 * q.B @ t) % 3, q.eval(t), 3)
    Qt = QuadTuple([qt])
    pts = Q.domain.points()
    moved = f.with_values(f.values[[int(i) for i in ((pts + t) % 3) @ np.array([9, 3, 1])]])
    assert np.array_equal(level_mask(Qt, [0]), level_mask(Q, [0], (pts + t) % 3))
    assert u3_relative_ratio(moved, Qt) == pytest.approx(eta, rel=1e-9)


def test_search_indicator_gives_zero_witness(high_rank_f33):
    Q = high_rank_f33
    one = _zero_indicator(Q)
    v = quadratic_witness_search(one, Q)
    assert v.branch == QUADRATIC
    assert v.correlation == pytest.approx(v.level_size)
    assert v.q.is_homogeneous() and not v.q.B.any()


@pytest.mark.parametrize("seed", range(5))
def test_search_planted(seed, high_rank_f33):
    Q = high_rank_f33
    rng = np.random.default_rng(seed)
    q_star = random_quadratic(rng, 3, 3)
    f = planted_phase(Q, q_star)
    v = quadratic_witness_search(f, Q)
    assert v.branch == QUADRATIC
    assert v.correlation == pytest.approx(v.level_size, rel=1e-9)
    assert v.eta == pytest.approx(1, abs=1e-6)
    # q + q* is constant on the zero set
    Z = Q.domain.points()[level_mask(Q, [0])]
    vals = (v.q.eval(Z) + q_star.eval(Z)) % 3
    assert len(set(vals.tolist())) == 1


def test_correlation_invariance():
    rng = np.random.default_rng(9)
    Q = random_tuple(rng, 3, 3, 2, min_rank=2)
    one = _zero_indicator(Q)
    f = one.with_values(one.values * rng.uniform(-1, 1, Q.domain.size))
    q = random_quadratic(rng, 3, 3)
    base = correlation(f, q)
    for mu in itertools.product(range(3), repeat=2):
        B = (q.B + sum(m * p.B for m, p in zip(mu, Q.polys))) % 3
        L = (q.L + sum(m * p.L for m, p in zip(mu, Q.polys))) % 3
        c = (q.c + sum(m * p.c for m, p in zip(mu, Q.polys))) % 3
        assert correlation(f, QuadraticPoly(B, L, c, 3)) == pytest.approx(base, abs=1e-9)


def test_null_model_consistent():
    # random signs on a level set: whichever branch fires must be justified
    rng = np.random.default_rng(0)
    Q = random_tuple(rng, 3, 3, 1, min_rank=3)
    one = _zero_indicator(Q)
    signs = rng.choice([-1, 1], size=Q.domain.size)
    f = one.with_values(one.values * signs)
    v = quadratic_witness_search(f, Q, cutoff=0)
    assert 0 <= v.eta <= 1 + 1e-9
    if v.branch == QUADRATIC:
        assert v.correlation >= 0.5 * v.level_size - 1e-9
    else:
        assert v.branch == NONE_FOUND and v.correlation < 0.5 * v.level_size
    assert v.correlation == pytest.approx(correlation(f, v.q))


def test_low_rank_branch():
    b = np.diag([1, 1, 0])
    Q = QuadTuple([QuadraticPoly(b, p=3), QuadraticPoly(2 * b, p=3)])
    one = _zero_indicator(Q)
    rng = np.random.default_rng(1)
    f = one.with_values(one.values * rng.choice([-1, 1], size=27))
    v = quadratic_witness_search(f, Q, threshold=2.0, cutoff=0)
    assert v.branch == LOW_RANK
    assert v.low_rank == ((1, 1), 0)


def test_sampled_mode_bounded_by_exhaustive(high_rank_f33):
    Q = high_rank_f33
    rng = np.random.default_rng(2)
    one = _zero_indicator(Q)
    f = one.with_values(one.values * rng.uniform(-1, 1, 27))
    full = quadratic_witness_search(f, Q)
    part = quadratic_witness_search(f, Q, mode="sampled", samples=50, rng=rng)
    assert part.searched == 50
    assert part.correlation <= full.correlation + 1e-9


def _lambda_loop(Q: QuadTuple):
    best = None
    for lam in itertools.product(range(3), repeat=Q.d):
        if any(lam):
            r = rank(sum(l * b for l, b in zip(lam, Q.Bs)) % 3, 3)
            best = r if best is None else min(best, r)
    return best


def test_low_rank_certificate_examples():
    b = np.array([[1, 1], [1, 0]])
    pair = QuadTuple([QuadraticPoly(b, p=3), QuadraticPoly(2 * b, p=3)])
    assert low_rank_certificate(pair, 0) == ((1, 1), 0)
    single = QuadTuple([QuadraticPoly(np.eye(3, dtype=int), p=3)])
    assert low_rank_certificate(single, 2) is None
    rng = np.random.default_rng(4)
    for _ in range(10):
        Q = random_tuple(rng, 4, 3, 2)
        r = _lambda_loop(Q)
        cert = low_rank_certificate(Q, 4)
        assert cert is not None and cert[1] == r == tuple_rank(Q).rank


def test_verdict_to_dict(high_rank_f33):
    v = quadratic_witness_search(_zero_indicator(high_rank_f33), high_rank_f33)
    d = v.to_dict()
    assert d["branch"] == QUADRATIC and d["level_size"] == v.level_size
    assert d["q"]["B"] == v.q.B.tolist()
