from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quadfourier import records
from quadfourier.errors import EmptySet, SupportViolation
from quadfourier.gf import Subspace, all_points
from quadfourier.harmonic import (
    DenseFunction,
    check_restriction,
    check_spectral_estimate,
    dft,
    difference_fn,
    fourier_uniformity,
    inverse_dft,
    spectrum,
    u2_fourth_power,
    u2_inverse_check,
    u2_inverse_witness,
    u2_norm,
    u3_norm,
)
from quadfourier.quadsets import level_set, random_quadratic, random_tuple

configs = st.sampled_from([(3, 1), (3, 2), (3, 3), (5, 1), (5, 2), (7, 1)])


def _random_f(rng, H):
    return DenseFunction(H, rng.standard_normal(H.size) + 1j * rng.standard_normal(H.size))


def _naive_dft(f):
    X = f.domain.points()
    phase = np.exp(2j * np.pi * ((X @ X.T) % f.p) / f.p)
    return phase @ f.complex_values()


def test_dft_delta_and_indicator():
    H = Subspace.full(3, 2)
    delta = DenseFunction.indicator(H, [[0, 0]])
    assert np.allclose(dft(delta).values, 1)
    F = dft(DenseFunction.constant(H)).values
    assert F[0] == pytest.approx(9)
    assert np.allclose(F[1:], 0)


@given(configs, st.integers(0, 2**32 - 1))
@settings(max_examples=30, deadline=None)
def test_dft_matches_naive_and_inverts(cfg, seed):
    p, n = cfg
    H = Subspace.full(p, n)
    f = _random_f(np.random.default_rng(seed), H)
    F = dft(f)
    assert np.allclose(F.values, _naive_dft(f), atol=1e-9)
    assert np.allclose(inverse_dft(F).values, f.values, atol=1e-9)


@given(configs, st.integers(0, 2**32 - 1))
@settings(max_examples=30, deadline=None)
def test_parseval(cfg, seed):
    p, n = cfg
    H = Subspace.full(p, n)
    f = _random_f(np.random.default_rng(seed), H)
    lhs = np.sum(np.abs(f.values) ** 2)
    rhs = np.sum(np.abs(dft(f).values) ** 2) / H.size
    assert lhs == pytest.approx(rhs, rel=1e-8)


@given(st.sampled_from([(3, 1), (3, 2), (3, 3), (5, 1), (5, 2)]), st.integers(0, 2**32 - 1))
@settings(max_examples=20, deadline=None)
def test_u2_dual_path(cfg, seed):
    p, n = cfg
    H = Subspace.full(p, n)
    f = _random_f(np.random.default_rng(seed), H)
    assert u2_fourth_power(f, "direct") == pytest.approx(u2_fourth_power(f), rel=1e-8)


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=20, deadline=None)
def test_modulation_covariance(seed):
    rng = np.random.default_rng(seed)
    H = Subspace.full(3, 3)
    f = _random_f(rng, H)
    l0 = rng.integers(0, 3, size=3)
    X = H.points()
    g = f.with_values(f.values * np.exp(2j * np.pi * ((X @ l0) % 3) / 3))
    shifted = dft(f).values[[int(i) for i in ((X + l0) % 3) @ np.array([9, 3, 1])]]
    assert np.allclose(dft(g).values, shifted, atol=1e-9)


def test_u2_examples():
    H1 = Subspace.full(3, 1)
    assert u2_norm(DenseFunction.constant(H1)) == pytest.approx(27**0.25)
    assert u2_norm(DenseFunction.indicator(Subspace.full(3, 2), [[0, 0]])) == pytest.approx(1.0)


def test_u3_examples():
    H1 = Subspace.full(3, 1)
    assert u3_norm(DenseFunction.constant(H1)) == pytest.approx(81**0.125)
    assert u3_norm(DenseFunction.zeros(H1)) == 0


@pytest.mark.parametrize("seed", range(5))
def test_u3_invariant_under_quadratic_phase(seed):
    rng = np.random.default_rng(seed)
    H = Subspace.full(3, 3)
    q = random_quadratic(rng, 3, 3)
    f = DenseFunction(H, np.exp(2j * np.pi * q.eval(H.points()) / 3))
    assert u3_norm(f) == pytest.approx(u3_norm(DenseFunction.constant(H)), rel=1e-9)


def test_u3_matches_definition_small():
    # direct eighth power over (x, h1, h2, h3) on F_3^2
    rng = np.random.default_rng(3)
    H = Subspace.full(3, 2)
    f = _random_f(rng, H)
    X = all_points(2, 3)
    idx = {tuple(x): i for i, x in enumerate(X)}
    v = f.values
    total = 0j
    for x in X:
        for a in X:
            for b in X:
                for c in X:
                    term = 1
                    for eps in np.ndindex(2, 2, 2):
                        y = tuple((x + eps[0] * a + eps[1] * b + eps[2] * c) % 3)
                        val = v[idx[y]]
                        term *= np.conj(val) if sum(eps) % 2 else val
                    total += term
    assert u3_norm(f) ** 8 == pytest.approx(total.real, rel=1e-8)


def test_difference_fn_examples():
    H = Subspace.full(3, 2)
    rng = np.random.default_rng(0)
    f = _random_f(rng, H)
    assert np.allclose(difference_fn(f, [0, 0]).values, np.abs(f.values) ** 2)
    A = H.points()[rng.random(9) < 0.5]
    ind = DenseFunction.indicator(H, A)
    h = np.array([1, 2])
    expected = DenseFunction.indicator(H, [x for x in A if any(np.array_equal((x + h) % 3, a) for a in A)])
    assert np.array_equal(difference_fn(ind, h).values, expected.values)
    ell = np.array([2, 1])
    e = DenseFunction(H, np.exp(2j * np.pi * (H.points() @ ell % 3) / 3))
    assert np.allclose(difference_fn(e, h).values, np.exp(-2j * np.pi * (ell @ h % 3) / 3))


def test_spectrum_examples():
    H = Subspace.full(3, 2)
    phi = H.points()[:4]
    f = DenseFunction.indicator(H, phi)
    assert [0, 0] in spectrum(f, 4).tolist()
    assert len(spectrum(f, 4.5)) == 0
    rng = np.random.default_rng(2)
    g = _random_f(rng, H)
    F = dft(g).values
    K = 0.5 * np.abs(F).max()
    assert np.array_equal(spectrum(g, K), H.points()[np.abs(F) >= K])


def test_fourier_uniformity_examples():
    H = Subspace.full(3, 2)
    assert fourier_uniformity(H.points(), H).epsilon == pytest.approx(0, abs=1e-12)
    assert fourier_uniformity([[1, 2]], H).epsilon == pytest.approx(1)
    hyper = Subspace.span([[1, 0]], 3).coset([0, 1]).points()
    assert fourier_uniformity(hyper, H).epsilon == pytest.approx(1)
    with pytest.raises(EmptySet):
        fourier_uniformity(np.zeros((0, 2), dtype=int), H)


def test_spectral_estimate_zero_and_precondition():
    rng = np.random.default_rng(5)
    Q = random_tuple(rng, 4, 3, 1, min_rank=4)
    phi = level_set(Q)
    H = Q.domain
    zero = DenseFunction.zeros(H)
    assert check_spectral_estimate(zero, phi, 1.0).passed
    f = DenseFunction.indicator(H, phi)
    eps = fourier_uniformity(phi, H).epsilon
    thr = np.sqrt(2 * eps * len(phi)) * f.l2_norm()
    assert check_spectral_estimate(f, phi, thr * 1.01).passed
    assert check_spectral_estimate(f, phi, thr * 0.5).status == records.PRECONDITION


def test_spectral_estimate_support_violation():
    H = Subspace.full(3, 2)
    f = DenseFunction.constant(H)
    with pytest.raises(SupportViolation):
        check_spectral_estimate(f, [[0, 0]], 1.0)


def test_restriction_report():
    rng = np.random.default_rng(7)
    Q = random_tuple(rng, 4, 3, 1, min_rank=4)
    phi = level_set(Q)
    H = Q.domain
    rec = check_restriction(DenseFunction.indicator(H, phi), phi, 4)
    assert rec.status == records.REPORT and np.isfinite(rec.ratio) and rec.ratio > 0
    assert check_restriction(DenseFunction.zeros(H), phi, 4).ratio == 0


def test_u2_inverse():
    rng = np.random.default_rng(8)
    Q = random_tuple(rng, 4, 3, 1, min_rank=4)
    phi = level_set(Q)
    H = Q.domain
    form, corr = u2_inverse_witness(DenseFunction.indicator(H, phi), phi)
    assert not form.any() and corr == pytest.approx(len(phi))
    ell = np.array([1, 0, 2, 1])
    mask = DenseFunction.indicator(H, phi).values
    planted = DenseFunction(H, mask * np.exp(2j * np.pi * (H.points() @ ell % 3) / 3))
    eps = fourier_uniformity(phi, H).epsilon
    _, corr = u2_inverse_witness(planted, phi)
    assert corr >= len(phi) * (1 - eps) - 1e-9
    assert u2_inverse_check(planted, phi).passed


def test_dense_function_dict_roundtrip():
    H = Subspace.span([[1, 1, 0]], 3)
    f = DenseFunction(H, np.array([1.0, 2.0 - 1j, 0.5j]))
    g = DenseFunction.from_dict(f.to_dict())
    assert g.domain == H and np.allclose(g.values, f.values)
