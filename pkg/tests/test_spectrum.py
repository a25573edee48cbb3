import logging

import numpy as np
import pytest
from scipy import integrate

from siws.loggrid import LogGrid
from siws.models import PRESETS, CallableComponent, CovarianceModel, covariance, covariance_matrix, lssp
from siws.simulate import sample_paths
from siws.spectrum import (AmbiguityMap, KernelError, UnsupportedModel, ambiguity_mean,
                           ambiguity_second_moment, cohen_tfr, cohen_values, empirical_ambiguity,
                           exact_siws, kernel_asymmetry, kernel_timescale, mean_siws_numeric,
                           optimal_kernel, realify, siwd, siwd_kernel, siwd_values,
                           symmetrize_kernel)


def quad_siws(model, t, xi):
    """Integral of R(t e^(d/2), t e^(-d/2)) exp(-2 pi i xi d) over the log lag d."""
    def f(d, part):
        v = covariance(model, t * np.exp(d / 2), t * np.exp(-d / 2)) * np.exp(-2j * np.pi * xi * d)
        return v.real if part == 0 else v.imag
    re = integrate.quad(f, -30, 30, args=(0,), limit=400, epsabs=1e-13)[0]
    im = integrate.quad(f, -30, 30, args=(1,), limit=400, epsabs=1e-13)[0]
    return re + 1j * im


def naive_cross_term(R, grid):
    """Quadruple loop over (theta, lag, n, n') of the Wick cross term."""
    M = grid.m_count
    theta = grid.padded().xi
    lags = np.arange(-(M - 1), M)
    T = np.zeros((theta.size, lags.size), dtype=complex)
    for q, th in enumerate(theta):
        for i, P in enumerate(lags):
            acc = 0.0
            for n in range(M):
                if not 0 <= n + P < M:
                    continue
                for k in range(M):
                    if not 0 <= k + P < M:
                        continue
                    acc += (R[n + P, k + P] * np.conj(R[n, k])
                            * np.exp(-2j * np.pi * th * (n - k) * grid.delta))
            T[q, i] = grid.delta**2 * acc
    return T


def random_symmetric_kernel(grid, rng):
    M = grid.m_count
    v = rng.uniform(0, 1, (2 * M, 2 * M - 1))
    return symmetrize_kernel(AmbiguityMap(v, "random", grid))


# --------------------------------------------------------------------------
# exact and numeric spectra


def test_exact_siws_origin_value():
    g = LogGrid.centered(0.1, 128)
    W = exact_siws(lssp(0.5, 4), g)
    assert W.values[64, 64] == pytest.approx(np.sqrt(2 * np.pi), rel=1e-14)


@pytest.mark.parametrize("name", ["lssp-c4", "lssp-c20", "lsscp-c7", "mlsscp-c4-10"])
def test_exact_siws_matches_quadrature(name):
    model = PRESETS[name]
    g = LogGrid.centered(0.25, 16)
    W = exact_siws(model, g).values
    for m, j in [(8, 8), (5, 9), (11, 6), (8, 10)]:
        ref = quad_siws(model, g.t[m], g.xi[j])
        assert abs(ref.imag) < 1e-9
        assert W[m, j] == pytest.approx(ref.real, rel=1e-8, abs=1e-12)


def test_exact_siws_decays():
    g = LogGrid.centered(0.05, 64)  # xi reaches +-10
    W = exact_siws(lssp(0.5, 4), g).values
    assert np.max(W[:, 0]) < 1e-80


def test_chirp_ridge_location():
    g = LogGrid(1.0 - 8 * 0.125, 0.125, 16)  # node 8 at t = e
    model = lssp(0.5, 4, a=2, b=0)
    # the quadrature oracle peaks at 1/pi, and so does the closed form on the grid
    row = np.array([quad_siws(model, np.e, x).real for x in (1 / np.pi - 1e-3, 1 / np.pi, 1 / np.pi + 1e-3)])
    assert row[1] > row[0] and row[1] > row[2]
    W = exact_siws(model, g).values[8]
    assert np.argmax(W) == np.argmin(np.abs(g.xi - 1 / np.pi))


def test_exact_siws_rejects_callable():
    comp = CallableComponent(lambda x: x, lambda r: r)
    with pytest.raises(UnsupportedModel):
        exact_siws(CovarianceModel((comp,)), LogGrid.centered(0.2, 8))


def test_mean_siws_numeric_matches_closed_form():
    g = LogGrid.centered(0.1, 128)
    num = mean_siws_numeric(lssp(0.5, 4), g).values
    ex = exact_siws(lssp(0.5, 4), g).values
    c = slice(32, 96)
    assert np.max(np.abs(num[c, c] - ex[c, c]) / np.max(ex[c, c])) <= 1e-6


def test_mean_siws_numeric_zero_and_linear():
    g = LogGrid.centered(0.2, 32)
    z = lambda x: np.zeros_like(x)  # noqa: E731
    assert not np.any(mean_siws_numeric(CovarianceModel((CallableComponent(z, z),)), g).values)
    both = mean_siws_numeric(PRESETS["mlssp-c4-10"], g).values
    parts = mean_siws_numeric(lssp(0.2, 4), g).values + mean_siws_numeric(lssp(0.8, 10), g).values
    assert np.allclose(both, parts, rtol=1e-12, atol=1e-14)


# --------------------------------------------------------------------------
# SIWD


def test_siwd_zero_path():
    g = LogGrid.centered(0.2, 16)
    assert not np.any(siwd(np.zeros(16), g).values)


def test_siwd_direct_sum(rng):
    g = LogGrid.centered(0.2, 8)
    X = rng.standard_normal(8) + 1j * rng.standard_normal(8)
    W = siwd_values(X, g)
    for m in range(8):
        for j in range(8):
            acc = 0.0
            for p in range(-7, 8):
                if 0 <= m + p < 8 and 0 <= m - p < 8:
                    acc += X[m + p] * np.conj(X[m - p]) * np.exp(-2j * np.pi * g.xi[j] * 2 * p * g.delta)
            assert W[m, j] == pytest.approx((2 * g.delta * acc).real, abs=1e-12)


def test_siwd_pure_tone():
    g = LogGrid.centered(0.1, 32)
    j0 = 20
    X = np.exp(2j * np.pi * g.xi[j0] * g.u)
    W = siwd(X, g).values
    for m in range(32):
        count = sum(1 for p in range(-32, 33) if 0 <= m + p < 32 and 0 <= m - p < 32)
        assert W[m, j0] == pytest.approx(2 * g.delta * count, rel=1e-12)
        assert np.max(W[m]) <= W[m, j0] * (1 + 1e-12)


def test_siwd_phase_invariant(rng):
    g = LogGrid.centered(0.2, 16)
    X = sample_paths(lssp(0.5, 4), g, 3, seed=1)
    assert np.allclose(siwd_values(X * np.exp(0.7j), g), siwd_values(X, g), atol=1e-12)


# --------------------------------------------------------------------------
# ambiguity moments


def test_ambiguity_mean_origin():
    g = LogGrid.centered(0.1, 256)
    A = ambiguity_mean(lssp(0.5, 4), g)
    q0 = g.m_count  # theta = 0 on the padded frequency grid
    p0 = g.m_count - 1  # lag 0
    assert A.theta[q0] == 0 and A.lags[p0] == 0
    assert A.values[q0, p0].real == pytest.approx(np.sqrt(2 * np.pi) * np.exp(0.5), rel=1e-6)


@pytest.mark.parametrize("name", ["lssp-c4", "lsscp-c7", "mlsscp-c4-10"])
def test_ambiguity_mean_modulus_symmetry(name):
    g = LogGrid.centered(0.2, 32)
    A = np.abs(ambiguity_mean(PRESETS[name], g).values)
    # (theta, P) <-> (-theta, -P); theta index q maps to -q mod 2M
    q = (-np.arange(2 * 32)) % (2 * 32)
    mirror = A[q][:, ::-1]
    assert np.allclose(A[1:], mirror[1:], rtol=1e-10, atol=1e-12 * A.max())


def test_chirp_modulus_is_shifted_lssp():
    g = LogGrid.centered(0.1, 192)
    a, b = 2.0, -2.0
    A = ambiguity_mean(lssp(0.5, 4, a=a, b=b), g)
    th = A.theta[:, None]
    d = A.lags[None, :] * g.delta
    # |E A|^2 of the unchirped model is 2 pi e^(4 H^2) e^(-c d^2 / 4) e^(-4 pi^2 theta^2)
    shifted = th - a * d / (2 * np.pi)
    ref = np.sqrt(2 * np.pi * np.exp(1.0) * np.exp(-d**2) * np.exp(-4 * np.pi**2 * shifted**2))
    sel = (np.abs(d) < 3) & (np.abs(th) < 2)
    assert np.max(np.abs(np.abs(A.values) - ref)[sel]) <= 1e-6 * ref.max()


def test_moment_consistency_even_lags():
    g = LogGrid.centered(0.2, 32)
    model = lssp(0.5, 7, a=2, b=-2)
    R = covariance_matrix(model, g)
    A = ambiguity_mean(model, g)
    M = 32
    for p in (-5, 0, 3):
        col = list(A.lags).index(2 * p)
        # lag sequence r_m(p) = R(t_{m+p}, t_{m-p}) belongs to node m
        r = np.array([R[m + p, m - p] if 0 <= m + p < M and 0 <= m - p < M else 0 for m in range(M)])
        for q in (0, 20, 31, 45):
            ref = g.delta * np.sum(r * np.exp(-2j * np.pi * A.theta[q] * g.u))
            assert A.values[q, col] == pytest.approx(ref, rel=1e-10, abs=1e-13)


@pytest.mark.parametrize("name", ["lssp-c4", "lsscp-c7"])
def test_second_moment_matches_naive_loop(name):
    g = LogGrid.centered(0.25, 8)
    model = PRESETS[name]
    R = covariance_matrix(model, g)
    mean = ambiguity_mean(model, g).values
    fast = ambiguity_second_moment(model, g).values - np.abs(mean) ** 2
    slow = naive_cross_term(R, g)
    assert np.max(np.abs(slow.imag)) <= 1e-12 * np.max(np.abs(slow))
    assert np.max(np.abs(fast - slow.real)) <= 1e-10 * np.max(np.abs(slow))


@pytest.mark.parametrize("name", ["lssp-c2", "lsscp-c7", "mlsscp-c4-10"])
def test_raw_moments_are_symmetric(name):
    g = LogGrid.centered(0.1, 64)
    model = PRESETS[name]
    for v in (np.abs(ambiguity_mean(model, g).values) ** 2, ambiguity_second_moment(model, g).values):
        q = (-np.arange(128)) % 128
        assert np.max(np.abs(v - v[q][:, ::-1])) <= 1e-12 * v.max()


def test_second_moment_properties():
    g = LogGrid.centered(0.2, 32)
    model = lssp(0.5, 4)
    mean = ambiguity_mean(model, g).values
    second = ambiguity_second_moment(model, g).values
    assert not np.iscomplexobj(second)
    assert np.all(second >= np.abs(mean) ** 2 - 1e-12 * second.max())
    T = second - np.abs(mean) ** 2
    assert np.all(T[32] >= -1e-12 * second.max())


def test_moments_against_monte_carlo():
    g = LogGrid.centered(0.25, 16)
    model = lssp(0.5, 4)
    X = sample_paths(model, g, 8000, seed=21)
    A = empirical_ambiguity(X, g)
    mean = ambiguity_mean(model, g).values
    second = ambiguity_second_moment(model, g).values
    sel = second > 0.05 * second.max()
    emp2 = np.mean(np.abs(A) ** 2, axis=0)
    assert np.max(np.abs(emp2[sel] / second[sel] - 1)) < 0.1
    emp1 = np.mean(A, axis=0)
    assert np.max(np.abs(emp1 - mean)) < 0.05 * np.abs(mean).max()


# --------------------------------------------------------------------------
# kernels


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_optimal_kernel_bounds_and_symmetry(name):
    g = LogGrid.centered(0.2, 32)
    phi = optimal_kernel(PRESETS[name], g)
    assert phi.values.min() >= 0 and phi.values.max() <= 1
    assert kernel_asymmetry(phi) <= 1e-12
    assert not np.any(phi.values[0])


@pytest.mark.parametrize("c", [2, 4, 10])
def test_optimal_kernel_peak_value(c):
    # at the origin |E A|^2 / E|A|^2 = 1 / (1 + c^(-1/2)) for the continuous family
    g = LogGrid.centered(0.1, 128)
    phi = optimal_kernel(lssp(0.5, c), g)
    assert phi.values[128, 127] == pytest.approx(1 / (1 + c**-0.5), rel=1e-4)


def test_kernel_floor_controls_support():
    g = LogGrid.centered(0.2, 32)
    a = optimal_kernel(lssp(0.5, 4), g, floor=1e-8)
    b = optimal_kernel(lssp(0.5, 4), g, floor=1e-2)
    assert np.count_nonzero(b.values) < np.count_nonzero(a.values)
    with pytest.raises(ValueError):
        optimal_kernel(lssp(0.5, 4), g, floor=-1)


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_maps_are_finite(name):
    g = LogGrid.centered(0.2, 32)
    model = PRESETS[name]
    X = sample_paths(model, g, 2, seed=0)
    phi = optimal_kernel(model, g)
    for v in (exact_siws(model, g).values, mean_siws_numeric(model, g).values, siwd_values(X, g),
              ambiguity_second_moment(model, g).values, cohen_values(X, phi, g)):
        assert np.all(np.isfinite(v))


def test_cohen_with_siwd_kernel_is_siwd():
    g = LogGrid.centered(0.2, 32)
    X = sample_paths(lssp(0.5, 4, a=2), g, 4, seed=3)
    assert np.allclose(cohen_values(X, siwd_kernel(g), g), siwd_values(X, g), rtol=1e-12,
                       atol=1e-12 * np.abs(siwd_values(X, g)).max())


def test_cohen_zero_kernel():
    g = LogGrid.centered(0.2, 16)
    X = sample_paths(lssp(0.5, 4), g, 1, seed=3)[0]
    zero = AmbiguityMap(np.zeros((32, 31)), "zero", g)
    assert not np.any(cohen_tfr(X, zero, g).values)


def test_cohen_grid_mismatch():
    g = LogGrid.centered(0.2, 16)
    phi = siwd_kernel(LogGrid.centered(0.1, 16))
    with pytest.raises(ValueError):
        cohen_values(np.ones(16), phi, g)


def test_symmetrize_kernel(rng):
    g = LogGrid.centered(0.2, 16)
    raw = AmbiguityMap(rng.uniform(size=(32, 31)), "raw", g)
    assert kernel_asymmetry(raw) > 1e-3
    sym = symmetrize_kernel(raw)
    assert kernel_asymmetry(sym) <= 1e-15
    assert np.array_equal(symmetrize_kernel(sym).values, sym.values)


def test_cohen_is_real_for_symmetric_kernel(rng, caplog):
    g = LogGrid.centered(0.2, 16)
    X = sample_paths(lssp(0.5, 4), g, 2, seed=8)
    with caplog.at_level(logging.WARNING):
        cohen_values(X, random_symmetric_kernel(g, rng), g)
    assert "imaginary residue" not in caplog.text


def test_realify_warns(caplog):
    with caplog.at_level(logging.WARNING):
        out = realify(np.array([1.0 + 0.5j]), "test")
    assert out[0] == 1.0 and "imaginary residue" in caplog.text


def test_kernel_timescale_of_siwd_kernel():
    # the SIWD kernel smooths nothing: Phi is concentrated at ratio 1
    g = LogGrid.centered(0.2, 16)
    Phi = kernel_timescale(siwd_kernel(g)).values
    centre = g.m_count
    assert np.allclose(np.delete(Phi, centre, axis=0), 0, atol=1e-12)


def test_kernel_asymmetry_rejected_by_window_builder(rng):
    from siws.taper import psi_kernel
    g = LogGrid.centered(0.2, 16)
    with pytest.raises(KernelError):
        psi_kernel(AmbiguityMap(rng.uniform(size=(32, 31)), "raw", g), g)
