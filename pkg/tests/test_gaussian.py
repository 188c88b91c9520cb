from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.signal import find_peaks

from optoep import gaussian
from optoep.eplocus import g_lep
from optoep.errors import DegenerateSpectrum, ParameterError
from optoep.params import SystemParams, derived_rates, cryogenic_reference

from conftest import small_params

params_strategy = st.builds(
    lambda gamma, g, n_th: SystemParams(delta=-10.0, omega_m=10.0, g=g, kappa=1.0, gamma=gamma, n_th=n_th),
    st.floats(1e-3, 0.9),
    st.floats(0, 3),
    st.floats(0, 100),
)


def sup_rel(a, b):
    return np.abs(a - b).max() / np.abs(b).max()


# --- moments ---------------------------------------------------------------


def test_frozen_oracle_point():
    cov = gaussian.steady_covariances(small_params(g=0.5))
    assert cov.n_a == pytest.approx(0.0826446280991736, rel=1e-13)
    assert cov.n_b == pytest.approx(0.1735537190082645, rel=1e-13)
    assert cov.c_ba == pytest.approx(-0.0826446280991736j, rel=1e-13)
    assert cov.c_ab == cov.c_ba.conjugate()


def test_uncoupled_limit():
    cov = gaussian.steady_covariances(small_params(g=0.0, n_th=3.0))
    assert cov.n_a == 0.0 and cov.c_ba == 0.0
    assert cov.n_b == pytest.approx(3.0, rel=1e-15)


def test_strong_coupling_limit():
    p = small_params(g=100.0)
    cov = gaussian.steady_covariances(p)
    assert abs(cov.n_b - p.gamma * p.n_th / (p.kappa + p.gamma)) < 1e-3


def test_requires_red_sideband():
    p = SystemParams(delta=-9.0, omega_m=10.0, g=0.2, kappa=1.0, gamma=0.1, n_th=1.0)
    with pytest.raises(ParameterError):
        gaussian.steady_covariances(p)
    with pytest.raises(ParameterError):
        gaussian.correlations_regression(p, [0.0])


def test_linear_in_n_th():
    one = gaussian.steady_covariances(small_params(g=0.3, n_th=1.0))
    seven = gaussian.steady_covariances(small_params(g=0.3, n_th=7.0))
    for a, b in ((one.n_a, seven.n_a), (one.n_b, seven.n_b), (one.c_ba, seven.c_ba)):
        assert b == pytest.approx(7.0 * a, rel=1e-14)


def test_linearity_bridge_to_cryogenic_occupation():
    # moments at the reference occupation are the small-n_th ones scaled by n_th
    p = cryogenic_reference(g=0.1 * 9.42e5)
    unit = gaussian.steady_covariances(p.with_n_th(1.0))
    full = gaussian.steady_covariances(p)
    assert full.n_b == pytest.approx(p.n_th * unit.n_b, rel=1e-13)
    assert full.c_ba == pytest.approx(p.n_th * unit.c_ba, rel=1e-13)


@given(params_strategy)
def test_covariance_invariants(p):
    cov = gaussian.steady_covariances(p)
    assert cov.c_ab == cov.c_ba.conjugate()
    assert cov.n_a >= 0
    assert 0 <= cov.n_b <= p.n_th * (1 + 1e-15)
    lhs, rhs = p.kappa * cov.n_a, p.gamma * (p.n_th - cov.n_b)
    assert abs(lhs - rhs) <= 1e-12 * max(abs(rhs), 1e-300) + 1e-15 * p.gamma * p.n_th
    res = gaussian.moment_residuals(p, cov)
    assert np.abs(res).max() <= 1e-12 * max(p.n_th, 1e-300) * p.kappa


# --- correlations ----------------------------------------------------------


def test_tau_zero_is_covariance_matrix():
    p = small_params(g=0.3)
    for fn in (gaussian.correlations_regression, gaussian.correlations_closed_form):
        trace = fn(p, [0.0, 1.0])
        np.testing.assert_allclose(trace.stacked()[0], gaussian.steady_covariances(p).matrix(), atol=1e-15)


def test_uncoupled_correlations():
    p = small_params(g=0.0, n_th=2.0)
    tau = np.linspace(0, 5, 11)
    trace = gaussian.correlations_regression(p, tau)
    np.testing.assert_allclose(trace.c22, 2.0 * np.exp((1j * p.omega_m - p.gamma / 2) * tau), rtol=1e-13)
    for c in (trace.c11, trace.c12, trace.c21):
        assert np.abs(c).max() == 0.0


@pytest.mark.parametrize("g", [0.05, 0.2, 0.3, 0.6, 1.5])
def test_closed_form_matches_regression(g):
    p = small_params(g=g)
    tau = gaussian.default_tau_grid(p, 256)
    a = gaussian.correlations_closed_form(p, tau).stacked()
    b = gaussian.correlations_regression(p, tau).stacked()
    scale = np.abs(b).max(axis=(1, 2))[:, None, None]
    assert (np.abs(a - b) / np.maximum(scale, 1e-300)).max() < 1e-10


@given(params_strategy, st.floats(0, 20))
@settings(max_examples=60)
def test_closed_form_matches_regression_property(p, tau):
    from optoep import drift

    if drift.is_degenerate(drift.drift_matrix(p)) or p.n_th == 0:
        return
    grid = [0.0, tau]
    a = gaussian.correlations_closed_form(p, grid).stacked()
    b = gaussian.correlations_regression(p, grid).stacked()
    scale = np.abs(b[0]).max()
    assert np.abs(a - b).max() <= 1e-9 * scale


def test_label_exchange_invariance():
    for g in (0.1, 0.8):
        p = small_params(g=g)
        tau = np.linspace(0, 10, 64)
        a = gaussian.correlations_closed_form(p, tau).stacked()
        b = gaussian.correlations_closed_form(p, tau, swap_labels=True).stacked()
        np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-16)


def test_closed_form_refuses_exceptional_point():
    p = small_params()
    with pytest.raises(DegenerateSpectrum):
        gaussian.correlations_closed_form(p.with_g(g_lep(p)), [0.0, 1.0])


def test_exceptional_point_polynomial_factor():
    p = small_params()
    p = p.with_g(g_lep(p))
    r = derived_rates(p)
    tau = np.linspace(0, 20, 201)
    c11 = gaussian.correlations_regression(p, tau).c11
    stripped = c11 * np.exp(-(1j * p.omega_m - r.mu) * tau)
    # affine in tau and not constant: the (1 + c tau) factor
    assert np.abs(np.diff(stripped, 2)).max() < 1e-12
    assert abs(stripped[-1] - stripped[0]) > 1e-2 * abs(stripped[0])


def test_decay_in_oscillatory_regime():
    # both rates equal mu once G > Gamma
    for g in (0.5, 2.0):
        p = small_params(g=g)
        late = gaussian.correlations_regression(p, [50.0 / p.kappa]).stacked()[0]
        assert np.abs(late).max() < 1e-6 * p.n_th


def test_decay_after_fifty_slow_lifetimes():
    from optoep import drift

    for g in (0.0, 0.1, 0.2):
        p = small_params(g=g)
        pair = drift.eigenvalues(drift.drift_matrix(p))
        slow = min(-pair.lambda_plus.real, -pair.lambda_minus.real)
        late = gaussian.correlations_regression(p, [50.0 / slow]).stacked()[0]
        assert np.abs(late).max() < 1e-6 * p.n_th


def test_overdamped_vs_oscillatory():
    tau = np.linspace(0, 30, 1500)
    slow = small_params(g=0.1)
    assert slow.g < derived_rates(slow).big_gamma
    mag = np.abs(gaussian.correlations_regression(slow, tau).c11)
    assert np.all(np.diff(mag) <= 1e-15)
    fast = small_params(g=0.8)
    mag = np.abs(gaussian.correlations_regression(fast, tau).c11)
    assert np.any(np.diff(mag) > 0)


def test_beat_frequency_is_twice_delta():
    # kappa = 1 and the reference gamma/kappa ratio, G = 0.4 kappa
    ratio = 0.1 / 1.5e5
    p = SystemParams(delta=-10.0, omega_m=10.0, g=0.4, kappa=1.0, gamma=ratio, n_th=1.0)
    r = derived_rates(p)
    s = np.sqrt(p.g**2 - r.big_gamma**2)
    tau = np.linspace(0.0, 200.0, 4001)
    c11 = gaussian.correlations_regression(p, tau).c11
    # remove carrier and common decay, leaving the two normal-mode tones
    tones = c11 * np.exp((-1j * p.omega_m + r.mu) * tau) * np.hanning(tau.size)
    n = 2**18
    dt = tau[1] - tau[0]
    spectrum = np.fft.fftshift(np.abs(np.fft.fft(tones, n)))
    freqs = np.fft.fftshift(2 * np.pi * np.fft.fftfreq(n, d=dt))
    peaks, _ = find_peaks(spectrum)
    top = np.sort(freqs[peaks[np.argsort(spectrum[peaks])[-2:]]])
    assert top[1] - top[0] == pytest.approx(2 * s, rel=5e-3)


def test_default_tau_grid(small):
    from optoep import drift

    pair = drift.eigenvalues(drift.drift_matrix(small))
    slow = min(-pair.lambda_plus.real, -pair.lambda_minus.real)
    grid = gaussian.default_tau_grid(small)
    assert grid.size == 512 and grid[0] == 0
    assert grid[-1] == pytest.approx(10.0 / slow, rel=1e-14)


def test_bad_tau_grid(small):
    for bad in ([-1.0, 0.0], [1.0, 0.5], [[0.0, 1.0]]):
        with pytest.raises(ValueError):
            gaussian.correlations_regression(small, bad)


def test_stacked_roundtrip(small):
    trace = gaussian.correlations_regression(small, np.linspace(0, 1, 5))
    again = gaussian.CorrelationTrace.from_stacked(trace.tau, trace.stacked())
    np.testing.assert_array_equal(again.c12, trace.c12)
