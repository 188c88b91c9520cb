from __future__ import annotations

from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from optoep import drift, eplocus, thermofield
from optoep.drift import DriftKind
from optoep.errors import ParameterError, PrecisionLoss
from optoep.params import SystemParams, cryogenic_reference

from conftest import small_params

params_strategy = st.builds(
    lambda gamma, g, n_th: SystemParams(delta=-10.0, omega_m=10.0, g=g, kappa=1.0, gamma=gamma, n_th=n_th),
    st.floats(1e-4, 0.9),
    st.floats(0, 2),
    st.floats(0, 1e3),
)
eps_strategy = st.floats(0, 1)


def test_lindblad_matrix_frozen():
    p = SystemParams(delta=-10.0, omega_m=10.0, g=0.3, kappa=1.0, gamma=0.2, n_th=2.0)
    m = thermofield.m_epsilon(p, 1.0)
    expected = np.array(
        [
            [-0.5, -0.3j, 0, 0],
            [-0.3j, -0.5, 0, 0.4],
            [-1.0, 0, 0.5, -0.3j],
            [0, -0.6, -0.3j, 0.5],
        ]
    )
    np.testing.assert_allclose(m.entries, expected, atol=1e-15)
    assert m.shift == 10j
    np.testing.assert_allclose(m.raw_matrix(), expected - 10j * np.eye(4))


def test_traceless_and_zero_temperature_entry():
    m = thermofield.m_epsilon(small_params(n_th=0.0), 0.6)
    assert abs(np.trace(m.entries)) == 0
    assert m.entries[1, 3] == 0


def test_domain_errors():
    off = SystemParams(delta=-9.0, omega_m=10.0, g=0.3, kappa=1.0, gamma=0.1, n_th=1.0)
    with pytest.raises(ParameterError):
        thermofield.m_epsilon(off, 0.5)
    with pytest.raises(ParameterError):
        thermofield.m_epsilon(small_params(), 1.5)


def test_eps_zero_decouples_into_no_jump_block():
    p = small_params(g=0.3, n_th=1.5)
    m = thermofield.m_epsilon(p, 0.0)
    assert np.abs(m.entries[:2, 2:]).max() == 0 and np.abs(m.entries[2:, :2]).max() == 0
    nj = drift.drift_matrix(p, DriftKind.NO_JUMP).entries
    np.testing.assert_allclose(m.entries[:2, :2], nj + m.shift * np.eye(2), atol=1e-15)
    upper = np.linalg.eigvals(m.entries[:2, :2]) - m.shift
    pair = drift.eigenvalues(drift.drift_matrix(p, DriftKind.NO_JUMP))
    for lam in (pair.lambda_plus, pair.lambda_minus):
        assert np.min(np.abs(upper - lam)) < 1e-12 * abs(lam)


@pytest.mark.parametrize("g", [0.0, 0.1, 0.3, 0.8])
def test_eps_one_spectrum_contains_liouville_pair(g):
    p = small_params(g=g, n_th=3.0)
    m = thermofield.m_epsilon(p, 1.0)
    unshifted = m.eigenvalues(shifted=False)
    pair = drift.eigenvalues(drift.drift_matrix(p))
    for lam in (pair.lambda_plus, pair.lambda_minus):
        assert np.min(np.abs(unshifted - lam)) < 1e-9


def test_n_th_cancellation_at_eps_one(reference):
    p = reference.with_g(0.2 * reference.kappa)
    base = thermofield.charpoly_coeffs(p.with_n_th(0.0), 1.0)
    for n in (1.0, 10.0, 8.33e4):
        a, b = thermofield.charpoly_coeffs(p.with_n_th(n), 1.0)
        assert a == pytest.approx(base[0], rel=1e-12)
        assert b == pytest.approx(base[1], rel=1e-12)


def test_n_th_cancellation_in_the_matrix():
    # read-off coefficients from the assembled matrix also lose n_th
    p = small_params(g=0.4)
    base = thermofield.charpoly_from_matrix(thermofield.m_epsilon(p.with_n_th(0.0), 1.0).entries)
    for n in (1.0, 10.0, 500.0):
        got = thermofield.charpoly_from_matrix(thermofield.m_epsilon(p.with_n_th(n), 1.0).entries)
        np.testing.assert_allclose(got, base, rtol=1e-9)


def test_uncoupled_coefficients():
    p = small_params(g=0.0, n_th=4.0)
    a, b = thermofield.charpoly_coeffs(p, 1.0)
    assert a == pytest.approx((1 + 0.01) / 4, rel=1e-14)
    assert b == pytest.approx((0.1 / 4) ** 2, rel=1e-14)
    quartic = thermofield.quartic_spectrum(a, b)
    assert sorted([quartic.s_plus.real, quartic.s_minus.real]) == pytest.approx([0.0025, 0.25])


def test_quartic_factored_example():
    quartic = thermofield.quartic_spectrum(5.0, 4.0)
    assert (quartic.s_plus, quartic.s_minus) == (4.0, 1.0)
    np.testing.assert_allclose(quartic.lambdas, [2, -2, 1, -1])
    assert quartic.discriminant == 9.0


def test_quartic_repeated_root():
    quartic = thermofield.quartic_spectrum(2.0, 1.0)
    assert quartic.discriminant == 0.0 and quartic.s_plus == quartic.s_minus == 1.0


def test_quartic_matches_dense_eigensolve(reference):
    p = reference.with_g(0.3 * reference.kappa)
    m = thermofield.m_epsilon(p, 1.0)
    quartic = thermofield.quartic_spectrum(m.alpha, m.beta).lambdas
    dense = np.linalg.eigvals(m.entries)
    scale = np.abs(dense).max()
    for lam in quartic:
        assert np.min(np.abs(dense - lam)) < 1e-10 * scale


def test_discriminant_root_is_hybrid_ep(reference):
    for eps in (0.0, 0.4, 1.0):
        g = eplocus.g_ep_hybrid(reference, eps)
        quartic = thermofield.quartic_spectrum(*thermofield.charpoly_coeffs(reference.with_g(g), eps))
        assert abs(quartic.s_plus - quartic.s_minus) < 1e-4 * abs(quartic.s_plus)


@given(params_strategy, eps_strategy)
@settings(max_examples=80)
def test_charpoly_residual(p, eps):
    m = thermofield.m_epsilon(p, eps)
    report = thermofield.verify_charpoly(m)
    assert report.passed and report.samples == 8


@given(params_strategy, eps_strategy)
@settings(max_examples=80)
def test_numeric_coefficients_match_closed_form(p, eps):
    m = thermofield.m_epsilon(p, eps)
    a, b = thermofield.charpoly_from_matrix(m.entries)
    scale = max(np.abs(m.entries).max(), 1e-300)
    assert abs(a - m.alpha) <= 1e-12 * scale**2
    assert abs(b - m.beta) <= 1e-11 * scale**4


@given(st.floats(-1e3, 1e3), st.floats(-1e3, 1e3))
def test_quartic_vieta_and_symmetry(alpha, beta):
    quartic = thermofield.quartic_spectrum(alpha, beta)
    lam = quartic.lambdas
    np.testing.assert_allclose(lam[1], -lam[0])
    np.testing.assert_allclose(lam[3], -lam[2])
    scale = max(abs(alpha), np.sqrt(abs(beta)), 1e-12)
    pair_sum = sum(lam[i] * lam[j] for i in range(4) for j in range(i + 1, 4))
    assert abs(lam.sum()) <= 1e-10 * np.sqrt(scale)
    assert abs(pair_sum + alpha) <= 1e-10 * scale
    assert abs(np.prod(lam) - beta) <= 1e-10 * scale**2


def test_corrupted_entry_is_detected():
    m = thermofield.m_epsilon(small_params(g=0.4, n_th=2.0), 0.7)
    bad = m.entries.copy()
    bad[2, 0] *= 1.1
    report = thermofield.verify_charpoly(replace(m, entries=bad))
    assert report.max_residual > 1e-3 and not report.passed


def test_eps_zero_determinant_factorizes():
    m = thermofield.m_epsilon(small_params(g=0.4, n_th=2.0), 0.0)
    assert thermofield.verify_charpoly(m).passed
    rng = np.random.default_rng(1)
    for lam in rng.normal(size=5) + 1j * rng.normal(size=5):
        full = np.linalg.det(m.entries - lam * np.eye(4))
        blocks = np.linalg.det(m.entries[:2, :2] - lam * np.eye(2)) * np.linalg.det(m.entries[2:, 2:] - lam * np.eye(2))
        assert abs(full - blocks) < 1e-12 * (1 + abs(lam) ** 4)


def test_charpoly_from_matrix_rejects_odd_terms():
    odd = np.diag([1.0, 2.0, 3.0, -1.0]).astype(complex)
    with pytest.raises(PrecisionLoss):
        thermofield.charpoly_from_matrix(odd)


def test_lindblad_table_equals_hybrid_at_one():
    for p in (small_params(g=0.3, n_th=2.0), cryogenic_reference(g=1e5)):
        full = thermofield.lindblad_tf_terms(p)
        hybrid = thermofield.hybrid_tf_terms(p, 1.0)
        scale = max(abs(v) for v in full.values())
        assert thermofield.same_terms(full, hybrid, atol=1e-14 * scale)


def test_hybrid_table_no_jump_limit():
    p = small_params(g=0.3, n_th=2.0)
    terms = thermofield.hybrid_tf_terms(p, 0.0)
    for key in (("a", "at"), ("b", "bt"), ("b+", "bt+")):
        assert terms[key] == 0
    assert terms[()] == pytest.approx(-1j * p.gamma * p.n_th)
    assert not thermofield.same_terms(terms, thermofield.lindblad_tf_terms(p), atol=1e-6)
