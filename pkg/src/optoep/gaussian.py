"""Steady-state second moments and two-time correlations at the red sideband.

The correlation matrix

    C(tau) = [[<a^dag(t) a(t')>, <a^dag(t) b(t')>],
              [<b^dag(t) a(t')>, <b^dag(t) b(t')>]],   tau = t - t' >= 0

follows from the regression theorem as ``exp(M* tau) V`` where ``M*`` is the
element-wise conjugate of the Liouvillian drift and ``V = C(0)``.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass

import numpy as np

from . import drift
from .drift import DriftKind
from .errors import DegenerateSpectrum, ParameterError
from .params import SystemParams, derived_rates


@dataclass(frozen=True)
class CovarianceSet:
    n_a: float
    n_b: float
    c_ab: complex
    c_ba: complex

    def matrix(self) -> np.ndarray:
        return np.array([[self.n_a, self.c_ab], [self.c_ba, self.n_b]], dtype=complex)


@dataclass(frozen=True)
class CorrelationTrace:
    tau: np.ndarray
    c11: np.ndarray
    c12: np.ndarray
    c21: np.ndarray
    c22: np.ndarray

    def stacked(self) -> np.ndarray:
        """Shape ``(len(tau), 2, 2)``."""
        top = np.stack([self.c11, self.c12], axis=-1)
        bottom = np.stack([self.c21, self.c22], axis=-1)
        return np.stack([top, bottom], axis=-2)

    @classmethod
    def from_stacked(cls, tau, mats) -> CorrelationTrace:
        return cls(tau=np.asarray(tau, float), c11=mats[:, 0, 0], c12=mats[:, 0, 1], c21=mats[:, 1, 0], c22=mats[:, 1, 1])


def _require_red_sideband(p: SystemParams) -> None:
    if not p.is_red_sideband:
        raise ParameterError("closed-form moments require delta = -omega_m")


def _tau_grid(tau_grid) -> np.ndarray:
    tau = np.asarray(tau_grid, dtype=float)
    if tau.ndim != 1 or np.any(tau < 0) or np.any(np.diff(tau) < 0):
        raise ValueError("tau_grid must be a sorted 1-D array of nonnegative times")
    return tau


def steady_covariances(p: SystemParams) -> CovarianceSet:
    _require_red_sideband(p)
    k, g, G, n = p.kappa, p.gamma, p.g, p.n_th
    denom = (k + g) * (k * g + 4.0 * G * G)
    n_a = 4.0 * G * G * g * n / denom
    n_b = g * (k * (k + g) + 4.0 * G * G) * n / denom
    c_ba = -2j * k * G * g * n / denom
    return CovarianceSet(n_a=n_a, n_b=n_b, c_ab=c_ba.conjugate(), c_ba=c_ba)


def moment_residuals(p: SystemParams, cov: CovarianceSet) -> np.ndarray:
    """Right-hand sides of the closed second-moment equations (zero at steady state).

    Order: ``d<a^dag a>/dt, d<b^dag b>/dt, d<b^dag a>/dt``.
    """
    k, g, G, n = p.kappa, p.gamma, p.g, p.n_th
    flow = 1j * G * (cov.c_ba - cov.c_ab)
    return np.array(
        [
            -k * cov.n_a + flow,
            -g * cov.n_b + g * n - flow,
            -(k + g) / 2.0 * cov.c_ba + 1j * G * (cov.n_a - cov.n_b),
        ]
    )


def correlations_regression(p: SystemParams, tau_grid) -> CorrelationTrace:
    """``C(tau) = exp(M* tau) V``; valid on and off the exceptional point."""
    _require_red_sideband(p)
    tau = _tau_grid(tau_grid)
    m = drift.drift_matrix(p, DriftKind.LIOUVILLE)
    propagator = drift.matrix_exp(m, tau, conjugated=True)
    mats = propagator @ steady_covariances(p).matrix()
    return CorrelationTrace.from_stacked(tau, mats)


def correlations_closed_form(p: SystemParams, tau_grid, swap_labels: bool = False) -> CorrelationTrace:
    """Two-exponential expressions built from ``Gamma`` and ``delta``.

    The term labelled ``sigma`` decays as ``exp((i omega_m - mu + sigma delta) tau)``
    with ``delta = sqrt(Gamma^2 - G^2)``. Both the exponent and the weights use
    the same ``delta``, so the result does not depend on which root is called
    ``+``; ``swap_labels`` flips it to demonstrate that.

    Raises
    ------
    DegenerateSpectrum
        Within the shared degeneracy threshold of ``delta = 0``.
    """
    _require_red_sideband(p)
    tau = _tau_grid(tau_grid)
    m = drift.drift_matrix(p, DriftKind.LIOUVILLE)
    if drift.is_degenerate(m):
        raise DegenerateSpectrum("delta ~ 0: use correlations_regression at the exceptional point")
    rates = derived_rates(p)
    big_gamma, G = rates.big_gamma, p.g
    delta = cmath.sqrt(big_gamma * big_gamma - G * G)
    if swap_labels:
        delta = -delta
    cov = steady_covariances(p)
    centre = 1j * p.omega_m - rates.mu

    out = {key: np.zeros(tau.shape, dtype=complex) for key in ("c11", "c12", "c21", "c22")}
    for sigma in (1.0, -1.0):
        e = np.exp((centre + sigma * delta) * tau)
        minus = 0.5 * (1.0 - sigma * big_gamma / delta)
        plus = 0.5 * (1.0 + sigma * big_gamma / delta)
        cross = sigma * 1j * G / (2.0 * delta)
        out["c11"] += e * (minus * cov.n_a + cross * cov.c_ba)
        out["c22"] += e * (cross * cov.c_ab + plus * cov.n_b)
        out["c12"] += e * (minus * cov.c_ab + cross * cov.n_b)
        out["c21"] += e * (cross * cov.n_a + plus * cov.c_ba)
    return CorrelationTrace(tau=tau, **out)


def default_tau_grid(p: SystemParams, count: int = 512) -> np.ndarray:
    """Linear grid up to ten times the slower decay time."""
    pair = drift.eigenvalues(drift.drift_matrix(p, DriftKind.LIOUVILLE))
    slow = min(abs(pair.lambda_plus.real), abs(pair.lambda_minus.real))
    return np.linspace(0.0, 10.0 / slow, count)
