"""Thermofield (doubled-space) description of the hybrid Liouvillian.

The operator vector ``Phi = (a, b, a~^dag, b~^dag)`` closes under the adjoint
action of the hybrid thermofield Hamiltonian ``H_TF,eps``. At the red sideband,
after removing a uniform rotation, the resulting 4x4 matrix ``M_eps`` is
traceless and its characteristic polynomial is biquadratic,
``lam^4 - alpha lam^2 + beta``. ``eps`` weights the quantum-jump terms:
``eps = 0`` is the no-jump evolution, ``eps = 1`` the full Lindblad one.
"""

from __future__ import annotations

import cmath
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError, PrecisionLoss
from .params import SystemParams, derived_rates

def _check_eps(eps: float) -> float:
    eps = float(eps)
    if not 0.0 <= eps <= 1.0:
        raise ParameterError(f"eps must lie in [0, 1], got {eps}")
    return eps


def _check_red_sideband(p: SystemParams) -> None:
    if not p.is_red_sideband:
        raise ParameterError("the thermofield drift is only defined at delta = -omega_m")


@dataclass(frozen=True)
class HybridDrift4:
    """``M_eps`` together with its characteristic coefficients.

    ``shift`` is the uniform rotation removed from the raw commutator matrix:
    ``i[H_TF,eps, Phi] = (M_eps - shift I) Phi``.
    """

    entries: np.ndarray
    eps: float
    alpha: float
    beta: float
    params: SystemParams
    shift: complex = 0j

    def eigenvalues(self, shifted: bool = True) -> np.ndarray:
        """Dense eigenvalues; ``shifted=False`` undoes the rotation."""
        vals = np.linalg.eigvals(self.entries)
        return vals if shifted else vals - self.shift

    def raw_matrix(self) -> np.ndarray:
        return self.entries - self.shift * np.eye(4)


@dataclass(frozen=True)
class QuarticSpectrum:
    lambdas: np.ndarray
    s_plus: complex
    s_minus: complex
    discriminant: float


@dataclass(frozen=True)
class CharpolyReport:
    max_residual: float
    samples: int
    tol: float = 1e-10
    details: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.max_residual < self.tol


def m_epsilon(p: SystemParams, eps: float) -> HybridDrift4:
    _check_red_sideband(p)
    eps = _check_eps(eps)
    k, g, G, n = p.kappa, p.gamma, p.g, p.n_th
    ge = derived_rates(p).gamma_eff
    entries = np.array(
        [
            [-k / 2, -1j * G, 0, 0],
            [-1j * G, -ge / 2, 0, eps * g * n],
            [-eps * k, 0, k / 2, -1j * G],
            [0, -eps * g * (n + 1), -1j * G, ge / 2],
        ],
        dtype=complex,
    )
    alpha, beta = charpoly_coeffs(p, eps)
    return HybridDrift4(entries=entries, eps=eps, alpha=alpha, beta=beta, params=p, shift=1j * p.omega_m)


def charpoly_coeffs(p: SystemParams, eps: float) -> tuple[float, float]:
    """Closed-form ``(alpha, beta)`` of ``det(M_eps - lam I)``."""
    eps = _check_eps(eps)
    k, g, G, n = p.kappa, p.gamma, p.g, p.n_th
    jump_deficit = 1.0 - eps * eps
    thermal = 4.0 * n * (n + 1.0) * jump_deficit
    alpha = 0.25 * (k * k + g * g * (1.0 + thermal)) - 2.0 * G * G
    beta = G**4 + (k * g / 2.0 + n * k * g * jump_deficit) * G * G + (k * k * g * g / 16.0) * (1.0 + thermal)
    return alpha, beta


def charpoly_from_matrix(entries: np.ndarray, tol: float = 1e-12) -> tuple[float, float]:
    """``(alpha, beta)`` read off a traceless 4x4 matrix numerically.

    For ``lam^4 + c1 lam^3 + c2 lam^2 + c3 lam + c4`` Newton's identities give
    ``c2 = -tr(M^2)/2`` when ``tr M = 0``, so ``alpha = tr(M^2)/2`` and
    ``beta = det M``. Odd coefficients must vanish; imaginary parts must be
    round-off.
    """
    m = np.asarray(entries, dtype=complex)
    scale = max(np.abs(m).max(), np.finfo(float).tiny)
    m2 = m @ m
    alpha = np.trace(m2) / 2.0
    beta = np.linalg.det(m)
    c1 = np.trace(m)
    c3 = -(np.trace(m2 @ m) / 3.0)
    for label, value, power in (("alpha", alpha, 2), ("beta", beta, 4), ("trace", c1, 1), ("cubic", c3, 3)):
        limit = tol * scale**power
        residue = abs(value.imag) if label in ("alpha", "beta") else abs(value)
        if residue > limit:
            raise PrecisionLoss(f"{label} has non-real/non-zero residue {residue:.3e} (limit {limit:.3e})")
    return float(alpha.real), float(beta.real)


def quartic_spectrum(alpha: float, beta: float) -> QuarticSpectrum:
    disc = alpha * alpha - 4.0 * beta
    root = cmath.sqrt(disc)
    s_plus = (alpha + root) / 2.0
    s_minus = (alpha - root) / 2.0
    rp, rm = cmath.sqrt(s_plus), cmath.sqrt(s_minus)
    lambdas = np.array([rp, -rp, rm, -rm], dtype=complex)
    return QuarticSpectrum(lambdas=lambdas, s_plus=s_plus, s_minus=s_minus, discriminant=float(disc))


def verify_charpoly(m: HybridDrift4, samples: int = 8, seed: int = 0) -> CharpolyReport:
    """Compare ``det(M - lam I)`` with ``lam^4 - alpha lam^2 + beta``.

    ``lam`` is drawn on the natural scale ``s = max |M_ij|``; residuals are
    divided by ``s^4 (1 + |lam/s|^4)``.
    """
    rng = np.random.default_rng(seed)
    scale = float(np.abs(m.entries).max()) or 1.0
    eye = np.eye(4)
    worst = 0.0
    details = []
    for z in rng.normal(size=samples) + 1j * rng.normal(size=samples):
        lam = scale * z
        lhs = np.linalg.det(m.entries - lam * eye)
        rhs = lam**4 - m.alpha * lam**2 + m.beta
        res = abs(lhs - rhs) / (scale**4 * (1.0 + abs(z) ** 4))
        details.append((complex(lam), float(res)))
        worst = max(worst, res)
    return CharpolyReport(max_residual=worst, samples=samples, details=details)


def _accumulate(terms: dict, key: tuple, coeff: complex) -> None:
    terms[key] = terms.get(key, 0j) + complex(coeff)


def hybrid_tf_terms(p: SystemParams, eps: float) -> dict:
    """Coefficient table of ``H_TF,eps`` over normal-ordered quadratics.

    Keys are pairs of labels such as ``("a+", "b")`` meaning ``a^dag b``;
    the key ``()`` holds the additive constant, chosen so that the table
    reproduces ``i L_eps`` exactly (including the constant ``-i gamma n_th``
    from ``b b^dag = b^dag b + 1``).
    """
    eps = _check_eps(eps)
    k, g, G, n, dlt, wm = p.kappa, p.gamma, p.g, p.n_th, p.delta, p.omega_m
    ge = derived_rates(p).gamma_eff
    terms: dict = defaultdict(complex)
    # coherent part, physical minus tilde copy
    _accumulate(terms, ("a+", "a"), -dlt)
    _accumulate(terms, ("at+", "at"), dlt)
    _accumulate(terms, ("b+", "b"), wm)
    _accumulate(terms, ("bt+", "bt"), -wm)
    _accumulate(terms, ("a+", "b"), G)
    _accumulate(terms, ("b+", "a"), G)
    _accumulate(terms, ("at+", "bt"), -G)
    _accumulate(terms, ("bt+", "at"), -G)
    # no-jump damping on both copies
    _accumulate(terms, ("a+", "a"), -0.5j * k)
    _accumulate(terms, ("at+", "at"), -0.5j * k)
    _accumulate(terms, ("b+", "b"), -0.5j * ge)
    _accumulate(terms, ("bt+", "bt"), -0.5j * ge)
    # jump terms mixing the copies
    _accumulate(terms, ("a", "at"), 1j * eps * k)
    _accumulate(terms, ("b", "bt"), 1j * eps * g * (n + 1))
    _accumulate(terms, ("b+", "bt+"), 1j * eps * g * n)
    _accumulate(terms, (), -1j * g * n)
    return dict(terms)


def lindblad_tf_terms(p: SystemParams) -> dict:
    """Coefficient table of the full (eps = 1) thermofield Hamiltonian.

    Assembled independently of :func:`hybrid_tf_terms`: coherent part plus one
    ``i c (o o~ - o^dag o / 2 - o~^dag o~ / 2)`` block per dissipator, with
    ``b b^dag`` normal-ordered by hand.
    """
    k, g, G, n, dlt, wm = p.kappa, p.gamma, p.g, p.n_th, p.delta, p.omega_m
    terms: dict = defaultdict(complex)
    for key, c in (
        (("a+", "a"), -dlt),
        (("at+", "at"), dlt),
        (("b+", "b"), wm),
        (("bt+", "bt"), -wm),
        (("a+", "b"), G),
        (("b+", "a"), G),
        (("at+", "bt"), -G),
        (("bt+", "at"), -G),
    ):
        _accumulate(terms, key, c)

    def dissipator(rate, jump, number, tilde_number, constant=0.0):
        _accumulate(terms, jump, 1j * rate)
        _accumulate(terms, number, -0.5j * rate)
        _accumulate(terms, tilde_number, -0.5j * rate)
        _accumulate(terms, (), -1j * rate * constant)

    dissipator(k, ("a", "at"), ("a+", "a"), ("at+", "at"))
    dissipator(g * (n + 1), ("b", "bt"), ("b+", "b"), ("bt+", "bt"))
    # b b^dag = b^dag b + 1 on each copy
    dissipator(g * n, ("b+", "bt+"), ("b+", "b"), ("bt+", "bt"), constant=1.0)
    return dict(terms)


def same_terms(t1: dict, t2: dict, atol: float) -> bool:
    keys = set(t1) | set(t2)
    return all(abs(t1.get(key, 0j) - t2.get(key, 0j)) <= atol for key in keys)
