"""2x2 first-moment drift matrices and their exact spectral calculus.

Two kinds of drift act on the mode vector ``(a, b)``:

* ``LIOUVILLE``: the unconditional Heisenberg drift. The thermal occupation
  only enters the noise, so the mechanical damping is ``gamma``.
* ``NO_JUMP``: the drift generated by the effective non-Hermitian Hamiltonian,
  where the phonon absorption channel raises the damping to
  ``gamma_eff = gamma (2 n_th + 1)``.

Exponentials are evaluated through spectral projectors away from coalescence
and through the Jordan form ``exp(lam t) (I + N t)`` at it.
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSpectrum
from .params import SystemParams, derived_rates

DEGENERACY_RTOL = 1e-9


class DriftKind(enum.Enum):
    LIOUVILLE = "liouville"
    NO_JUMP = "no_jump"


@dataclass(frozen=True)
class DriftMatrix2:
    entries: np.ndarray
    kind: DriftKind
    params: SystemParams

    @property
    def trace(self) -> complex:
        return complex(self.entries[0, 0] + self.entries[1, 1])

    @property
    def det(self) -> complex:
        m = self.entries
        return complex(m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0])

    @property
    def mechanical_damping(self) -> float:
        """Damping rate sitting in the (2, 2) entry."""
        rates = derived_rates(self.params)
        return rates.gamma_eff if self.kind is DriftKind.NO_JUMP else self.params.gamma

    @property
    def mu(self) -> float:
        return (self.params.kappa + self.mechanical_damping) / 4.0

    @property
    def big_gamma(self) -> float:
        return (self.params.kappa - self.mechanical_damping) / 4.0


@dataclass(frozen=True)
class EigenPair2:
    lambda_plus: complex
    lambda_minus: complex
    discriminant: complex
    delta_param: complex

    @property
    def gap(self) -> float:
        return abs(self.lambda_plus - self.lambda_minus)


@dataclass(frozen=True)
class ProjectorPair:
    p_plus: np.ndarray
    p_minus: np.ndarray


def drift_matrix(p: SystemParams, kind: DriftKind = DriftKind.LIOUVILLE) -> DriftMatrix2:
    kind = DriftKind(kind)
    damping = derived_rates(p).gamma_eff if kind is DriftKind.NO_JUMP else p.gamma
    entries = np.array(
        [
            [1j * p.delta - p.kappa / 2.0, -1j * p.g],
            [-1j * p.g, -1j * p.omega_m - damping / 2.0],
        ],
        dtype=complex,
    )
    return DriftMatrix2(entries=entries, kind=kind, params=p)


def _discriminant(m: np.ndarray) -> complex:
    # ((m11 - m22)/2)^2 + m12 m21 avoids cancelling the large omega_m parts.
    # Adding 0.0 turns a signed -0.0 imaginary part into +0.0 so that a real
    # negative D takes the principal root +i sqrt|D|.
    half_split = (m[0, 0] - m[1, 1]) / 2.0
    d = complex(half_split * half_split + m[0, 1] * m[1, 0])
    return complex(d.real, d.imag + 0.0)


def eigenvalues(m: DriftMatrix2) -> EigenPair2:
    """Closed-form roots ``tr/2 +- sqrt(D)`` with the principal square root.

    ``lambda_plus`` always carries ``+sqrt(D)``.
    """
    d = _discriminant(m.entries)
    root = cmath.sqrt(d)
    half_trace = m.trace / 2.0
    return EigenPair2(
        lambda_plus=half_trace + root,
        lambda_minus=half_trace - root,
        discriminant=d,
        delta_param=root,
    )


def degeneracy_threshold(pair: EigenPair2, kappa: float) -> float:
    return DEGENERACY_RTOL * (abs(pair.lambda_plus) + abs(pair.lambda_minus) + kappa)


def is_degenerate(m: DriftMatrix2, pair: EigenPair2 | None = None) -> bool:
    pair = eigenvalues(m) if pair is None else pair
    return pair.gap < degeneracy_threshold(pair, m.params.kappa)


def spectral_projectors(m: DriftMatrix2, conjugated: bool = False) -> ProjectorPair:
    """Eigenprojectors ``P_pm = (M - lam_mp I) / (lam_pm - lam_mp)``.

    With ``conjugated=True`` the projectors of the element-wise conjugate
    ``M*`` are returned, labelled by the conjugated eigenvalues, i.e. the
    complex conjugates of the unconjugated pair.
    """
    pair = eigenvalues(m)
    if is_degenerate(m, pair):
        raise DegenerateSpectrum(
            f"eigenvalue gap {pair.gap:.3e} is below the degeneracy threshold; "
            "use matrix_exp, which switches to the Jordan-block branch"
        )
    eye = np.eye(2, dtype=complex)
    lp, lm = pair.lambda_plus, pair.lambda_minus
    p_plus = (m.entries - lm * eye) / (lp - lm)
    p_minus = (m.entries - lp * eye) / (lm - lp)
    if conjugated:
        p_plus, p_minus = p_plus.conj(), p_minus.conj()
    return ProjectorPair(p_plus=p_plus, p_minus=p_minus)


def nilpotent_part(m: DriftMatrix2) -> tuple[complex, np.ndarray]:
    """Return ``(lam, N)`` with ``lam = tr/2`` and ``N = M - lam I``."""
    lam = m.trace / 2.0
    return lam, m.entries - lam * np.eye(2)


def matrix_exp(m: DriftMatrix2, tau, conjugated: bool = False) -> np.ndarray:
    """``exp(M tau)`` (or ``exp(M* tau)``) for scalar or array ``tau >= 0``.

    Array input returns shape ``tau.shape + (2, 2)``.
    """
    tau_arr = np.asarray(tau, dtype=float)
    if np.any(tau_arr < 0):
        raise ValueError("tau must be nonnegative")
    t = tau_arr[..., None, None]
    pair = eigenvalues(m)
    if is_degenerate(m, pair):
        lam, nil = nilpotent_part(m)
        out = np.exp(lam * t) * (np.eye(2) + nil * t)
    else:
        proj = spectral_projectors(m)
        out = proj.p_plus * np.exp(pair.lambda_plus * t) + proj.p_minus * np.exp(pair.lambda_minus * t)
    return out.conj() if conjugated else out


def taylor_expm(a: np.ndarray, order: int = 20) -> np.ndarray:
    """Scaling-and-squaring matrix exponential with a plain Taylor kernel.

    Kept deliberately independent of the spectral route so the two can check
    each other.
    """
    a = np.asarray(a, dtype=complex)
    norm = np.linalg.norm(a, 1)
    squarings = max(0, int(math.ceil(math.log2(norm))) + 2) if norm > 0 else 0
    scaled = a / (2.0**squarings)
    result = np.eye(a.shape[0], dtype=complex)
    term = np.eye(a.shape[0], dtype=complex)
    for k in range(1, order + 1):
        term = term @ scaled / k
        result = result + term
    for _ in range(squarings):
        result = result @ result
    return result
