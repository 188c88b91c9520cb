"""Physical parameter set and derived rate combinations.

All rates are angular frequencies (rad/s). Conversion from Hz happens only at
the CLI boundary.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

from .errors import ParameterError

TWO_PI = 2.0 * math.pi


class GoodCavityWarning(UserWarning):
    """omega_m is not at least ten times every other rate."""


@dataclass(frozen=True)
class SystemParams:
    """Rates of the linearized optomechanical model.

    Parameters
    ----------
    delta : float
        Cavity detuning (rad/s). The red sideband is ``delta = -omega_m``.
    omega_m : float
        Mechanical frequency (rad/s).
    g : float
        Linearized optomechanical coupling (rad/s).
    kappa, gamma : float
        Optical and mechanical energy decay rates (rad/s).
    n_th : float
        Mean thermal phonon occupation; real, not necessarily integer.
    """

    delta: float
    omega_m: float
    g: float
    kappa: float
    gamma: float
    n_th: float

    @classmethod
    def from_hz(cls, *, omega_m_hz, kappa_hz, gamma_hz, n_th, g_hz=0.0, delta_hz=None):
        """Build from ordinary frequencies; ``delta_hz=None`` means red sideband."""
        if delta_hz is None:
            delta_hz = -omega_m_hz
        return cls(
            delta=TWO_PI * delta_hz,
            omega_m=TWO_PI * omega_m_hz,
            g=TWO_PI * g_hz,
            kappa=TWO_PI * kappa_hz,
            gamma=TWO_PI * gamma_hz,
            n_th=float(n_th),
        )

    def with_g(self, g: float) -> SystemParams:
        return replace(self, g=float(g))

    def with_n_th(self, n_th: float) -> SystemParams:
        return replace(self, n_th=float(n_th))

    @property
    def is_red_sideband(self) -> bool:
        return math.isclose(self.delta, -self.omega_m, rel_tol=1e-12, abs_tol=0.0)

    @property
    def good_cavity(self) -> bool:
        return self.omega_m >= 10.0 * max(self.kappa, self.g, self.gamma)


@dataclass(frozen=True)
class DerivedRates:
    mu: float
    big_gamma: float
    gamma_eff: float


def validate(p: SystemParams, *, warn: bool = True) -> SystemParams:
    """Check the domain invariants and return ``p`` unchanged.

    Raises
    ------
    ParameterError
        Naming the first violated invariant.
    """
    for name in ("delta", "omega_m", "g", "kappa", "gamma", "n_th"):
        value = getattr(p, name)
        if not math.isfinite(value):
            raise ParameterError(f"{name} must be finite, got {value!r}")
    if p.omega_m <= 0:
        raise ParameterError("omega_m must be positive")
    if p.g < 0:
        raise ParameterError("g must be nonnegative")
    if p.kappa <= 0:
        raise ParameterError("kappa must be positive")
    if p.gamma <= 0:
        raise ParameterError("gamma must be positive")
    if p.kappa <= p.gamma:
        raise ParameterError("kappa must exceed gamma")
    if p.n_th < 0:
        raise ParameterError("n_th must be nonnegative")
    if warn and not p.good_cavity:
        warnings.warn(
            "good-cavity condition omega_m >= 10*max(kappa, g, gamma) is violated",
            GoodCavityWarning,
            stacklevel=2,
        )
    return p


def red_sideband(p: SystemParams) -> SystemParams:
    """Return ``p`` with the detuning pinned to ``-omega_m``."""
    return replace(p, delta=-p.omega_m)


def derived_rates(p: SystemParams) -> DerivedRates:
    return DerivedRates(
        mu=(p.kappa + p.gamma) / 4.0,
        big_gamma=(p.kappa - p.gamma) / 4.0,
        gamma_eff=p.gamma * (2.0 * p.n_th + 1.0),
    )


def cryogenic_reference(g: float = 0.0) -> SystemParams:
    """Helium-bath (4 K) reference point used for the eigenvalue figures.

    kappa/2pi = 150 kHz, gamma/2pi = 0.1 Hz, omega_m/2pi = 1 MHz,
    n_th = 8.33e4, red sideband. ``g`` is given in rad/s.
    """
    p = SystemParams.from_hz(omega_m_hz=1.0e6, kappa_hz=150.0e3, gamma_hz=0.1, n_th=8.33e4)
    return p.with_g(g)
