"""Exceptional points of linearized red-sideband cavity optomechanics.

Closed-form Liouvillian, Hamiltonian (no-jump) and hybrid exceptional-point
locations, the Gaussian second moments and two-time correlations they control,
and a brute-force truncated-Fock Lindblad oracle that checks all of it.
"""

from .errors import (
    ConfigError,
    DegenerateSpectrum,
    NonConverged,
    NonUniqueSteadyState,
    NoSignChange,
    ParameterError,
    PrecisionLoss,
)
from .params import DerivedRates, SystemParams, derived_rates, red_sideband, validate

__all__ = [
    "ConfigError",
    "DegenerateSpectrum",
    "DerivedRates",
    "NoSignChange",
    "NonConverged",
    "NonUniqueSteadyState",
    "ParameterError",
    "PrecisionLoss",
    "SystemParams",
    "derived_rates",
    "red_sideband",
    "validate",
]

__version__ = "0.1.0"
