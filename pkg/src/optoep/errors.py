"""Exception hierarchy shared by the numerical modules and the CLI."""


class OptoEPError(Exception):
    """Base class for all library errors."""


class ParameterError(OptoEPError, ValueError):
    """A physical parameter violates a domain invariant."""


class ConfigError(OptoEPError, ValueError):
    """Malformed run configuration (CLI exit code 1)."""


class DegenerateSpectrum(OptoEPError, ArithmeticError):
    """Eigenvalues are too close for the spectral (projector) route."""


class NoSignChange(OptoEPError, ValueError):
    """Root bracket does not enclose a sign change of the discriminant."""


class NonConverged(OptoEPError, ArithmeticError):
    """Iterative procedure hit its iteration cap."""


class NonUniqueSteadyState(OptoEPError, ArithmeticError):
    """The generator has more than one (numerically) zero mode."""


class PrecisionLoss(OptoEPError, ArithmeticError):
    """A residual check exceeded its tolerance."""
