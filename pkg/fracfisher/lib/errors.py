"""Exception hierarchy shared by every fracfisher module."""


class FracFisherError(Exception):
    """Base class for all library errors."""


class GridError(FracFisherError, ValueError):
    """Invalid grid parameters."""


class OrderError(FracFisherError, ValueError):
    """Stable order or fractional exponent outside its admissible range."""


class ParameterError(FracFisherError, ValueError):
    """Any other out-of-range argument."""


class GridMismatchError(FracFisherError):
    """Two profiles combined on different grids."""


class SpectralSymmetryError(FracFisherError):
    """Spectrum lacks the conjugate symmetry of a real function."""


class TruncationError(FracFisherError):
    """Mass or spectrum escapes the computational window."""


class SupportError(FracFisherError):
    """Density has no samples above the support threshold."""


class IntegrandError(FracFisherError):
    """Non-finite values in a quadrature integrand."""


class ConvergenceError(FracFisherError):
    """Quadrature node doubling did not reach the requested tolerance."""


class EnvelopeError(FracFisherError):
    """No algebraic tail envelope fits the density on this grid."""


class ContractViolation(FracFisherError):
    """A verified inequality failed beyond its tolerance."""


class ConfigError(FracFisherError, ValueError):
    """Malformed or out-of-range experiment configuration."""


class TruncationWarning(UserWarning):
    """Boundary samples are too large for the window to be trusted."""
