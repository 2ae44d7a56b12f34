"""Exception types shared across the package.

The hierarchy mirrors how failures are reported: configuration and input
validation problems, synthesis (spectral factorization) problems, runtime
integration problems, and fit problems.  The CLI maps these onto exit codes.
"""


class NmqError(Exception):
    """Base class for all package-specific errors."""


class DimensionError(NmqError, ValueError):
    """Operands have inconsistent or invalid dimensions."""


class ConfigError(NmqError, ValueError):
    """A configuration document is malformed or fails validation."""


class PSDValidationError(NmqError, ValueError):
    """A rational power spectral density violates its invariants
    (properness, realness, positivity)."""


class MarginalSpectrumError(NmqError, ValueError):
    """The PSD has roots on the imaginary s-axis, so no strictly stable
    spectral factor exists."""


class FactorizationError(NmqError, RuntimeError):
    """Spectral factorization or realization synthesis failed."""


class StabilityError(NmqError, ValueError):
    """A matrix required to be Hurwitz is not."""


class ControllabilityError(NmqError, RuntimeError):
    """The controllability Gramian is singular beyond tolerance."""


class FilterInfeasibleError(NmqError, RuntimeError):
    """No stabilizing solution of the filter Riccati equation exists."""


class StepSizeError(NmqError, RuntimeError):
    """Integration accuracy degraded beyond tolerance; a smaller step is
    required."""


class PositivityError(NmqError, RuntimeError):
    """A conditional state lost positivity beyond tolerance."""


class NonUniqueSteadyStateError(NmqError, RuntimeError):
    """The Liouvillian null space is not one-dimensional."""


class FitFailureError(NmqError, RuntimeError):
    """Nonlinear least-squares fit did not converge."""
