"""Exception hierarchy shared by all modules."""


class SqrtPotError(Exception):
    """Base class for every failure raised by this package."""


class NumericalError(SqrtPotError):
    """A computation could not deliver a result to the requested accuracy."""


class PoleError(NumericalError):
    """Argument sits on a pole of the gamma function."""


class OverflowSumError(NumericalError):
    """A partial sum left the representable floating-point range."""


class NoSignChangeError(NumericalError):
    """Root bracket endpoints do not have opposite signs."""


class NonFiniteError(NumericalError):
    """A function evaluation returned NaN or infinity."""


class QuadratureError(NumericalError):
    """Adaptive quadrature failed to reach the requested tolerance."""


class ConvergenceError(NumericalError):
    """A series or iteration did not converge within its term cap."""


class CancellationError(NumericalError):
    """Loss of significant digits exceeded the allowed budget."""


class AsymptoticRegimeError(NumericalError):
    """The asymptotic series is not usable at this argument."""


class SeriesDomainError(NumericalError):
    """Argument lies outside the configured domain of the power series."""


class NoOverlapError(NumericalError):
    """No matching radius satisfies both series and asymptotic criteria."""


class InstabilityError(NumericalError):
    """Connection coefficients moved when the matching radius was perturbed."""


class DivergentIntegralError(NumericalError):
    """The integral representation does not converge at these parameters."""


class UnreachableRegionError(NumericalError):
    """Requested parameters are beyond what the evaluators can resolve."""


class ZeroConnectionError(NumericalError):
    """K2 vanishes to working accuracy, so the S-matrix is undefined."""


class UnwrapAmbiguityError(NumericalError):
    """Consecutive phases differ too much to unwrap unambiguously."""


class NormalizationError(NumericalError):
    """Normalization integral of a bound state failed."""


class IntegrationError(NumericalError):
    """Direct ODE integration failed (step too large, turning point off-grid)."""
