"""Exception taxonomy shared across the package."""


class TractorCalcError(Exception):
    """Base class for all package errors."""


class ArgumentError(TractorCalcError, ValueError):
    """Malformed argument: index out of range, shape/order mismatch."""


class SingularityError(TractorCalcError, ArithmeticError):
    """Division by a jet with zero constant term, singular metric, or an
    elementary-function domain violation.  Evaluating a chart at a
    conformal-factor zero raises this."""


class TruncationError(TractorCalcError, ValueError):
    """A derivative beyond the stored jet order was requested."""


class DomainError(TractorCalcError, ValueError):
    """Point outside a chart's domain, or the metric degenerates there."""


class VarianceError(TractorCalcError, ValueError):
    """Slot variances do not admit the requested operation."""


class DimensionError(TractorCalcError, ValueError):
    """Operation undefined at this dimension (d < 3 Schouten, d = 4 box-tilde)."""


class ScaleSingularityError(TractorCalcError, ArithmeticError):
    """Evaluation too close to the zero locus of a scale."""


class NotAlmostEinsteinError(TractorCalcError, ValueError):
    """The scale fails the parallelism residual beyond tolerance."""


class ScaleMismatchError(TractorCalcError, ValueError):
    """Tractor values trivialized by different scales were combined."""


class UnsupportedModelError(TractorCalcError, ValueError):
    """A named model or intrinsic chart is not available."""


class ConfigError(TractorCalcError, ValueError):
    """Bad verifier configuration (CLI exit code 2)."""
