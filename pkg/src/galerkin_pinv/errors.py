"""Exception hierarchy shared by every module in the package."""


class GalerkinError(Exception):
    """Base class for all package errors."""


class IterationFailure(GalerkinError):
    """The symmetric eigensolver did not converge."""


class RankAmbiguity(GalerkinError):
    """A forced rank cut falls between numerically indistinguishable eigenvalues."""


class NonRealRequired(GalerkinError, ValueError):
    """A resolvent was requested at a real spectral parameter."""


class DomainViolation(GalerkinError, ValueError):
    """A vector lies outside the domain required by the operation."""


class UnsupportedModel(GalerkinError):
    """The operation has no analytic reference for this model kind."""


class TruncationTooSmall(GalerkinError, ValueError):
    """The section size cuts off part of a vector that must be captured exactly."""


class ReferenceUnavailable(GalerkinError):
    """A reference truncation is too coarse to certify the reported residuals."""


class ConfigInvalid(GalerkinError, ValueError):
    """A run or experiment configuration failed validation.

    ``field`` names the offending configuration key when one is known.
    """

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message if field is None else f"{field}: {message}")
        self.field = field
