"""Exception types shared across the package."""


class CosmowaveError(Exception):
    """Base class for all package errors."""


class DomainError(CosmowaveError):
    """Argument outside the mathematical domain (e.g. negative time)."""


class NonPositiveSpeed(CosmowaveError):
    """A tabulated speed profile evaluated to a(t) <= 0."""


class QuadratureFailure(CosmowaveError):
    """Adaptive quadrature could not meet its tolerance within budget."""


class Unconverged(CosmowaveError):
    """Extremum search cannot certify a tail limit."""


class InconsistentForm(CosmowaveError):
    """A rule set was requested for the wrong damping sign convention."""


class NotBlowUpRegime(CosmowaveError):
    """An upper lifespan bound was requested where no blow-up rule fired."""


class GridTooCoarse(CosmowaveError):
    """Grid spacing cannot resolve the initial data support."""


class NonFinite(CosmowaveError):
    """A field value became NaN or infinite during stepping."""


class NoBlowupSignature(CosmowaveError):
    """Trace tail does not look like a blow-up profile."""


class InvalidSweep(CosmowaveError):
    """Sweep request malformed (too few epsilons, duplicates, ...)."""


class InsufficientPoints(CosmowaveError):
    """Too few uncensored points for the requested fit."""


class DegenerateFit(CosmowaveError):
    """Fit abscissae carry no spread (all epsilons equal)."""


class MismatchedSpec(CosmowaveError):
    """Sweep and regime report describe different problems."""


class ParseError(CosmowaveError):
    """Configuration file is not syntactically valid."""

    def __init__(self, message, line=None, column=None):
        super().__init__(message)
        self.line = line
        self.column = column


class ValidationError(CosmowaveError):
    """Configuration value violates a documented constraint."""

    def __init__(self, key, message):
        super().__init__(f"{key}: {message}")
        self.key = key
