"""Exception types raised across the package."""


class AbcError(Exception):
    """Base class for package errors."""


class InvalidScaleError(AbcError, ValueError):
    """A kernel scale ``h`` was not strictly positive."""


class EnvelopeError(AbcError):
    """A rejection-sampling ratio exceeded 1, so the envelope constant is too small."""


class BudgetExhausted(AbcError):
    """The simulation budget ran out before the sampler finished.

    ``state`` carries whatever partial result the sampler had, ``diagnostics``
    a dict of counters (simulations used, acceptances, current scale, ...).
    """

    def __init__(self, message, state=None, diagnostics=None):
        super().__init__(message)
        self.state = state
        self.diagnostics = dict(diagnostics or {})


class DegenerateSummaryError(AbcError, ValueError):
    """A summary coordinate has zero variability, so it cannot be scaled."""

    def __init__(self, message, coordinates=()):
        super().__init__(message)
        self.coordinates = tuple(coordinates)


class ParseError(AbcError, ValueError):
    """Malformed sequence table or configuration text."""


class CatalogError(AbcError, KeyError):
    """Unknown model, scheme, oracle or study identifier."""

    def __str__(self):
        return str(self.args[0]) if self.args else ""
