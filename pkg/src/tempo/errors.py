"""Exception hierarchy shared across the package."""


class TempoError(Exception):
    """Base class for all errors raised by this package."""


class NotFoundError(TempoError):
    """A referenced node, edge, or resource does not exist."""


class TierViolationError(TempoError):
    """An operation targeted a node tier it is not defined for."""


class InvariantError(TempoError):
    """A structural invariant of the graph or a record was violated."""


class ValidationError(TempoError):
    """Malformed input: corpus files, config files, API payloads."""


class IntegrityError(TempoError):
    """A snapshot or log file failed its integrity check."""


class SchemaError(TempoError):
    """A model response did not match the template's response schema."""


class TransportError(TempoError):
    """The model provider could not be reached or failed outright."""


class DeferralError(TempoError):
    """A pipeline stage exhausted its retries; inputs must be requeued."""

    def __init__(self, message: str, inputs=None):
        super().__init__(message)
        self.inputs = inputs


class DeferralExhausted(TempoError):
    """Inputs were deferred more times than the configured ceiling allows."""


class ClarificationError(TempoError):
    """Natural-language edit input could not be parsed into an edit kind."""


class PipelineBusyError(TempoError):
    """A forced pipeline run was requested while one is in flight."""
