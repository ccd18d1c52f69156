"""Shared exception taxonomy."""


class StayBrokerError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(StayBrokerError):
    """A value violates a domain invariant or a wire schema."""


class CompositionError(ValidationError):
    """A multi-leg proposal could not be assembled.

    `reason` is one of: "contiguity", "coverage", "duplicate-guesthouse",
    "cap-exceeded".
    """

    def __init__(self, reason: str, message: str):
        super().__init__(message)
        self.reason = reason


class MoneyOverflowError(StayBrokerError):
    """A price computation left the supported integer range."""


class ProtocolError(StayBrokerError):
    """Malformed envelope bytes or an illegal conversation event."""


class RegistryError(StayBrokerError):
    """Agent registration violated a cardinality or uniqueness rule."""


class StoreError(StayBrokerError):
    """Persistence-layer failure or illegal booking transition."""


class PrincipalError(StoreError):
    """The acting principal may not touch the addressed guesthouse."""


class ConsistencyError(StoreError):
    """An update would strand existing bookings or break inventory bounds."""


class ScenarioError(StayBrokerError):
    """A scenario file failed validation; `problems` lists line-tagged issues."""

    def __init__(self, problems):
        super().__init__("; ".join(problems) if problems else "invalid scenario")
        self.problems = list(problems)
