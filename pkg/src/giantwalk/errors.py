"""Exception types shared across the package."""


class GiantWalkError(Exception):
    """Base class for all package errors."""


class DomainError(GiantWalkError, ValueError):
    """An argument lies outside the domain where a quantity is defined."""


class SizeError(GiantWalkError, ValueError):
    """A request exceeds the size limits of a brute-force routine."""


class ContractViolation(GiantWalkError, RuntimeError):
    """An operation was called in a state its contract forbids."""


class ConfigError(GiantWalkError, ValueError):
    """An experiment configuration is invalid or infeasible."""
