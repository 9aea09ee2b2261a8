"""Exception hierarchy shared by every module."""


class QPKEError(Exception):
    """Base class for all library errors."""


class CapacityError(QPKEError):
    """A state, ensemble or enumeration would exceed the configured size cap."""


class ShapeError(QPKEError, ValueError):
    """Dimensions or register factorizations do not line up."""


class InvalidStateError(QPKEError, ValueError):
    """A matrix or vector violates a quantum-object invariant."""


class InconsistentMeasurementError(QPKEError):
    """Every outcome of a measurement has (numerically) zero probability."""


class DomainError(QPKEError, ValueError):
    """An argument lies outside the domain an operation is defined on."""


class PolicyViolation(QPKEError):
    """An oracle was invoked in a way the attack model forbids."""


class OverlapViolation(PolicyViolation):
    """A CCA2 phase-2 query has non-zero amplitude on the challenge ciphertext."""


class TransformError(QPKEError):
    """A simulator transformation could not be applied to an adversary."""


class ConfigError(QPKEError, ValueError):
    """An experiment configuration is malformed or references unknown names."""
