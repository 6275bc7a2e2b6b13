"""Shared exception types."""


class ResourceLimitError(RuntimeError):
    """A configured memory or enumeration cap would be exceeded."""


class InvariantViolation(AssertionError):
    """An exactness or theorem-shaped internal invariant failed."""
