"""Exception types shared across qqlab.

Precondition failures are ValueErrors (pydantic's ValidationError is one too),
broken post-conditions are RuntimeErrors. The CLI maps them to exit codes 1 and 2.
"""


class PreconditionError(ValueError):
    """An operation was called outside its domain (bad n, r, promise, ...)."""


class EnumerationGuardExceeded(PreconditionError):
    """A brute-force enumeration would exceed the configured state-space cap."""


class InvariantViolation(RuntimeError):
    """A computed object failed one of its post-conditions."""
