"""Shared exception types mapped to CLI exit codes."""


class GuardExceeded(RuntimeError):
    """A desk-scale size guard refused the computation (CLI exit 3)."""


class InvariantViolation(AssertionError):
    """A mathematical invariant failed at runtime (CLI exit 2)."""


class InputError(ValueError):
    """Malformed user input (CLI exit 4)."""
