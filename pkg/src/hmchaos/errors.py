"""Shared exception types."""


class PreconditionError(ValueError):
    """An operation was invoked outside its documented parameter range."""


class BudgetError(PreconditionError):
    """An exact-enumeration request exceeds the configured size budget."""
