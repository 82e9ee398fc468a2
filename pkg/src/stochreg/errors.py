"""Exception types shared across the package."""


class ValidationError(ValueError):
    """An input violates a documented precondition."""


class NumericalError(RuntimeError):
    """A numerical procedure failed to reach its target accuracy."""

    def __init__(self, message, **context):
        if context:
            details = ", ".join(f"{k}={v!r}" for k, v in context.items())
            message = f"{message} ({details})"
        super().__init__(message)
        self.context = context
