"""Exception types shared across the package."""


class ValidationError(ValueError):
    """A configuration or scenario field violates its constraint.

    Carries the offending field name so callers (and the CLI) can point
    at exactly what to fix.
    """

    def __init__(self, field: str, message: str):
        self.field = field
        self.message = message
        super().__init__(f"{field}: {message}")


class ScenarioParseError(ValueError):
    """A scenario file could not be parsed (syntax, not semantics)."""
