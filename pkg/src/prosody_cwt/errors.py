"""Exception types shared across the toolkit."""


class InvalidInputError(ValueError):
    """Raised when an operation receives data outside its domain."""


class ParseError(ValueError):
    """Malformed input file. Carries the 1-based line number."""

    def __init__(self, path, lineno, message):
        self.path = str(path)
        self.lineno = lineno
        super().__init__(f"{self.path}:{lineno}: {message}")


class ValidationError(ValueError):
    """Well-formed input that violates a structural invariant."""


class RunError(RuntimeError):
    """A corpus run failed as a whole."""
