"""Exception types shared across the toolkit."""


class EsolabError(Exception):
    """Base class for all esolab errors."""


class ValidationError(EsolabError, ValueError):
    """A precondition or construction constraint was violated."""


class ParseError(ValidationError):
    """Expression syntax error, with source position and expected tokens."""

    def __init__(self, message: str, position: int, expected: tuple = ()):
        self.position = position
        self.expected = tuple(expected)
        detail = f"{message} at position {position}"
        if self.expected:
            detail += " (expected " + " or ".join(self.expected) + ")"
        super().__init__(detail)


class EvaluationError(EsolabError, ArithmeticError):
    """Expression evaluation fault: domain error or unbound variable."""


class FactorizationError(ValidationError):
    """Modal factorization or Lyapunov residual exceeded its tolerance."""

    def __init__(self, message: str, residual: float):
        self.residual = residual
        super().__init__(f"{message} (residual {residual:.3e})")


class DivergenceError(EsolabError, RuntimeError):
    """A simulation produced non-finite values and was aborted."""

    def __init__(self, message: str, t: float | None = None):
        self.t = t
        if t is not None:
            message = f"{message} at t = {t:.6g}"
        super().__init__(message)


class ConfigError(ValidationError):
    """Configuration file violated the schema; carries a JSON-pointer path."""

    def __init__(self, pointer: str, message: str):
        self.pointer = pointer
        super().__init__(f"{pointer}: {message}")
