class ParseError(ValueError):
    """Source text falls outside the accepted grammar."""

    def __init__(self, message: str, line: int | None = None, col: int | None = None):
        self.line = line
        self.col = col
        where = f" (line {line}, col {col})" if line is not None else ""
        super().__init__(message + where)


class TunableError(ParseError):
    """A ``tunable(...)`` call whose argument is not a non-empty literal list."""


class EvalError(RuntimeError):
    """Raised by the interpreter: bad index, zero division, unknown name, type clash."""


class StepLimitExceeded(TimeoutError):
    """The per-call primitive-operation budget ran out."""
