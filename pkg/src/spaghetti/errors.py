"""Exceptions shared across the package."""


class DegenerateInput(ValueError):
    """Input cannot support a run: duplicate x, too few points, non-finite
    values, or an out-of-range configuration."""


class NotPositiveDefinite(ArithmeticError):
    """A symmetric solve met a nonpositive pivot."""


class ParseError(ValueError):
    """Malformed CSV input; carries the 1-based line number."""

    def __init__(self, line_number: int, message: str):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number
