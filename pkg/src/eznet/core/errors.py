"""Exceptions raised by the eznet library."""


class DomainError(ValueError):
    """An input falls outside the domain where a statistic or model is defined."""


class EdgeListParseError(DomainError):
    """A line of an edge list could not be parsed."""

    def __init__(self, line_number: int, message: str):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number
