"""Exception types raised by multitile. The CLI maps them to exit codes."""

from __future__ import annotations

from typing import Any


class MultitileError(Exception):
    exit_code = 1


class SchemeError(MultitileError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None) -> None:
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)
        self.line = line
        self.column = column


class GeometryError(MultitileError):
    pass


class ExactnessError(MultitileError):
    pass


class SingularStructureError(MultitileError):
    pass


class BudgetExceeded(MultitileError):
    exit_code = 3

    def __init__(self, what: str, budget: int) -> None:
        super().__init__(f"{what} budget exceeded (limit {budget})")
        self.what = what
        self.budget = budget


class CommensurableSchemeError(MultitileError):
    def __init__(self, verdict: Any) -> None:
        super().__init__(f"formula requires an incommensurable scheme; verdict: {verdict}")
        self.verdict = verdict
