"""Exception hierarchy shared by every relog module."""

from __future__ import annotations


class RelogError(Exception):
    """Base class for all relog errors."""


class VocabularyConflict(RelogError):
    pass


class StructureError(RelogError):
    """A tuple or interpretation does not fit its structure."""


class DecodeError(RelogError):
    pass


class ModelFormatError(RelogError):
    pass


class EvaluationError(RelogError):
    """Unbound variable, unknown symbol or similar during evaluation."""


class BudgetExceeded(RelogError):
    """A resource budget (ESO candidates, choices, nodes) ran out."""

    def __init__(self, message: str, dimension: str = "eso_candidates"):
        super().__init__(message)
        self.dimension = dimension


class UnsupportedInput(RelogError):
    pass


class ParseError(RelogError):
    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ValidationError(RelogError):
    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(str(d) for d in self.diagnostics))


class ResolverError(RelogError):
    """A nondeterministic choice was required but no resolver was supplied."""


class SimulationError(RelogError):
    pass
