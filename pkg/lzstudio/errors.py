"""
LZS Studio - Exception hierarchy
Custom exceptions shared by the model builders, solvers and the command line.
"""

from typing import Any, List, Optional, Sequence, Tuple


class LzsError(Exception):
    """Base exception for all LZS Studio errors"""
    pass


class ParameterValidationError(LzsError):
    """Exception raised when parameter validation fails"""
    pass


class ConfigIssue(object):
    """A single configuration problem with its position in the source text."""

    __slots__ = ("message", "line", "column")

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        self.message = message
        self.line = line
        self.column = column

    def __str__(self) -> str:
        if self.line is None:
            return self.message
        return f"line {self.line}, column {self.column}: {self.message}"

    def __repr__(self) -> str:
        return f"ConfigIssue({str(self)!r})"


class ConfigError(ParameterValidationError):
    """Exception raised when a run configuration cannot be accepted.

    Carries every issue found in one pass so the user can fix them together.
    """

    def __init__(self, issues: Sequence[ConfigIssue]):
        self.issues: List[ConfigIssue] = list(issues)
        lines = "\n".join(f"  - {issue}" for issue in self.issues)
        super().__init__(f"Invalid configuration ({len(self.issues)} issue(s)):\n{lines}")


class MissingBathError(ParameterValidationError):
    """Exception raised when a coupling references a bath tag that was not declared"""
    pass


class ConvergenceError(LzsError):
    """Exception raised when a numerical procedure does not reach its tolerance"""
    pass


class UnitarityError(ConvergenceError):
    """Exception raised when a propagator drifts away from unitarity"""
    pass


class TruncationError(ConvergenceError):
    """Exception raised when a basis or harmonic truncation is insufficient"""
    pass


class DegenerateStateError(LzsError):
    """Exception raised when a required state is not uniquely defined"""
    pass


class InvariantViolationError(LzsError):
    """Exception raised when an assembled object breaks a structural invariant"""
    pass


class NonUniqueSteadyStateError(LzsError):
    """Exception raised when the generator has more than one stationary state.

    Attributes:
        candidates: the density matrices belonging to the near-zero eigenvalues
        eigenvalues: the corresponding eigenvalues
    """

    def __init__(self, message: str, candidates: Tuple[Any, ...], eigenvalues: Tuple[complex, ...]):
        super().__init__(message)
        self.candidates = candidates
        self.eigenvalues = eigenvalues


class ProcessingError(LzsError):
    """Exception raised when a run mode fails as a whole"""
    pass
