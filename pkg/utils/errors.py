"""
Error types raised by the analysis code.

Agents catch MoebiusError at their run_* boundary and turn it into a status dict;
the CLI maps it to exit code 1 (2 for ConfigurationError).
"""

from typing import Any, Dict, List, Optional


class MoebiusError(Exception):
    """Base class for every analysis failure."""


class DomainError(MoebiusError, ValueError):
    pass


class AdmissibilityError(DomainError):
    """Mode or family does not descend to the Möbius quotient (m + n even, m = n)."""


class OutOfRangeError(MoebiusError, IndexError):
    pass


class UnsupportedOrderError(MoebiusError):
    pass


class DegenerateSpecError(MoebiusError):
    pass


class NonConvergenceError(MoebiusError):
    def __init__(self, message: str, counts: Optional[Dict[int, int]] = None):
        super().__init__(message)
        self.counts = counts or {}


class ExtractionError(MoebiusError):
    pass


class InternalConsistencyError(MoebiusError):
    pass


class RootFindingError(MoebiusError):
    pass


class PoleError(MoebiusError):
    def __init__(self, message: str, branch: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.branch = branch or {}


class ClassificationError(MoebiusError):
    pass


class EulerViolationError(MoebiusError):
    def __init__(self, message: str, ledger: Any = None):
        super().__init__(message)
        self.ledger = ledger


class CourantBoundError(MoebiusError):
    pass


class ScreeningError(MoebiusError):
    pass


class ConfigurationError(MoebiusError):
    def __init__(self, message: str, problems: Optional[List[str]] = None):
        super().__init__(message)
        self.problems = problems or []


class RenderError(MoebiusError, OSError):
    pass
