"""Exception hierarchy for lfqtok.

Every class also derives from the builtin a caller would naturally catch,
so ``except ValueError`` keeps working for shape and configuration problems.
"""
from __future__ import annotations

from typing import Optional


class LfqtokError(Exception):
    pass


class DimensionError(LfqtokError, ValueError):
    """Shape, rank or channel mismatch."""


class ShapeError(DimensionError):
    """A frame-count or divisibility constraint on one axis is violated."""

    def __init__(self, message: str, axis: Optional[str] = None):
        super().__init__(message)
        self.axis = axis


class DomainError(LfqtokError, ValueError):
    """A value lies outside its admissible range."""


class ConfigurationError(LfqtokError, ValueError):
    pass


class ContractError(LfqtokError, RuntimeError):
    """The API was used in a way its contract does not allow."""


class TrainingFault(LfqtokError, RuntimeError):
    def __init__(self, component: str, step: int, value: float):
        super().__init__(f"Loss component '{component}' is not finite at step {step}: {value!r}")
        self.component = component
        self.step = step
        self.value = value


class FormatError(LfqtokError, ValueError):
    """A file on disk does not match its documented layout."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field
