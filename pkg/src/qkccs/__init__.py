"""k-component q-deformed charge coherent states: special functions, operators and checks."""

from .errors import (
    AliasingError,
    ConvergenceError,
    DomainError,
    InsufficientTruncationError,
    NoRealZeroError,
    QkccsError,
    ZeroSearchError,
)
from .qmath import QParams, SeriesValue

__all__ = [
    "AliasingError",
    "ConvergenceError",
    "DomainError",
    "InsufficientTruncationError",
    "NoRealZeroError",
    "QkccsError",
    "QParams",
    "SeriesValue",
    "ZeroSearchError",
]
