"""Finite-dimensional summing norms, cotype constants and sequence-space calculus
for operators on C(K) = l_inf^m."""

__version__ = "0.1.0"

from .errors import (
    CapacityError,
    CotypeLabError,
    InvalidDescriptor,
    InvalidInput,
    UnsupportedConfiguration,
)

__all__ = [
    "CapacityError",
    "CotypeLabError",
    "InvalidDescriptor",
    "InvalidInput",
    "UnsupportedConfiguration",
    "__version__",
]
