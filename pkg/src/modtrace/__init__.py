"""Traces of modular functions over CM points and geodesics, their weight 1/2
generating series, and numerical checks of the underlying theta kernels."""

from modtrace.errors import DomainError, PrecisionError

__all__ = ["DomainError", "PrecisionError"]
__version__ = "0.1.0"
