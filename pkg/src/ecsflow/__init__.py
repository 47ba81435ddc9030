"""Unsupervised flow-regime identification from Euler characteristic surfaces."""

__version__ = "0.1.0"

from ._backend import BACKEND  # noqa: E402

__all__ = ["BACKEND", "__version__"]
