"""Symmetric graph contrastive learning for recommendation."""

from sgcl.kernels import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "__version__"]
