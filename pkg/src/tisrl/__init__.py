"""Tensor-based intrinsic subspace representation learning for multi-view clustering."""

__version__ = "0.1.0"
