"""Matrix proximal and projection operators used by the solver."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .tensor_algebra import svd

__all__ = ["StackedError", "l21_norm", "l21_prox", "procrustes"]


@dataclass(frozen=True)
class StackedError:
    """Per-view error blocks stacked vertically into one matrix.

    ``offsets[i]:offsets[i + 1]`` is the row range of view ``i``.
    """

    E: np.ndarray
    offsets: tuple[int, ...]

    @classmethod
    def from_blocks(cls, blocks: Sequence[np.ndarray]) -> "StackedError":
        sizes = [b.shape[0] for b in blocks]
        offsets = tuple(int(o) for o in np.concatenate([[0], np.cumsum(sizes)]))
        return cls(np.vstack(blocks), offsets)

    def block(self, i: int) -> np.ndarray:
        return self.E[self.offsets[i]:self.offsets[i + 1]]

    def blocks(self) -> list[np.ndarray]:
        return [self.block(i) for i in range(len(self.offsets) - 1)]


def l21_norm(E) -> float:
    return float(np.linalg.norm(np.asarray(E), axis=0).sum())


def l21_prox(G, tau: float) -> np.ndarray:
    """Column-wise shrinkage minimizing ``tau ||E||_{2,1} + 1/2 ||E - G||_F^2``.

    Columns whose norm does not exceed ``tau`` (ties included) become zero.
    """
    if not tau > 0:
        raise ValueError(f"tau must be positive, got {tau}")
    G = np.asarray(G, dtype=float)
    norms = np.linalg.norm(G, axis=0)
    scale = np.zeros_like(norms)
    live = norms > tau
    scale[live] = (norms[live] - tau) / norms[live]
    return G * scale


def procrustes(M) -> np.ndarray:
    """Nearest orthogonal matrix to ``M``: ``U V^T`` from ``M = U S V^T``.

    Maximizes ``trace(P^T M)`` over orthogonal P.  For rank-deficient M the full
    SVD already completes U and V to orthogonal bases, so any such completion
    is returned.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"procrustes needs a square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError("procrustes input contains non-finite entries")
    U, _, Vt = svd(M)
    return U @ Vt
