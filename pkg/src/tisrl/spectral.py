"""Spectral clustering on a symmetric nonnegative affinity matrix.

Symmetric normalized embedding (top eigenvectors of ``D^-1/2 W D^-1/2`` with
unit-norm rows) followed by k-means++ seeded Lloyd iterations.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh

__all__ = [
    "SpectralConfig",
    "KMeansResult",
    "validate_affinity",
    "normalized_embedding",
    "kmeans",
    "cluster",
]

log = logging.getLogger(__name__)

DEGREE_FLOOR = 1e-12


@dataclass(frozen=True)
class SpectralConfig:
    k: int
    kmeans_restarts: int = 20
    kmeans_max_iters: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"k must be positive, got {self.k}")
        if self.kmeans_restarts < 1:
            raise ValueError("kmeans_restarts must be at least 1")
        if self.kmeans_max_iters < 1:
            raise ValueError("kmeans_max_iters must be at least 1")


@dataclass
class KMeansResult:
    labels: np.ndarray
    centers: np.ndarray
    inertia: float
    restart: int
    history: list[float]


def validate_affinity(W) -> np.ndarray:
    W = np.asarray(W, dtype=float)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise ValueError(f"affinity must be square, got shape {W.shape}")
    if not np.all(np.isfinite(W)):
        raise ValueError("affinity contains non-finite entries")
    if not np.array_equal(W, W.T):
        raise ValueError("affinity is not symmetric")
    if (W < 0).any():
        raise ValueError("affinity has negative entries")
    return W


def normalized_embedding(W, k: int) -> np.ndarray:
    """Rows of the top-k eigenvectors of the normalized affinity, scaled to unit length."""
    W = validate_affinity(W)
    n = W.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k={k} outside 1..{n}")
    deg = W.sum(axis=1)
    if (deg <= 0).any():
        log.warning("%d isolated vertices; regularizing their degree", int((deg <= 0).sum()))
        deg = np.where(deg <= 0, DEGREE_FLOOR, deg)
    d = 1.0 / np.sqrt(deg)
    M = d[:, None] * W * d[None, :]
    M = (M + M.T) / 2
    # eigh sorts ascending; the top-k block is the last k columns
    _, vecs = eigh(M, subset_by_index=[n - k, n - 1])
    U = vecs[:, ::-1]
    norms = np.linalg.norm(U, axis=1, keepdims=True)
    return np.divide(U, norms, out=np.zeros_like(U), where=norms > 0)


def _kmeans_pp(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = X.shape[0]
    centers = [X[rng.integers(n)]]
    d2 = ((X - centers[0]) ** 2).sum(axis=1)
    for _ in range(1, k):
        total = d2.sum()
        idx = rng.integers(n) if total <= 0 else rng.choice(n, p=d2 / total)
        centers.append(X[idx])
        d2 = np.minimum(d2, ((X - X[idx]) ** 2).sum(axis=1))
    return np.array(centers)


def _sq_dists(X, centers):
    return ((X[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)


def _lloyd(X, centers, max_iters):
    k = centers.shape[0]
    history = []
    labels = None
    for _ in range(max_iters):
        D = _sq_dists(X, centers)
        new = D.argmin(axis=1)
        history.append(float(D[np.arange(len(X)), new].sum()))
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
        for c in range(k):
            members = labels == c
            if members.any():
                centers[c] = X[members].mean(axis=0)
            else:
                # empty cluster: move it to the point worst served by the current centers
                far = _sq_dists(X, centers).min(axis=1).argmax()
                centers[c] = X[far]
    D = _sq_dists(X, centers)
    labels = D.argmin(axis=1)
    inertia = float(D[np.arange(len(X)), labels].sum())
    return labels, centers, inertia, history


def kmeans(points, cfg: SpectralConfig) -> KMeansResult:
    """Best-inertia Lloyd run over ``cfg.kmeans_restarts`` seeds ``seed + r``.

    Ties in inertia go to the lowest restart index, so the result depends only
    on the points and the config.
    """
    X = np.asarray(points, dtype=float)
    n = X.shape[0]
    if n < cfg.k:
        raise ValueError(f"cannot form {cfg.k} clusters from {n} points")
    best = None
    for r in range(cfg.kmeans_restarts):
        rng = np.random.default_rng(cfg.seed + r)
        labels, centers, inertia, history = _lloyd(X, _kmeans_pp(X, cfg.k, rng), cfg.kmeans_max_iters)
        if best is None or inertia < best.inertia:
            best = KMeansResult(labels, centers, inertia, r, history)
    return best


def cluster(W, cfg: SpectralConfig) -> np.ndarray:
    W = validate_affinity(W)
    if cfg.k == 1:
        return np.zeros(W.shape[0], dtype=int)
    return kmeans(normalized_embedding(W, cfg.k), cfg).labels
