"""Clustering agreement metrics: ACC, NMI, pairwise F-score and precision."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

__all__ = [
    "LabelError",
    "Contingency",
    "contingency",
    "accuracy",
    "nmi",
    "pairwise_f_precision",
    "evaluate",
]


class LabelError(ValueError):
    """Label vectors that cannot be compared."""


@dataclass(frozen=True)
class Contingency:
    table: np.ndarray  # rows: true classes, columns: predicted clusters
    n: int


def _check(truth, pred, min_len=1):
    truth = np.asarray(truth).ravel()
    pred = np.asarray(pred).ravel()
    if truth.shape != pred.shape:
        raise LabelError(f"label vectors differ in length ({truth.size} vs {pred.size})")
    if truth.size < min_len:
        raise LabelError(f"need at least {min_len} labels, got {truth.size}")
    return truth, pred


def contingency(truth, pred) -> Contingency:
    truth, pred = _check(truth, pred)
    _, ti = np.unique(truth, return_inverse=True)
    _, pi = np.unique(pred, return_inverse=True)
    table = np.zeros((ti.max() + 1, pi.max() + 1), dtype=np.int64)
    np.add.at(table, (ti, pi), 1)
    return Contingency(table, int(truth.size))


def accuracy(truth, pred) -> float:
    """Fraction matched under the best one-to-one relabeling of ``pred``."""
    ct = contingency(truth, pred)
    size = max(ct.table.shape)
    padded = np.zeros((size, size), dtype=np.int64)
    padded[: ct.table.shape[0], : ct.table.shape[1]] = ct.table
    rows, cols = linear_sum_assignment(padded, maximize=True)
    return float(padded[rows, cols].sum() / ct.n)


def _entropy(counts: np.ndarray, n: int) -> float:
    p = counts[counts > 0] / n
    return float(-(p * np.log(p)).sum())


def nmi(truth, pred) -> float:
    """Mutual information over the geometric mean of the two entropies.

    Two single-cluster partitions count as identical (1.0); if only one side
    is trivial the score is 0.
    """
    ct = contingency(truth, pred)
    t, n = ct.table, ct.n
    h_true = _entropy(t.sum(axis=1), n)
    h_pred = _entropy(t.sum(axis=0), n)
    if h_true == 0 and h_pred == 0:
        return 1.0
    if h_true == 0 or h_pred == 0:
        return 0.0
    nz = t > 0
    outer = np.outer(t.sum(axis=1), t.sum(axis=0))
    mi = float((t[nz] / n * np.log(t[nz] * n / outer[nz])).sum())
    return float(np.clip(mi / np.sqrt(h_true * h_pred), 0.0, 1.0))


def _pairs(counts) -> int:
    counts = np.asarray(counts, dtype=np.int64)
    return int((counts * (counts - 1) // 2).sum())


def pairwise_f_precision(truth, pred) -> tuple[float, float]:
    """Pair-counting F-score and precision over all unordered sample pairs."""
    truth, pred = _check(truth, pred, min_len=2)
    t = contingency(truth, pred).table
    tp = _pairs(t)
    same_pred = _pairs(t.sum(axis=0))
    same_true = _pairs(t.sum(axis=1))
    fp = same_pred - tp
    fn = same_true - tp
    precision = tp / (tp + fp) if tp + fp else 1.0
    recall = tp / (tp + fn) if tp + fn else 1.0
    f = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return float(f), float(precision)


def evaluate(truth, pred) -> dict[str, float]:
    f, p = pairwise_f_precision(truth, pred)
    return {"nmi": nmi(truth, pred), "acc": accuracy(truth, pred), "fscore": f, "precision": p}
