"""Augmented Lagrangian solver for tensor-based intrinsic subspace representation.

Model, per view ``i`` with data ``X_i`` (``d_i x n``, samples as columns)::

    min  ||phi(C_1..C_v)||_tnn + lam * ||[E_1; ...; E_v]||_{2,1}
    s.t. X_i = X_i Z_i + E_i,   Z_i = P_i C_i,   P_i^T P_i = I

The tensor constraint is split through an auxiliary tensor ``Q = phi(C)`` with
multiplier ``W``; the two matrix constraints carry multipliers ``Yx_i`` and
``Yz_i``.  Every block update below is a closed form.
"""

from __future__ import annotations

import csv
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from threadpoolctl import threadpool_limits

from .dataset_io import MultiViewDataset
from .prox_ops import StackedError, l21_norm, l21_prox, procrustes
from .tensor_algebra import construct_phi, phi_inverse, tnn, tnn_prox

__all__ = [
    "TisrlConfig",
    "SolverState",
    "TraceRow",
    "SolverResult",
    "CONVERGED",
    "MAX_ITERS_REACHED",
    "update_Z",
    "update_P",
    "update_E",
    "update_C",
    "update_Q",
    "update_multipliers",
    "residuals",
    "initial_state",
    "run",
    "intrinsic_affinity",
    "write_trace",
    "TRACE_HEADER",
    "resolve_threads",
]

CONVERGED = "converged"
MAX_ITERS_REACHED = "max_iters_reached"
TRACE_HEADER = ["iter", "view", "err1", "err2", "err3", "mu", "rho", "objective"]


@dataclass(frozen=True)
class TisrlConfig:
    lam: float
    epsilon: float = 1e-7
    mu0: float = 1e-5
    rho0: float = 1e-5
    eta: float = 2.0
    mu_max: float = 1e12
    rho_max: float = 1e12
    max_iters: int = 200

    def __post_init__(self):
        for name in ("lam", "epsilon", "mu0", "rho0", "mu_max", "rho_max"):
            value = getattr(self, name)
            if not (value > 0 and np.isfinite(value)):
                raise ValueError(f"{name} must be positive and finite, got {value}")
        if not self.eta > 1:
            raise ValueError(f"eta must exceed 1, got {self.eta}")
        if self.mu0 > self.mu_max or self.rho0 > self.rho_max:
            raise ValueError("initial penalties must not exceed their caps")
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be at least 1, got {self.max_iters}")


@dataclass
class SolverState:
    Z: list[np.ndarray]
    P: list[np.ndarray]
    C: list[np.ndarray]
    E: list[np.ndarray]
    Yx: list[np.ndarray]
    Yz: list[np.ndarray]
    C_tensor: np.ndarray
    Q: np.ndarray
    W: np.ndarray
    mu: float
    rho: float
    iter: int = 0

    @property
    def v(self) -> int:
        return len(self.Z)


@dataclass(frozen=True)
class TraceRow:
    iter: int
    err1: tuple[float, ...]
    err2: tuple[float, ...]
    err3: float
    mu: float
    rho: float
    objective: float

    def max_error(self) -> float:
        return max(max(self.err1), max(self.err2), self.err3)


@dataclass
class SolverResult:
    state: SolverState
    trace: list[TraceRow]
    status: str

    @property
    def iterations(self) -> int:
        return len(self.trace)


def resolve_threads(threads: Optional[int] = None) -> int:
    """Thread cap: explicit value, else ``TISRL_THREADS``, else 1."""
    if threads is None:
        threads = int(os.environ.get("TISRL_THREADS", "1") or 1)
    return max(1, int(threads))


def _gram_factor(X: np.ndarray):
    # mu (I + X^T X) Z = rhs  <=>  (I + X^T X) Z = rhs / mu; the factor is mu-free
    return cho_factor(np.eye(X.shape[1]) + X.T @ X)


def update_Z(X, E, Yx, Yz, P, C, mu, factor=None) -> np.ndarray:
    """Z = (mu I + mu X^T X)^{-1} (X^T Yx + mu X^T X - mu X^T E - Yz + mu P C)."""
    if not mu > 0:
        raise ValueError(f"mu must be positive, got {mu}")
    if factor is None:
        factor = _gram_factor(X)
    rhs = X.T @ (Yx / mu + X - E) - Yz / mu + P @ C
    return cho_solve(factor, rhs)


def update_P(Z, Yz, C, mu) -> np.ndarray:
    """Orthogonal Procrustes step: nearest orthogonal matrix to (Z + Yz/mu) C^T."""
    return procrustes((Z + Yz / mu) @ C.T)


def update_E(Xs, Zs, Yxs, mu, lam) -> StackedError:
    """Joint l2,1 shrinkage of the vertically stacked ``X_i - X_i Z_i + Yx_i / mu``.

    The multiplier enters with a plus sign: ``<Yx, R - E> + mu/2 ||R - E||^2``
    completes to ``mu/2 ||E - (R + Yx/mu)||^2``.
    """
    G = StackedError.from_blocks([X - X @ Z + Yx / mu for X, Z, Yx in zip(Xs, Zs, Yxs)])
    return StackedError(l21_prox(G.E, lam / mu), G.offsets)


def update_C(Z, P, Yz, Q_i, W_i, mu, rho) -> np.ndarray:
    """C = (rho I + mu P^T P)^{-1} (rho Q_i - W_i + P^T Yz + mu P^T Z), with P^T P = I."""
    return (rho * Q_i - W_i + P.T @ (Yz + mu * Z)) / (rho + mu)


def update_Q(C_tensor, W, rho) -> np.ndarray:
    """Tensor nuclear norm prox of ``C_tensor + W / rho`` with weight ``1 / rho``."""
    return tnn_prox(C_tensor + W / rho, 1.0 / rho)


def residuals(Xs, state: SolverState):
    """Constraint residual matrices ``(X - XZ - E, Z - PC)`` per view and ``C_tensor - Q``."""
    rx = [X - X @ Z - E for X, Z, E in zip(Xs, state.Z, state.E)]
    rz = [Z - P @ C for Z, P, C in zip(state.Z, state.P, state.C)]
    return rx, rz, state.C_tensor - state.Q


def update_multipliers(state: SolverState, Xs, config: TisrlConfig) -> SolverState:
    """Grow the penalties, then take multiplier ascent steps with the grown values.

    Mutates and returns ``state``.
    """
    rx, rz, rt = residuals(Xs, state)
    state.mu = min(config.eta * state.mu, config.mu_max)
    state.rho = min(config.eta * state.rho, config.rho_max)
    for i in range(state.v):
        state.Yx[i] = state.Yx[i] + state.mu * rx[i]
        state.Yz[i] = state.Yz[i] + state.mu * rz[i]
    state.W = state.W + state.rho * rt
    return state


def initial_state(dims: Sequence[int], n: int, config: TisrlConfig) -> SolverState:
    """All-zero start, except P_i = I so the orthogonality constraint holds from the outset."""
    v = len(dims)
    zeros = lambda: [np.zeros((n, n)) for _ in range(v)]
    return SolverState(
        Z=zeros(),
        P=[np.eye(n) for _ in range(v)],
        C=zeros(),
        E=[np.zeros((d, n)) for d in dims],
        Yx=[np.zeros((d, n)) for d in dims],
        Yz=zeros(),
        C_tensor=np.zeros((n, v, n)),
        Q=np.zeros((n, v, n)),
        W=np.zeros((n, v, n)),
        mu=config.mu0,
        rho=config.rho0,
    )


def _objective(state: SolverState, lam: float) -> float:
    return tnn(state.Q) + lam * l21_norm(np.vstack(state.E))


def _inf_norm(A) -> float:
    return float(np.abs(A).max(initial=0.0))


def run(
    dataset: MultiViewDataset | Sequence[np.ndarray],
    config: TisrlConfig,
    *,
    threads: Optional[int] = None,
    callback: Optional[Callable[[SolverState, TraceRow], None]] = None,
) -> SolverResult:
    """Run the alternating minimization until every residual is below epsilon.

    Hitting ``config.max_iters`` is reported through ``status``, not raised.
    Per-view updates run on up to ``threads`` workers (see
    :func:`resolve_threads`); the result does not depend on that number.
    """
    Xs = dataset.views if isinstance(dataset, MultiViewDataset) else [np.asarray(X, float) for X in dataset]
    n = Xs[0].shape[1]
    v = len(Xs)
    threads = resolve_threads(threads)
    state = initial_state([X.shape[0] for X in Xs], n, config)
    trace: list[TraceRow] = []
    status = MAX_ITERS_REACHED

    # parallelism lives at the view level; concurrent callers into a multi-threaded
    # OpenBLAS can crash, so BLAS itself stays single-threaded
    with threadpool_limits(limits=1), ThreadPoolExecutor(max_workers=threads) as pool:
        pmap = (lambda f, it: list(pool.map(f, it))) if threads > 1 else (lambda f, it: [f(x) for x in it])
        factors = pmap(_gram_factor, Xs)

        def zp_step(i):
            Z = update_Z(Xs[i], state.E[i], state.Yx[i], state.Yz[i], state.P[i], state.C[i], state.mu, factors[i])
            return Z, update_P(Z, state.Yz[i], state.C[i], state.mu)

        while state.iter < config.max_iters:
            for i, (Z, P) in enumerate(pmap(zp_step, range(v))):
                state.Z[i], state.P[i] = Z, P

            state.E = update_E(Xs, state.Z, state.Yx, state.mu, config.lam).blocks()

            Q_slices = phi_inverse(state.Q)
            W_slices = phi_inverse(state.W)
            state.C = pmap(
                lambda i: update_C(state.Z[i], state.P[i], state.Yz[i], Q_slices[i], W_slices[i], state.mu, state.rho),
                range(v),
            )
            state.C_tensor = construct_phi(state.C)
            state.Q = update_Q(state.C_tensor, state.W, state.rho)

            rx, rz, rt = residuals(Xs, state)
            row = TraceRow(
                iter=state.iter + 1,
                err1=tuple(_inf_norm(r) for r in rx),
                err2=tuple(_inf_norm(r) for r in rz),
                err3=_inf_norm(rt),
                mu=state.mu,
                rho=state.rho,
                objective=_objective(state, config.lam),
            )
            update_multipliers(state, Xs, config)
            state.iter += 1
            trace.append(row)
            if callback is not None:
                callback(state, row)
            if row.max_error() < config.epsilon:
                status = CONVERGED
                break

    return SolverResult(state, trace, status)


def intrinsic_affinity(state_or_C: SolverState | Sequence[np.ndarray]) -> np.ndarray:
    """Average of ``|C_i| + |C_i|^T`` over views: symmetric and nonnegative."""
    Cs = state_or_C.C if isinstance(state_or_C, SolverState) else state_or_C
    total = sum(np.abs(C) + np.abs(C).T for C in Cs)
    return total / len(Cs)


def write_trace(trace: Iterable[TraceRow], path) -> None:
    """Write one CSV row per (iteration, view); shared columns repeat on every view row."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_HEADER)
        for row in trace:
            for i, (e1, e2) in enumerate(zip(row.err1, row.err2)):
                w.writerow([
                    row.iter, i, f"{e1:.6e}", f"{e2:.6e}", f"{row.err3:.6e}",
                    f"{row.mu:.6e}", f"{row.rho:.6e}", f"{row.objective:.6e}",
                ])
