"""Third-order tensor algebra under the t-product.

Tensors are plain ``numpy`` arrays of shape ``(n1, n2, n3)`` where the last
index selects the frontal slice ``A[:, :, k]``.  Frequency-domain tensors are
complex arrays of the same shape holding the DFT of every mode-3 tube.

Everything that decomposes slices in the Fourier domain only touches the first
``n3 // 2 + 1`` frequencies; the remaining ones are the complex conjugates of
those and are mirrored rather than recomputed.
"""

from __future__ import annotations

from typing import NamedTuple, Sequence

import numpy as np
import scipy.linalg
from scipy.linalg import block_diag

__all__ = [
    "TensorShapeError",
    "SymmetryError",
    "TSvdFactors",
    "as_tensor",
    "frontal_slice",
    "unfold",
    "fold",
    "bdiag",
    "bcirc",
    "fft_mode3",
    "ifft_mode3",
    "identity_tensor",
    "tensor_transpose",
    "t_product",
    "t_svd",
    "tnn",
    "tnn_prox",
    "construct_phi",
    "phi_inverse",
]

SYMMETRY_RTOL = 1e-10


class TensorShapeError(ValueError):
    """Raised when tensor or matrix dimensions are not conformable."""


class SymmetryError(ValueError):
    """Raised when a spectrum that should come from a real tensor is not conjugate symmetric."""


class TSvdFactors(NamedTuple):
    U: np.ndarray
    S: np.ndarray
    V: np.ndarray


def as_tensor(A) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim != 3 or min(A.shape) < 1:
        raise TensorShapeError(f"expected a non-empty third-order tensor, got shape {A.shape}")
    return A


def frontal_slice(A: np.ndarray, k: int) -> np.ndarray:
    """Return the k-th frontal slice (1-based, matching the usual notation)."""
    n3 = A.shape[2]
    if not 1 <= k <= n3:
        raise IndexError(f"slice index {k} outside 1..{n3}")
    return A[:, :, k - 1]


def unfold(A) -> np.ndarray:
    """Stack the frontal slices top to bottom into an ``(n1*n3, n2)`` matrix."""
    A = as_tensor(A)
    n1, n2, n3 = A.shape
    return A.transpose(2, 0, 1).reshape(n3 * n1, n2)


def fold(M, dims: Sequence[int]) -> np.ndarray:
    n1, n2, n3 = (int(d) for d in dims)
    M = np.asarray(M)
    if M.shape != (n1 * n3, n2):
        raise TensorShapeError(
            f"cannot fold a {M.shape} matrix into {n1}x{n2}x{n3}: need {(n1 * n3, n2)}"
        )
    return M.reshape(n3, n1, n2).transpose(1, 2, 0).copy()


def bdiag(A) -> np.ndarray:
    A = as_tensor(A)
    return block_diag(*(A[:, :, k] for k in range(A.shape[2])))


def bcirc(A) -> np.ndarray:
    """Block-circulant matrix whose block (r, c) is slice ``(r - c) mod n3``."""
    A = as_tensor(A)
    n1, n2, n3 = A.shape
    out = np.empty((n1 * n3, n2 * n3), dtype=A.dtype)
    for r in range(n3):
        for c in range(n3):
            out[r * n1:(r + 1) * n1, c * n2:(c + 1) * n2] = A[:, :, (r - c) % n3]
    return out


def fft_mode3(A) -> np.ndarray:
    return np.fft.fft(as_tensor(A), axis=2)


def _symmetry_defect(Af: np.ndarray) -> float:
    n3 = Af.shape[2]
    mirror = np.conj(Af[:, :, (-np.arange(n3)) % n3])
    scale = max(np.abs(Af).max(initial=0.0), 1.0)
    return float(np.abs(Af - mirror).max(initial=0.0) / scale)


def ifft_mode3(Af, *, return_imag: bool = False):
    """Inverse of :func:`fft_mode3`.

    The spectrum must be conjugate symmetric along mode 3 (it came from a real
    tensor); otherwise :class:`SymmetryError` is raised.  The imaginary residue
    of the inverse transform is discarded, and returned as a second value when
    ``return_imag`` is set.
    """
    Af = np.asarray(Af)
    if Af.ndim != 3:
        raise TensorShapeError(f"expected a third-order spectrum, got shape {Af.shape}")
    defect = _symmetry_defect(Af)
    if defect > SYMMETRY_RTOL:
        raise SymmetryError(f"spectrum violates conjugate symmetry (relative defect {defect:.3e})")
    A = np.fft.ifft(Af, axis=2)
    if return_imag:
        return A.real.copy(), float(np.abs(A.imag).max(initial=0.0))
    return A.real.copy()


def svd(M, full_matrices: bool = True, compute_uv: bool = True):
    """``numpy.linalg.svd``, retrying with LAPACK ``gesvd`` when ``gesdd`` fails to converge."""
    try:
        return np.linalg.svd(M, full_matrices=full_matrices, compute_uv=compute_uv)
    except np.linalg.LinAlgError:
        return scipy.linalg.svd(
            M, full_matrices=full_matrices, compute_uv=compute_uv, lapack_driver="gesvd"
        )


def _self_conjugate(k: int, n3: int) -> bool:
    return k == 0 or 2 * k == n3


def _mirror(half: np.ndarray, n3: int) -> np.ndarray:
    """Rebuild a full conjugate-symmetric spectrum from its first n3//2+1 slices."""
    h = half.shape[2]
    full = np.empty(half.shape[:2] + (n3,), dtype=complex)
    full[:, :, :h] = half
    for k in range(h, n3):
        full[:, :, k] = np.conj(half[:, :, n3 - k])
    return full


def identity_tensor(n: int, n3: int) -> np.ndarray:
    I = np.zeros((n, n, n3))
    I[:, :, 0] = np.eye(n)
    return I


def tensor_transpose(A) -> np.ndarray:
    """Transpose every frontal slice and reverse the order of slices 2..n3."""
    A = as_tensor(A)
    n3 = A.shape[2]
    return A.transpose(1, 0, 2)[:, :, (-np.arange(n3)) % n3].copy()


def t_product(A, B) -> np.ndarray:
    """t-product ``A * B``, computed as per-frequency matrix products."""
    A, B = as_tensor(A), as_tensor(B)
    n1, n2, n3 = A.shape
    if B.shape[0] != n2 or B.shape[2] != n3:
        raise TensorShapeError(f"t-product of {A.shape} and {B.shape} is not defined")
    Af = np.fft.rfft(A, axis=2)
    Bf = np.fft.rfft(B, axis=2)
    Cf = np.einsum("ijk,jlk->ilk", Af, Bf)
    return np.fft.irfft(Cf, n=n3, axis=2)


def _slice_svd(M: np.ndarray, k: int, n3: int, full_matrices: bool):
    # self-conjugate frequencies hold real matrices; a real SVD keeps the mirrored spectrum exact
    if _self_conjugate(k, n3):
        return svd(M.real, full_matrices=full_matrices)
    return svd(M, full_matrices=full_matrices)


def t_svd(A) -> TSvdFactors:
    """Full t-SVD ``A = U * S * V^T`` with orthogonal U, V and f-diagonal S."""
    A = as_tensor(A)
    n1, n2, n3 = A.shape
    Af = np.fft.fft(A, axis=2)
    h = n3 // 2 + 1
    Uh = np.empty((n1, n1, h), dtype=complex)
    Sh = np.zeros((n1, n2, h), dtype=complex)
    Vh = np.empty((n2, n2, h), dtype=complex)
    r = min(n1, n2)
    for k in range(h):
        u, s, vh = _slice_svd(Af[:, :, k], k, n3, full_matrices=True)
        Uh[:, :, k] = u
        Sh[np.arange(r), np.arange(r), k] = s
        Vh[:, :, k] = vh.conj().T
    U = ifft_mode3(_mirror(Uh, n3))
    S = ifft_mode3(_mirror(Sh, n3))
    V = ifft_mode3(_mirror(Vh, n3))
    return TSvdFactors(U, S, V)


def _frequency_weights(n3: int) -> np.ndarray:
    h = n3 // 2 + 1
    w = np.full(h, 2.0)
    w[0] = 1.0
    if n3 % 2 == 0:
        w[-1] = 1.0
    return w


def tnn(A) -> float:
    """Tensor nuclear norm: sum of the singular values of every Fourier-domain slice."""
    A = as_tensor(A)
    n3 = A.shape[2]
    Af = np.fft.rfft(A, axis=2)
    total = 0.0
    for k, w in enumerate(_frequency_weights(n3)):
        M = Af[:, :, k].real if _self_conjugate(k, n3) else Af[:, :, k]
        total += w * svd(M, compute_uv=False).sum()
    return float(total)


def tnn_prox(M, tau: float, *, return_imag: bool = False):
    """Proximal map of the tensor nuclear norm.

    Solves ``min_Q ||Q||_tnn + 1/(2 tau) ||Q - M||_F^2``.  Because the Fourier
    transform scales the Frobenius norm by ``n3``, every frequency slice gets
    singular value thresholding at ``n3 * tau``.
    """
    if not tau > 0:
        raise ValueError(f"tau must be positive, got {tau}")
    M = as_tensor(M)
    n1, n2, n3 = M.shape
    theta = n3 * tau
    Mf = np.fft.fft(M, axis=2)
    h = n3 // 2 + 1
    Qh = np.zeros((n1, n2, h), dtype=complex)
    for k in range(h):
        u, s, vh = _slice_svd(Mf[:, :, k], k, n3, full_matrices=False)
        s = np.maximum(s - theta, 0.0)
        keep = s > 0
        if keep.any():
            Qh[:, :, k] = (u[:, keep] * s[keep]) @ vh[keep]
    return ifft_mode3(_mirror(Qh, n3), return_imag=return_imag)


def construct_phi(C_list: Sequence[np.ndarray]) -> np.ndarray:
    """Stack v square n x n matrices into the rotated n x v x n tensor.

    ``R[a, i, b] == C_list[i][a, b]``: stacking the views as frontal slices
    of an n x n x v tensor and rotating the view axis into second place.
    """
    mats = [np.asarray(C, dtype=float) for C in C_list]
    if not mats:
        raise TensorShapeError("need at least one matrix")
    n = mats[0].shape[0]
    for i, C in enumerate(mats):
        if C.shape != (n, n):
            raise TensorShapeError(f"matrix {i} has shape {C.shape}, expected {(n, n)}")
    return np.stack(mats, axis=1)


def phi_inverse(R) -> list[np.ndarray]:
    R = as_tensor(R)
    n, v, n3 = R.shape
    if n3 != n:
        raise TensorShapeError(f"expected an n x v x n tensor, got {R.shape}")
    return [R[:, i, :].copy() for i in range(v)]
