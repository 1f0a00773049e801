"""Dense complex linear algebra used by the state and attack layers.

Matrices are plain ``numpy`` complex128 arrays. Every function here is pure:
inputs are never modified and fresh arrays are returned.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import ConvergenceFailure, DimensionOverflow, NotFinite, NotHermitian, NotPSD

MAX_DIM = 4096
PSD_CLIP = -1e-12
HERMITIAN_RTOL = 1e-9


class SvdResult(NamedTuple):
    left: np.ndarray
    singular_values: np.ndarray
    right_adjoint: np.ndarray


def as_matrix(a, *, max_dim: int = MAX_DIM) -> np.ndarray:
    """Coerce ``a`` to a finite 2-D complex128 array."""
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim == 1:
        m = m.reshape(1, -1)
    if m.ndim != 2 or 0 in m.shape:
        raise ValueError(f"expected a non-empty 2-D matrix, got shape {m.shape}")
    if max(m.shape) > max_dim:
        raise DimensionOverflow(f"matrix side {max(m.shape)} exceeds cap {max_dim}")
    if not np.all(np.isfinite(m)):
        raise NotFinite("matrix has NaN or infinite entries")
    return m


def kron(a, b, *, max_dim: int = MAX_DIM) -> np.ndarray:
    """Kronecker product; entry (i*rb + k, j*cb + l) is a[i, j] * b[k, l]."""
    a = as_matrix(a, max_dim=max_dim)
    b = as_matrix(b, max_dim=max_dim)
    rows, cols = a.shape[0] * b.shape[0], a.shape[1] * b.shape[1]
    if max(rows, cols) > max_dim:
        raise DimensionOverflow(f"kron result {rows}x{cols} exceeds cap {max_dim}")
    return np.kron(a, b)


def svd(a) -> SvdResult:
    """Full singular value decomposition ``a = left @ diag(s) @ right_adjoint``.

    Singular values come back non-increasing; rank-deficient inputs give
    trailing zeros. ``left`` and ``right_adjoint`` are square unitaries.
    """
    a = as_matrix(a)
    try:
        u, s, vh = np.linalg.svd(a, full_matrices=True)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(f"SVD did not converge: {exc}") from exc
    return SvdResult(u, s, vh)


def is_hermitian(h, rtol: float = HERMITIAN_RTOL) -> bool:
    h = np.asarray(h)
    scale = max(1.0, float(np.linalg.norm(h)))
    return float(np.linalg.norm(h - h.conj().T)) <= rtol * scale


def is_unitary(u, atol: float = 1e-9) -> bool:
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    return bool(np.allclose(u.conj().T @ u, np.eye(u.shape[0]), rtol=0, atol=atol))


def herm_eig(h) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and orthonormal eigenvectors (columns)."""
    h = as_matrix(h)
    if h.shape[0] != h.shape[1] or not is_hermitian(h):
        raise NotHermitian("matrix is not Hermitian within tolerance")
    # symmetrise so that rounding asymmetry does not leak into eigh
    h = 0.5 * (h + h.conj().T)
    try:
        w, v = np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(f"eigh did not converge: {exc}") from exc
    return w, v


def psd_sqrt(h) -> np.ndarray:
    """Principal square root of a positive semidefinite Hermitian matrix.

    Eigenvalues in ``[-1e-12, 0)`` are treated as rounding noise and clipped
    to zero, as are positive eigenvalues below ``dim * machine eps * max|w|``;
    anything more negative raises :class:`NotPSD`.
    """
    w, v = herm_eig(h)
    if w[0] < PSD_CLIP:
        raise NotPSD(f"smallest eigenvalue {w[0]:.3e} is below {PSD_CLIP:g}")
    # eigenvalues within rounding of zero are zero; sqrt would amplify 1e-16 to 1e-8
    floor = w.size * np.finfo(float).eps * max(1.0, float(np.max(np.abs(w))))
    root = np.sqrt(np.where(w > floor, w, 0.0))
    return (v * root) @ v.conj().T


def trace_norm(a) -> float:
    """Sum of singular values; equals max over unitaries U of |Tr(U a)|."""
    a = as_matrix(a)
    try:
        s = np.linalg.svd(a, compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(f"SVD did not converge: {exc}") from exc
    return float(np.sum(s))


def haar_unitary(dim: int, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Haar-distributed unitaries from the QR decomposition of Ginibre matrices.

    With ``size`` given, returns a stack of shape ``(size, dim, dim)``.
    """
    shape = (dim, dim) if size is None else (size, dim, dim)
    z = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r, axis1=-2, axis2=-1)
    phases = d / np.abs(d)
    # fix the column phases so the distribution is exactly Haar
    return q * phases[..., None, :]
