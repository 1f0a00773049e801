"""Pure joint states of Alice, Bob and Bob's ancilla, and Bob's reduced states.

Amplitudes are stored flat in Alice-major order::

    index = a * (dim_b * dim_anc) + b * dim_anc + l

so the amplitude matrix (rows: Alice, columns: Bob and ancilla) is a reshape.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .errors import DimMismatch, DimensionOverflow, NotNormalized, NotUnitary

NORM_TOL = 1e-9
DENSITY_TOL = 1e-9


@dataclass(frozen=True)
class SystemLayout:
    dim_a: int
    dim_b: int
    dim_anc: int = 1
    max_total: int = field(default=linalg.MAX_DIM, compare=False, repr=False)

    def __post_init__(self):
        for name in ("dim_a", "dim_b", "dim_anc"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value < 1:
                raise ValueError(f"{name} must be a positive integer, got {value!r}")
        if self.total > self.max_total:
            raise DimensionOverflow(f"total dimension {self.total} exceeds cap {self.max_total}")

    @property
    def dim_bob(self) -> int:
        """Dimension of everything Bob holds (B and ancilla)."""
        return self.dim_b * self.dim_anc

    @property
    def total(self) -> int:
        return self.dim_a * self.dim_b * self.dim_anc

    def index(self, a: int, b: int, l: int = 0) -> int:
        return a * self.dim_bob + b * self.dim_anc + l


class StateVector:
    """A normalised pure state on a :class:`SystemLayout`.

    Instances are immutable; the amplitude array is a read-only copy.
    """

    __slots__ = ("layout", "amplitudes")

    def __init__(self, layout: SystemLayout, amplitudes, *, normalize: bool = False,
                 tol: float = NORM_TOL):
        amps = np.array(amplitudes, dtype=np.complex128).reshape(-1)
        if amps.size != layout.total:
            raise DimMismatch(f"expected {layout.total} amplitudes, got {amps.size}")
        if not np.all(np.isfinite(amps)):
            raise NotNormalized("amplitudes contain NaN or infinite values")
        norm = float(np.linalg.norm(amps))
        if normalize:
            if norm == 0.0:
                raise NotNormalized("cannot normalise the zero vector")
            amps = amps / norm
        elif abs(norm - 1.0) > tol:
            raise NotNormalized(f"state norm {norm!r} deviates from 1 by more than {tol:g}")
        amps.flags.writeable = False
        object.__setattr__(self, "layout", layout)
        object.__setattr__(self, "amplitudes", amps)

    def __setattr__(self, name, value):
        raise AttributeError("StateVector is immutable")

    def __repr__(self):
        return f"StateVector({self.layout!r}, {self.amplitudes!r})"

    @classmethod
    def basis(cls, layout: SystemLayout, a: int, b: int, l: int = 0) -> "StateVector":
        amps = np.zeros(layout.total, dtype=np.complex128)
        amps[layout.index(a, b, l)] = 1.0
        return cls(layout, amps)

    @classmethod
    def from_matrix(cls, layout: SystemLayout, m, **kw) -> "StateVector":
        return cls(layout, np.asarray(m).reshape(-1), **kw)

    def inner(self, other: "StateVector") -> complex:
        """<self|other>."""
        _same_layout(self, other)
        return complex(np.vdot(self.amplitudes, other.amplitudes))


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    dim: int
    matrix: np.ndarray

    def __post_init__(self):
        m = linalg.as_matrix(self.matrix)
        if m.shape != (self.dim, self.dim):
            raise DimMismatch(f"expected {self.dim}x{self.dim} matrix, got {m.shape}")
        if not linalg.is_hermitian(m, DENSITY_TOL):
            raise ValueError("density matrix is not Hermitian")
        tr = np.trace(m)
        if abs(tr - 1.0) > DENSITY_TOL:
            raise ValueError(f"density matrix trace {tr} is not 1")
        w = np.linalg.eigvalsh(0.5 * (m + m.conj().T))
        if w[0] < -DENSITY_TOL:
            raise ValueError(f"density matrix has eigenvalue {w[0]:.3e}")
        m = m.copy()
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    @classmethod
    def pure(cls, vector) -> "DensityMatrix":
        v = np.asarray(vector, dtype=np.complex128).reshape(-1)
        return cls(v.size, np.outer(v, v.conj()))


def _same_layout(psi: StateVector, phi: StateVector) -> None:
    if psi.layout != phi.layout:
        raise DimMismatch(f"layouts differ: {psi.layout} vs {phi.layout}")


def amplitude_matrix(psi: StateVector) -> np.ndarray:
    """Reshape ``psi`` into M with psi = sum M[a, j] |a>|j>, j running over Bob and ancilla."""
    return psi.amplitudes.reshape(psi.layout.dim_a, psi.layout.dim_bob).copy()


def partial_trace_alice(psi: StateVector) -> DensityMatrix:
    """Bob's reduced state Tr_A |psi><psi| on B (x) ancilla."""
    m = amplitude_matrix(psi)
    rho = m.T @ m.conj()
    return DensityMatrix(psi.layout.dim_bob, rho)


def _check_dims(rho: DensityMatrix, sigma: DensityMatrix) -> None:
    if rho.dim != sigma.dim:
        raise DimMismatch(f"density matrices have dimensions {rho.dim} and {sigma.dim}")


def fidelity(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """Root fidelity ||sqrt(rho) sqrt(sigma)||_1, in [0, 1]."""
    _check_dims(rho, sigma)
    f = linalg.trace_norm(linalg.psd_sqrt(rho.matrix) @ linalg.psd_sqrt(sigma.matrix))
    return float(min(1.0, max(0.0, f)))


def trace_distance(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    _check_dims(rho, sigma)
    d = 0.5 * linalg.trace_norm(rho.matrix - sigma.matrix)
    return float(min(1.0, max(0.0, d)))


def apply_alice_unitary(psi: StateVector, u) -> StateVector:
    """Return (u (x) I) |psi>; Bob's reduced state is left untouched."""
    u = linalg.as_matrix(u)
    if u.shape != (psi.layout.dim_a, psi.layout.dim_a):
        raise DimMismatch(f"unitary has shape {u.shape}, Alice dimension is {psi.layout.dim_a}")
    if not linalg.is_unitary(u):
        raise NotUnitary("operator is not unitary within 1e-9")
    return StateVector.from_matrix(psi.layout, u @ amplitude_matrix(psi), normalize=True)


def schmidt(psi: StateVector) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Schmidt decomposition across Alice | (Bob, ancilla).

    Returns ``(coefficients, alice_basis, bob_basis)`` where column i of each
    basis matrix is the i-th Schmidt vector, so that
    ``psi = sum_i c_i kron(alice_basis[:, i], bob_basis[:, i])``.
    """
    u, s, vh = linalg.svd(amplitude_matrix(psi))
    k = len(s)
    return s.copy(), u[:, :k], vh[:k, :].T


def equal_up_to_phase(u: StateVector, v: StateVector, tol: float = 1e-9) -> bool:
    return abs(u.inner(v)) >= 1.0 - tol
