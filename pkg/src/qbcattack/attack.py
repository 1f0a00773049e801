"""Alice's entanglement attack: closed-form optimal unitaries and diagnostics.

For two states on the same layout with amplitude matrices M0 and M1, the
overlap reachable by a unitary U on Alice's side is

    <psi1| (U (x) I) |psi0> = Tr(U C),     C = M0 @ M1^dagger,

so the best achievable modulus is the trace norm of C, attained by the
unitary polar factor read off the SVD of C.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import linalg
from .errors import (
    DimensionTooLarge,
    InconsistentBranches,
    LayoutMismatch,
    MalformedDistribution,
    NotConcealing,
    NotUnitary,
)
from .qstate import StateVector, amplitude_matrix, fidelity, partial_trace_alice

RANK_TOL = 1e-12
ORACLE_MAX_DIM = 4


@dataclass(frozen=True, eq=False)
class CheatPlan:
    unitary: np.ndarray
    achieved_overlap: float
    success_probability: float
    optimal: bool = True

    @classmethod
    def from_overlap(cls, unitary, overlap: float, optimal: bool = True) -> "CheatPlan":
        overlap = float(min(1.0, max(0.0, overlap)))
        return cls(np.asarray(unitary), overlap, overlap * overlap, optimal)


@dataclass(frozen=True)
class BranchDiagnostics:
    omega_label: str
    delta: float
    epsilon_solo: float


def _check_layouts(psi0: StateVector, psi1: StateVector) -> None:
    if psi0.layout != psi1.layout:
        raise LayoutMismatch(f"states live on different layouts: {psi0.layout} vs {psi1.layout}")


def cross_gram(psi0: StateVector, psi1: StateVector) -> np.ndarray:
    """C = M0 M1^dagger, so that <psi1|(U (x) I)|psi0> = Tr(U C)."""
    _check_layouts(psi0, psi1)
    return amplitude_matrix(psi0) @ amplitude_matrix(psi1).conj().T


def polar_unitary(c) -> np.ndarray:
    """Unitary U maximising |Tr(U c)|, with a deterministic completion.

    On the support of ``c`` the answer is V W^dagger from c = W S V^dagger.
    When ``c`` is rank deficient the remaining freedom is fixed by mapping the
    left null space onto the right null space with the unitary closest to the
    identity, so U is the identity there whenever the two null spaces agree.
    """
    w, s, vh = linalg.svd(c)
    v = vh.conj().T
    scale = max(1.0, float(s[0])) if s.size else 1.0
    r = int(np.count_nonzero(s > RANK_TOL * scale))
    u = v[:, :r] @ w[:, :r].conj().T
    if r < w.shape[0]:
        qw, qv = w[:, r:], v[:, r:]
        a, _, bh = np.linalg.svd(qv.conj().T @ qw)
        u = u + qv @ (a @ bh) @ qw.conj().T
    return u


def optimal_cheat_unitary(psi0: StateVector, psi1: StateVector) -> CheatPlan:
    """Best Alice-side unitary for steering ``psi0`` towards ``psi1``.

    The achieved overlap equals the fidelity of Bob's two reduced states.
    """
    c = cross_gram(psi0, psi1)
    u = polar_unitary(c)
    return CheatPlan.from_overlap(u, abs(np.trace(u @ c)))


def exact_hjw_unitary(psi0: StateVector, psi1: StateVector, tol: float = 1e-9) -> np.ndarray:
    """Unitary relating two purifications of the same reduced state.

    Raises :class:`NotConcealing` when Bob's reduced states differ, i.e. when
    no exact Alice-side unitary can exist.
    """
    _check_layouts(psi0, psi1)
    f = fidelity(partial_trace_alice(psi0), partial_trace_alice(psi1))
    if f < 1.0 - tol:
        raise NotConcealing(f"reduced states are not equal: fidelity {f!r} < 1 - {tol:g}",
                            fidelity=f)
    return optimal_cheat_unitary(psi0, psi1).unitary


def cheat_success_probability(psi0: StateVector, psi1: StateVector, u) -> float:
    """Probability that Bob's projection onto ``psi1`` accepts (u (x) I)|psi0>."""
    _check_layouts(psi0, psi1)
    u = linalg.as_matrix(u)
    if u.shape != (psi0.layout.dim_a,) * 2:
        raise LayoutMismatch(f"unitary shape {u.shape} does not match dim_a={psi0.layout.dim_a}")
    if not linalg.is_unitary(u):
        raise NotUnitary("operator is not unitary within 1e-9")
    amp = np.vdot(amplitude_matrix(psi1), u @ amplitude_matrix(psi0))
    return float(min(1.0, abs(amp) ** 2))


def _branch_overlap(u: np.ndarray, psi0: StateVector, psi1: StateVector) -> float:
    return float(abs(np.trace(u @ cross_gram(psi0, psi1))))


def common_cheat_unitary(Psi0: StateVector, Psi1: StateVector, branches: Sequence[tuple]):
    """Single unitary for the entangled pair and its per-branch deficits.

    ``branches`` holds ``(omega_label, psi0, psi1, weight)`` tuples; ``Psi0``
    and ``Psi1`` must be ``sum_i sqrt(w_i) |psi_b(i)>|lambda_i>``.

    Returns ``(plan, diagnostics, epsilon_tilde)``.
    """
    if not branches:
        raise InconsistentBranches("no branches given")
    weights = np.array([float(br[3]) for br in branches])
    if np.any(weights <= 0) or abs(weights.sum() - 1.0) > 1e-9:
        raise MalformedDistribution(f"branch weights {weights.tolist()} are not a distribution")
    _check_layouts(Psi0, Psi1)
    lay = Psi0.layout
    n = len(branches)
    if lay.dim_anc != n:
        raise InconsistentBranches(f"ancilla dimension {lay.dim_anc} != branch count {n}")
    for Psi, slot in ((Psi0, 1), (Psi1, 2)):
        blocks = Psi.amplitudes.reshape(lay.dim_a, lay.dim_b, n)
        for i, br in enumerate(branches):
            psi = br[slot]
            if (psi.layout.dim_a, psi.layout.dim_b, psi.layout.dim_anc) != (lay.dim_a, lay.dim_b, 1):
                raise InconsistentBranches(f"branch {br[0]!r} layout does not match")
            expected = np.sqrt(weights[i]) * psi.amplitudes.reshape(lay.dim_a, lay.dim_b)
            if np.max(np.abs(blocks[:, :, i] - expected)) > 1e-9:
                raise InconsistentBranches(
                    f"entangled state does not decompose into branch {br[0]!r}")

    plan = optimal_cheat_unitary(Psi0, Psi1)
    eps_tilde = 1.0 - plan.achieved_overlap
    diags = []
    for label, psi0, psi1, _ in branches:
        delta = 1.0 - min(1.0, _branch_overlap(plan.unitary, psi0, psi1))
        solo = 1.0 - min(1.0, linalg.trace_norm(cross_gram(psi0, psi1)))
        diags.append(BranchDiagnostics(str(label), max(0.0, delta), max(0.0, solo)))
    return plan, diags, eps_tilde


def delta_bound_check(p_list, deltas, epsilon_tilde: float) -> float:
    """Residual eps_tilde - sum_i p_i delta_i (non-negative when the bound holds)."""
    p = np.asarray(p_list, dtype=float).reshape(-1)
    d = np.asarray(deltas, dtype=float).reshape(-1)
    if p.size == 0 or p.size != d.size:
        raise MalformedDistribution("weights and deltas must be non-empty and of equal length")
    if np.any(p <= 0) or np.any(p > 1) or abs(p.sum() - 1.0) > 1e-9:
        raise MalformedDistribution(f"{p.tolist()} is not a probability distribution")
    if np.any(d < 0) or np.any(d > 1):
        raise MalformedDistribution("deltas must lie in [0, 1]")
    return float(epsilon_tilde - np.dot(p, d))


def _random_hermitian(rng: np.random.Generator, size: int, dim: int) -> np.ndarray:
    g = rng.standard_normal((size, dim, dim)) + 1j * rng.standard_normal((size, dim, dim))
    h = 0.5 * (g + np.conj(np.swapaxes(g, -1, -2)))
    return h / np.linalg.norm(h, axis=(-2, -1), keepdims=True)


def brute_force_unitary_oracle(psi0: StateVector, psi1: StateVector, samples: int = 10_000,
                               refine_steps: int = 200, seed: int = 0,
                               batch: int = 32) -> CheatPlan:
    """Search for a good Alice unitary without using the SVD closed form.

    Draws ``samples`` Haar unitaries, keeps the best, then hill-climbs for
    ``refine_steps`` rounds: each round tries ``batch`` random unitary
    perturbations exp(i t H) and moves to the best one if it improves the
    overlap, growing t on success and halving it otherwise. The overlap is
    evaluated by contracting the full joint states.
    """
    _check_layouts(psi0, psi1)
    dim = psi0.layout.dim_a
    if dim > ORACLE_MAX_DIM:
        raise DimensionTooLarge(f"oracle supports dim_a <= {ORACLE_MAX_DIM}, got {dim}")
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    m0 = amplitude_matrix(psi0)
    m1c = amplitude_matrix(psi1).conj()

    def overlaps(us: np.ndarray) -> np.ndarray:
        return np.abs(np.einsum("nij,jk,ik->n", us, m0, m1c))

    best_u, best = np.eye(dim, dtype=complex), -1.0
    chunk = 4096
    for start in range(0, samples, chunk):
        us = linalg.haar_unitary(dim, rng, size=min(chunk, samples - start))
        vals = overlaps(us)
        k = int(np.argmax(vals))
        if vals[k] > best:
            best, best_u = float(vals[k]), us[k]

    step = 0.3
    for _ in range(refine_steps):
        w, v = np.linalg.eigh(_random_hermitian(rng, batch, dim))
        kicks = (v * np.exp(1j * step * w)[:, None, :]) @ np.conj(np.swapaxes(v, -1, -2))
        cand = kicks @ best_u
        vals = overlaps(cand)
        k = int(np.argmax(vals))
        if vals[k] > best:
            best, best_u = float(vals[k]), cand[k]
            step = min(1.0, step * 1.5)
        else:
            step *= 0.5
            if step < 1e-9:
                step = 1e-3
    return CheatPlan.from_overlap(best_u, best, optimal=False)
