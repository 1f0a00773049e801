"""Bit-commitment protocol instances as families of branches over Bob's secret choice.

A protocol is described by its end-of-commitment purified states. Each branch
corresponds to one value of Bob's undisclosed parameter omega and carries the
pair (psi0, psi1) of joint states for the two committed bit values. Bob may
entangle his choice of omega with an ancilla, which yields the pair
``sum_i sqrt(p_i) |psi_b(omega_i)>|lambda_i>``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, NamedTuple, Sequence

import numpy as np

from . import attack
from .attack import BranchDiagnostics, CheatPlan
from .errors import InvalidParam, InvalidSpec, MissingParam, UnknownFamily
from .qstate import (
    StateVector,
    SystemLayout,
    fidelity,
    partial_trace_alice,
    trace_distance,
)

WEIGHT_TOL = 1e-9

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
BELL = np.array([1, 0, 0, 1], dtype=complex) / math.sqrt(2.0)


@dataclass(frozen=True)
class ProtocolBranch:
    omega_label: str
    psi0: StateVector
    psi1: StateVector


@dataclass(frozen=True)
class ProtocolSpec:
    name: str
    layout: SystemLayout
    branches: tuple[ProtocolBranch, ...]
    weights: tuple[float, ...]
    metadata: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "branches", tuple(self.branches))
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        object.__setattr__(self, "metadata", dict(self.metadata))
        if not self.branches:
            raise InvalidSpec("a protocol needs at least one branch")
        if len(self.branches) != len(self.weights):
            raise InvalidSpec(f"{len(self.branches)} branches but {len(self.weights)} weights")
        if self.layout.dim_anc != 1:
            raise InvalidSpec("branch states must not carry an ancilla")
        labels = [br.omega_label for br in self.branches]
        if len(set(labels)) != len(labels):
            raise InvalidSpec(f"duplicate omega labels in {labels}")
        for br in self.branches:
            if br.psi0.layout != self.layout or br.psi1.layout != self.layout:
                raise InvalidSpec(f"branch {br.omega_label!r} does not match the protocol layout")
        if any(not math.isfinite(w) or w <= 0 for w in self.weights):
            raise InvalidSpec(f"weights must be positive, got {list(self.weights)}")
        if abs(math.fsum(self.weights) - 1.0) > WEIGHT_TOL:
            raise InvalidSpec(f"weights sum to {math.fsum(self.weights)!r}, not 1")

    def branch_tuples(self) -> list[tuple]:
        return [(br.omega_label, br.psi0, br.psi1, w) for br, w in zip(self.branches, self.weights)]


class BranchConcealing(NamedTuple):
    omega_label: str
    fidelity: float
    trace_distance: float


@dataclass(frozen=True)
class ConcealingReport:
    per_branch: list[BranchConcealing]
    entangled_fidelity: float
    entangled_trace_distance: float
    epsilon: float

    def to_dict(self) -> dict:
        return {
            "per_branch": [b._asdict() for b in self.per_branch],
            "entangled_fidelity": self.entangled_fidelity,
            "entangled_trace_distance": self.entangled_trace_distance,
            "epsilon": self.epsilon,
        }


class BindingReport(NamedTuple):
    per_branch_plans: list[CheatPlan]
    common: CheatPlan
    diagnostics: list[BranchDiagnostics]
    epsilon_tilde: float
    bound_residual: float


@dataclass(frozen=True)
class SweepPoint:
    n: int
    epsilon: float
    cheat_probability: float
    delta_max: float


def entangle_choices(spec: ProtocolSpec) -> tuple[StateVector, StateVector]:
    """Entangle Bob's choice of omega with an ancilla basis state |lambda_i>."""
    lay = spec.layout
    n = len(spec.branches)
    out_layout = SystemLayout(lay.dim_a, lay.dim_b, n, max_total=lay.max_total)
    out = []
    for slot in ("psi0", "psi1"):
        amps = np.zeros((lay.dim_a, lay.dim_b, n), dtype=complex)
        for i, (br, w) in enumerate(zip(spec.branches, spec.weights)):
            psi = getattr(br, slot)
            amps[:, :, i] = math.sqrt(w) * psi.amplitudes.reshape(lay.dim_a, lay.dim_b)
        # weights sum to 1 only within 1e-9, so renormalise the joint state
        out.append(StateVector(out_layout, amps.reshape(-1), normalize=True))
    return out[0], out[1]


def concealing_report(spec: ProtocolSpec) -> ConcealingReport:
    per_branch = []
    for br in spec.branches:
        r0, r1 = partial_trace_alice(br.psi0), partial_trace_alice(br.psi1)
        per_branch.append(BranchConcealing(br.omega_label, fidelity(r0, r1), trace_distance(r0, r1)))
    Psi0, Psi1 = entangle_choices(spec)
    t0, t1 = partial_trace_alice(Psi0), partial_trace_alice(Psi1)
    f = fidelity(t0, t1)
    return ConcealingReport(per_branch, f, trace_distance(t0, t1), 1.0 - f)


def binding_report(spec: ProtocolSpec) -> BindingReport:
    plans = [attack.optimal_cheat_unitary(br.psi0, br.psi1) for br in spec.branches]
    Psi0, Psi1 = entangle_choices(spec)
    common, diags, eps_tilde = attack.common_cheat_unitary(Psi0, Psi1, spec.branch_tuples())
    residual = attack.delta_bound_check(spec.weights, [d.delta for d in diags], eps_tilde)
    return BindingReport(plans, common, diags, eps_tilde, residual)


# -- built-in families -------------------------------------------------------

def bob_rotation(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]], dtype=complex)


def _require(params: Mapping, key: str):
    if key not in params:
        raise MissingParam(f"missing parameter {key!r}", param=key)
    return params[key]


def _as_float(key: str, value) -> float:
    try:
        x = float(value)
    except (TypeError, ValueError):
        raise InvalidParam(f"parameter {key!r} must be a number, got {value!r}", param=key) from None
    if not math.isfinite(x):
        raise InvalidParam(f"parameter {key!r} must be finite", param=key)
    return x


def _as_float_list(key: str, value) -> list[float]:
    if isinstance(value, str):
        value = [v for v in value.strip("[]").split(",") if v.strip()]
    if not isinstance(value, Sequence) or not value:
        raise InvalidParam(f"parameter {key!r} must be a non-empty list", param=key)
    return [_as_float(key, v) for v in value]


def _perfect_secret_basis(params: Mapping) -> ProtocolSpec:
    angles = _as_float_list("angles", _require(params, "angles"))
    if "weights" in params:
        weights = _as_float_list("weights", params["weights"])
    else:
        weights = [1.0 / len(angles)] * len(angles)
    if len(weights) != len(angles):
        raise InvalidParam("angles and weights differ in length", param="weights")
    layout = SystemLayout(2, 2)
    branches = []
    for k, theta in enumerate(angles, start=1):
        bob = np.kron(np.eye(2), bob_rotation(theta))
        psi0 = bob @ BELL
        psi1 = np.kron(SIGMA_X, np.eye(2)) @ psi0
        branches.append(ProtocolBranch(f"omega{k}", StateVector(layout, psi0, normalize=True),
                                       StateVector(layout, psi1, normalize=True)))
    return _build("perfect_secret_basis", layout, branches, weights,
                  {"family": "perfect_secret_basis", "angles": angles})


def _imperfect_theta(params: Mapping) -> ProtocolSpec:
    theta0 = _as_float("theta0", _require(params, "theta0"))
    n_raw = _as_float("N", _require(params, "N"))
    if n_raw != int(n_raw) or n_raw < 1:
        raise InvalidParam(f"N must be a positive integer, got {params['N']!r}", param="N")
    n = int(n_raw)
    t = theta0 / math.sqrt(n)
    layout = SystemLayout(2, 2)
    psi0 = StateVector.basis(layout, 0, 0)
    psi1 = StateVector(layout, [math.cos(t), 0, 0, math.sin(t)], normalize=True)
    return _build("imperfect_theta", layout, [ProtocolBranch("omega1", psi0, psi1)], [1.0],
                  {"family": "imperfect_theta", "theta0": theta0, "N": n})


def _omega_dependent_counterexample(params: Mapping) -> ProtocolSpec:
    p = _as_float("p", _require(params, "p"))
    if not 0.0 < p < 1.0:
        raise InvalidParam(f"p must lie in (0, 1), got {p!r}", param="p")
    layout = SystemLayout(2, 2)
    b1 = ProtocolBranch("omega1", StateVector.basis(layout, 0, 0), StateVector.basis(layout, 1, 0))
    b2 = ProtocolBranch("omega2", StateVector.basis(layout, 0, 0), StateVector.basis(layout, 0, 0))
    return _build("omega_dependent_counterexample", layout, [b1, b2], [p, 1.0 - p],
                  {"family": "omega_dependent_counterexample", "p": p})


def _build(name, layout, branches, weights, metadata) -> ProtocolSpec:
    try:
        return ProtocolSpec(name, layout, branches, weights, metadata)
    except InvalidSpec as exc:
        raise InvalidParam(str(exc)) from exc


FAMILIES = {
    "perfect_secret_basis": _perfect_secret_basis,
    "imperfect_theta": _imperfect_theta,
    "omega_dependent_counterexample": _omega_dependent_counterexample,
}


def family_instantiate(family: str, params: Mapping | None = None) -> ProtocolSpec:
    try:
        make = FAMILIES[family]
    except KeyError:
        raise UnknownFamily(f"unknown family {family!r}; known: {sorted(FAMILIES)}") from None
    return make(dict(params or {}))


def sweep(family: str, params: Mapping | None, n_values: Sequence[int]) -> list[SweepPoint]:
    """Evaluate concealing and cheating metrics of ``family`` at each N, in ascending N."""
    points = []
    for n in sorted(n_values):
        spec = family_instantiate(family, {**(params or {}), "N": n})
        conceal = concealing_report(spec)
        binding = binding_report(spec)
        delta_max = max(d.delta for d in binding.diagnostics)
        points.append(SweepPoint(int(n), conceal.epsilon, binding.common.success_probability,
                                 delta_max))
    return points
