"""Entanglement-attack analysis for quantum bit commitment with secret distributions."""

__version__ = "0.1.0"

from .attack import (  # noqa: E402
    BranchDiagnostics,
    CheatPlan,
    brute_force_unitary_oracle,
    cheat_success_probability,
    common_cheat_unitary,
    cross_gram,
    delta_bound_check,
    exact_hjw_unitary,
    optimal_cheat_unitary,
)
from .protocol import (  # noqa: E402
    ConcealingReport,
    ProtocolBranch,
    ProtocolSpec,
    SweepPoint,
    binding_report,
    concealing_report,
    entangle_choices,
    family_instantiate,
    sweep,
)
from .qstate import (  # noqa: E402
    DensityMatrix,
    StateVector,
    SystemLayout,
    amplitude_matrix,
    apply_alice_unitary,
    fidelity,
    partial_trace_alice,
    schmidt,
    trace_distance,
)
