import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qbcattack.errors import InvalidParam, InvalidSpec, MissingParam, UnknownFamily
from qbcattack.protocol import (
    ProtocolBranch,
    ProtocolSpec,
    binding_report,
    concealing_report,
    entangle_choices,
    family_instantiate,
    sweep,
)
from qbcattack.qstate import StateVector, SystemLayout, partial_trace_alice

from conftest import random_state

L22 = SystemLayout(2, 2)
S00 = StateVector.basis(L22, 0, 0)
S10 = StateVector.basis(L22, 1, 0)


def counterexample(p=0.5):
    return family_instantiate("omega_dependent_counterexample", {"p": p})


class TestSpecValidation:
    def test_weights_must_sum_to_one(self):
        with pytest.raises(InvalidSpec):
            ProtocolSpec("x", L22, [ProtocolBranch("a", S00, S00), ProtocolBranch("b", S00, S00)],
                         [0.5, 0.6])

    def test_duplicate_labels(self):
        with pytest.raises(InvalidSpec):
            ProtocolSpec("x", L22, [ProtocolBranch("a", S00, S00)] * 2, [0.5, 0.5])

    def test_count_mismatch(self):
        with pytest.raises(InvalidSpec):
            ProtocolSpec("x", L22, [ProtocolBranch("a", S00, S00)], [0.5, 0.5])

    def test_layout_mismatch(self, rng):
        with pytest.raises(InvalidSpec):
            ProtocolSpec("x", L22, [ProtocolBranch("a", random_state(rng, 2, 3),
                                                   random_state(rng, 2, 3))], [1.0])


class TestEntangleChoices:
    def test_single_branch(self, rng):
        p0, p1 = random_state(rng, 2, 3), random_state(rng, 2, 3)
        spec = ProtocolSpec("one", SystemLayout(2, 3), [ProtocolBranch("w", p0, p1)], [1.0])
        Psi0, Psi1 = entangle_choices(spec)
        assert Psi0.layout.dim_anc == 1
        np.testing.assert_allclose(Psi0.amplitudes, p0.amplitudes)
        np.testing.assert_allclose(Psi1.amplitudes, p1.amplitudes)

    def test_counterexample_instantiation(self):
        Psi0, Psi1 = entangle_choices(counterexample())
        lay = Psi0.layout
        assert (lay.dim_a, lay.dim_b, lay.dim_anc) == (2, 2, 2)
        r = 1 / math.sqrt(2)
        e0 = np.zeros(8)
        e0[lay.index(0, 0, 0)] = e0[lay.index(0, 0, 1)] = r
        e1 = np.zeros(8)
        e1[lay.index(1, 0, 0)] = e1[lay.index(0, 0, 1)] = r
        np.testing.assert_allclose(Psi0.amplitudes, e0, atol=1e-15)
        np.testing.assert_allclose(Psi1.amplitudes, e1, atol=1e-15)

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 4))
    def test_norm_and_recoverability(self, seed, n):
        rng = np.random.default_rng(seed)
        w = rng.dirichlet(np.ones(n)) + 1e-3
        w /= w.sum()
        branches = [ProtocolBranch(f"w{i}", random_state(rng, 3, 2), random_state(rng, 3, 2))
                    for i in range(n)]
        spec = ProtocolSpec("r", SystemLayout(3, 2), branches, list(w))
        for slot, Psi in zip(("psi0", "psi1"), entangle_choices(spec)):
            assert np.linalg.norm(Psi.amplitudes) == pytest.approx(1.0, abs=1e-12)
            blocks = Psi.amplitudes.reshape(3, 2, n)
            for i, br in enumerate(branches):
                v = blocks[:, :, i].reshape(-1)
                v = v / np.linalg.norm(v)
                assert abs(np.vdot(getattr(br, slot).amplitudes, v)) >= 1 - 1e-10


class TestConcealingReport:
    def test_equal_states(self, rng):
        p = random_state(rng, 2, 2)
        spec = ProtocolSpec("eq", L22, [ProtocolBranch("a", p, p), ProtocolBranch("b", S00, S00)],
                            [0.3, 0.7])
        rep = concealing_report(spec)
        assert all(b.fidelity == pytest.approx(1.0, abs=1e-9) for b in rep.per_branch)
        assert rep.epsilon == pytest.approx(0.0, abs=1e-9)

    def test_counterexample(self):
        rep = concealing_report(counterexample())
        assert [b.fidelity for b in rep.per_branch] == pytest.approx([1.0, 1.0], abs=1e-12)
        # analytic: rho0 is pure |phi> = |0>(|l1>+|l2>)/sqrt2, rho1 = (|0l1><0l1| + |0l2><0l2|)/2,
        # F = sqrt(<phi|rho1|phi>) = sqrt(1/2)
        phi = np.array([1, 1, 0, 0]) / math.sqrt(2)
        Psi0, Psi1 = entangle_choices(counterexample())
        rho1 = partial_trace_alice(Psi1).matrix
        np.testing.assert_allclose(partial_trace_alice(Psi0).matrix, np.outer(phi, phi), atol=1e-15)
        analytic = math.sqrt(np.real(phi @ rho1 @ phi))
        assert analytic == pytest.approx(0.7071067812, abs=1e-10)
        assert rep.entangled_fidelity == pytest.approx(analytic, abs=1e-12)
        assert rep.epsilon == pytest.approx(1 - analytic, abs=1e-12)

    @pytest.mark.parametrize("n", [1, 4, 16])
    def test_imperfect_theta_fidelity(self, n):
        rep = concealing_report(family_instantiate("imperfect_theta", {"theta0": 1.0, "N": n}))
        assert rep.per_branch[0].fidelity == pytest.approx(math.cos(1 / math.sqrt(n)), abs=1e-12)

    @pytest.mark.parametrize("p", [0.05, 0.2, 0.5, 0.8, 0.95])
    def test_counterexample_breaks_concealing(self, p):
        rep = concealing_report(counterexample(p))
        # ||[[1-p, p], [0, 0]]||_1 = sqrt((1-p)^2 + p^2)
        assert rep.entangled_fidelity == pytest.approx(math.hypot(1 - p, p), abs=1e-12)
        assert rep.entangled_fidelity < 1 - min(p, 1 - p) / 4


class TestBindingReport:
    def test_perfect_family(self):
        spec = family_instantiate("perfect_secret_basis", {"angles": [0.1, 1.3, 2.2]})
        rep = binding_report(spec)
        assert rep.common.success_probability >= 1 - 1e-8
        assert all(d.delta <= 1e-8 for d in rep.diagnostics)
        assert rep.bound_residual >= -1e-9

    def test_counterexample(self):
        rep = binding_report(counterexample())
        assert [p.achieved_overlap for p in rep.per_branch_plans] == pytest.approx([1, 1], abs=1e-12)
        assert rep.common.achieved_overlap == pytest.approx(1 / math.sqrt(2), abs=1e-12)
        assert rep.bound_residual >= -1e-9

    def test_single_branch(self):
        rep = binding_report(family_instantiate("imperfect_theta", {"theta0": 1.0, "N": 4}))
        assert rep.common.achieved_overlap == pytest.approx(rep.per_branch_plans[0].achieved_overlap,
                                                            abs=1e-12)
        assert rep.common.achieved_overlap == pytest.approx(0.8775825619, abs=1e-10)


class TestFamilies:
    def test_imperfect_theta(self):
        spec = family_instantiate("imperfect_theta", {"theta0": 1, "N": 4})
        assert len(spec.branches) == 1
        assert concealing_report(spec).per_branch[0].fidelity == pytest.approx(math.cos(0.5))

    def test_perfect_secret_basis(self):
        spec = family_instantiate("perfect_secret_basis", {"angles": [0, 0.7], "weights": [0.5, 0.5]})
        assert concealing_report(spec).epsilon <= 1e-9
        for br in spec.branches:
            np.testing.assert_allclose(partial_trace_alice(br.psi0).matrix, np.eye(2) / 2, atol=1e-15)
            np.testing.assert_allclose(partial_trace_alice(br.psi1).matrix, np.eye(2) / 2, atol=1e-15)

    def test_angles_as_text(self):
        spec = family_instantiate("perfect_secret_basis", {"angles": "0,0.7"})
        assert spec.weights == (0.5, 0.5)

    def test_counterexample_branches(self):
        spec = counterexample(0.25)
        assert spec.weights == (0.25, 0.75)
        b1, b2 = spec.branches
        assert b1.psi1.inner(S10) == 1 and b2.psi1.inner(S00) == 1

    @pytest.mark.parametrize("family, params, exc", [
        ("nope", {}, UnknownFamily),
        ("imperfect_theta", {"theta0": 1}, MissingParam),
        ("imperfect_theta", {"theta0": 1, "N": 0}, InvalidParam),
        ("imperfect_theta", {"theta0": 1, "N": 2.5}, InvalidParam),
        ("imperfect_theta", {"theta0": "x", "N": 2}, InvalidParam),
        ("omega_dependent_counterexample", {"p": 1.0}, InvalidParam),
        ("omega_dependent_counterexample", {}, MissingParam),
        ("perfect_secret_basis", {"angles": [0, 1], "weights": [0.5, 0.6]}, InvalidParam),
        ("perfect_secret_basis", {"angles": [0, 1], "weights": [1.0]}, InvalidParam),
    ])
    def test_errors(self, family, params, exc):
        with pytest.raises(exc):
            family_instantiate(family, params)

    @settings(max_examples=30, deadline=None)
    @given(angles=st.lists(st.floats(-math.pi, math.pi), min_size=1, max_size=4),
           seed=st.integers(0, 2**32 - 1))
    def test_perfect_family_property(self, angles, seed):
        w = np.random.default_rng(seed).dirichlet(np.ones(len(angles))) + 1e-3
        w = list(w / w.sum())
        spec = family_instantiate("perfect_secret_basis", {"angles": angles, "weights": w})
        assert concealing_report(spec).epsilon <= 1e-9
        assert max(d.delta for d in binding_report(spec).diagnostics) <= 1e-8


class TestSweep:
    def test_imperfect_theta(self):
        pts = sweep("imperfect_theta", {"theta0": 1.0}, [16, 1, 64, 4])
        assert [p.n for p in pts] == [1, 4, 16, 64]
        assert [round(p.epsilon, 4) for p in pts] == [0.4597, 0.1224, 0.0311, 0.0078]
        for p in pts:
            assert p.cheat_probability == pytest.approx(math.cos(1 / math.sqrt(p.n)) ** 2, abs=1e-12)
        eps = [p.epsilon for p in pts]
        probs = [p.cheat_probability for p in pts]
        assert all(a > b for a, b in zip(eps, eps[1:]))
        assert all(a < b for a, b in zip(probs, probs[1:]))

    def test_single_point_matches_reports(self):
        (pt,) = sweep("imperfect_theta", {"theta0": 1.0}, [4])
        spec = family_instantiate("imperfect_theta", {"theta0": 1.0, "N": 4})
        assert pt.epsilon == concealing_report(spec).epsilon
        assert pt.cheat_probability == binding_report(spec).common.success_probability
