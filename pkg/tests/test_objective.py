import numpy as np
import pytest

from photongate import _kernels
from photongate.circuit import (
    BASIS_4CH,
    BlockParams,
    CircuitSpec,
    DIM,
    pack_params,
    total_unitary,
)
from photongate.fockspace import index_of, occupation_of
from photongate.objective import (
    LOGIC_INDICES,
    TargetGate,
    avg_gate_fidelity,
    cost,
    cost_gradient,
    cost_value_and_grad,
    _cost_value_and_grad_numpy,
    gate_report,
    leakage,
    logic_submatrix,
    phase_marginalized_cost,
    target_gate,
    two_photon_indices,
)

from conftest import random_spec


def embed(gate_4x4: np.ndarray) -> np.ndarray:
    """81x81 unitary acting as the given gate on the logic block, identity elsewhere."""
    u = np.eye(DIM, dtype=complex)
    u[np.ix_(LOGIC_INDICES, LOGIC_INDICES)] = gate_4x4
    return u


class TestTargets:
    def test_cnot_matrix(self):
        t = target_gate("cnot")
        expected = np.eye(4, dtype=complex)
        expected[[2, 3]] = expected[[3, 2]]
        np.testing.assert_allclose(t.matrix, expected)

    def test_ms_matrix(self):
        t = target_gate("ms")
        np.testing.assert_allclose(np.abs(t.matrix[0, 0]), 1 / np.sqrt(2))
        np.testing.assert_allclose(t.matrix[0, 3], -1j / np.sqrt(2))
        # RXX(pi/2) is unitary
        np.testing.assert_allclose(t.matrix @ t.matrix.conj().T, np.eye(4), atol=1e-15)

    def test_unknown_gate(self):
        with pytest.raises(ValueError):
            target_gate("toffoli")


class TestLogicSubmatrix:
    def test_identity(self):
        np.testing.assert_allclose(logic_submatrix(np.eye(DIM)), np.eye(4))

    def test_entries_are_matrix_elements(self, rng):
        u = rng.normal(size=(DIM, DIM)) + 1j * rng.normal(size=(DIM, DIM))
        sub = logic_submatrix(u)
        for a, i in enumerate(LOGIC_INDICES):
            for b, j in enumerate(LOGIC_INDICES):
                assert sub[a, b] == u[i, j]

    def test_leaky_submatrix_not_unitary(self):
        # a single hopping sector with Jt = pi/4 interferes two photons out
        # of the computational subspace
        block = BlockParams(0.0, 0.0, np.pi / 4, 0.0, 0.0)
        spec = CircuitSpec(
            blocks=(block,), u=0.0, layer_order=("inter",)
        )
        sub = logic_submatrix(total_unitary(spec))
        assert np.max(np.abs(sub.conj().T @ sub - np.eye(4))) > 1e-3


class TestCost:
    def test_exact_embedding_zero(self):
        t = target_gate("cnot")
        assert cost(embed(t.matrix), t) == 0.0

    def test_identity_vs_cnot(self):
        assert cost(np.eye(DIM, dtype=complex), target_gate("cnot")) == pytest.approx(4.0)

    def test_identity_vs_ms(self):
        expected = 8.0 - 4.0 * np.sqrt(2.0)
        assert cost(np.eye(DIM, dtype=complex), target_gate("ms")) == pytest.approx(expected)

    def test_invariant_outside_logic_block(self, rng):
        t = target_gate("cnot")
        u = embed(t.matrix)
        v = u.copy()
        others = [i for i in range(DIM) if i not in LOGIC_INDICES]
        v[np.ix_(others, others)] = rng.normal(size=(77, 77))
        assert cost(v, t) == cost(u, t)
        assert avg_gate_fidelity(v, t) == avg_gate_fidelity(u, t)


class TestFidelity:
    def test_exact_embedding_one(self):
        t = target_gate("ms")
        assert avg_gate_fidelity(embed(t.matrix), t) == pytest.approx(1.0)

    def test_identity_vs_cnot(self):
        assert avg_gate_fidelity(np.eye(DIM, dtype=complex), target_gate("cnot")) == pytest.approx(0.5)

    def test_zero_cost_implies_unit_fidelity(self, rng):
        # random exact embeddings: C = 0 forces fidelity 1
        for _ in range(5):
            z = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
            q, _ = np.linalg.qr(z)
            t = TargetGate("random", q)
            u = embed(q)
            assert cost(u, t) == pytest.approx(0.0, abs=1e-24)
            assert avg_gate_fidelity(u, t) == pytest.approx(1.0)

    def test_global_phase_witness(self):
        # unit fidelity does NOT imply zero cost: a global phase on the
        # target leaves the fidelity at 1 while the cost is strictly positive
        t = target_gate("cnot")
        u = embed(np.exp(1j * np.pi / 3) * t.matrix)
        assert avg_gate_fidelity(u, t) == pytest.approx(1.0)
        assert cost(u, t) > 1.0
        assert phase_marginalized_cost(u, t) == pytest.approx(0.0, abs=1e-24)

    def test_bounded(self, rng):
        t = target_gate("cnot")
        for _ in range(5):
            f = avg_gate_fidelity(total_unitary(random_spec(rng)), t)
            assert 0.0 <= f <= 1.0


class TestLeakage:
    def test_exact_embedding_zero(self):
        assert leakage(embed(target_gate("cnot").matrix)) == pytest.approx(0.0)

    def test_two_photon_interference_leaks(self):
        block = BlockParams(0.0, 0.0, np.pi / 4, 0.0, 0.0)
        spec = CircuitSpec(blocks=(block,), u=0.0, layer_order=("inter",))
        assert leakage(total_unitary(spec)) > 1e-3

    def test_nonnegative(self, rng):
        assert leakage(total_unitary(random_spec(rng))) >= 0.0


class TestGradient:
    def test_zero_at_exact_minimum(self, rng):
        # use the circuit's own logic block as target: cost is exactly 0 there
        spec = random_spec(rng, blocks=2)
        t = TargetGate("self", logic_submatrix(total_unitary(spec)))
        v = pack_params(spec)
        c, g = cost_value_and_grad(v, spec, t)
        assert c == pytest.approx(0.0, abs=1e-20)
        np.testing.assert_allclose(g, 0.0, atol=1e-10)

    def test_finite_difference_agreement(self, rng):
        spec = random_spec(rng, blocks=3, u=0.5)
        t = target_gate("cnot")
        step = 1e-6
        for _ in range(5):
            v = rng.uniform(0.05, 0.95, 15)
            g = cost_gradient(v, spec, t)
            for k in range(len(v)):
                vp, vm = v.copy(), v.copy()
                vp[k] += step
                vm[k] -= step
                fd = (cost(total_unitary(unpack(vp, spec)), t)
                      - cost(total_unitary(unpack(vm, spec)), t)) / (2 * step)
                if abs(g[k]) > 1e-10:
                    assert abs(g[k] - fd) / abs(g[k]) <= 1e-6
                else:
                    assert abs(g[k] - fd) <= 1e-8

    def test_length_mismatch(self, rng):
        spec = random_spec(rng, blocks=3)
        with pytest.raises(ValueError):
            cost_gradient(np.zeros(7), spec, target_gate("cnot"))

    def test_reversal_symmetry(self, rng):
        # the MS target commutes with the channel-reversal logic permutation,
        # so the gradient maps under the same parameter relabeling
        t = target_gate("ms")
        spec = random_spec(rng, blocks=2)
        swapped = CircuitSpec(
            blocks=tuple(
                BlockParams(b.j_paral_lower, b.j_paral_upper, b.j_inter, b.j_up, b.j_down)
                for b in spec.blocks
            ),
            u=spec.u,
            layer_order=tuple(
                {"down": "up", "up": "down"}.get(tag, tag) for tag in spec.layer_order
            ),
        )
        c1, g1 = cost_value_and_grad(pack_params(spec), spec, t)
        c2, g2 = cost_value_and_grad(pack_params(swapped), swapped, t)
        assert c1 == pytest.approx(c2, rel=1e-12)
        relabel = np.concatenate(
            [[5 * b + 1, 5 * b + 0, 5 * b + 2, 5 * b + 4, 5 * b + 3] for b in range(2)]
        )
        np.testing.assert_allclose(g1, g2[relabel], atol=1e-12)


def unpack(v, spec):
    from photongate.circuit import unpack_params

    return unpack_params(v, spec)


@pytest.mark.skipif(
    _kernels.cost_grad_core is None, reason="compiled kernels disabled"
)
class TestKernelAgreement:
    def test_value_and_grad_match_numpy(self, rng):
        spec = random_spec(rng, blocks=4)
        t = target_gate("cnot")
        for _ in range(3):
            v = rng.uniform(0, 1, 20)
            c1, g1 = cost_value_and_grad(v, spec, t)
            c2, g2 = _cost_value_and_grad_numpy(v, spec, t)
            assert c1 == pytest.approx(c2, rel=1e-13, abs=1e-15)
            np.testing.assert_allclose(g1, g2, atol=1e-12)


class TestGateReport:
    def test_fields_consistent(self, rng):
        spec = random_spec(rng)
        t = target_gate("cnot")
        u = total_unitary(spec)
        rep = gate_report(u, t)
        assert rep.cost == cost(u, t)
        assert rep.fidelity == avg_gate_fidelity(u, t)
        assert rep.leakage == leakage(u)
        np.testing.assert_allclose(rep.logic_submatrix, logic_submatrix(u))


class TestTwoPhotonIndices:
    def test_ten_states(self):
        idx = two_photon_indices()
        assert len(idx) == 10
        for i in idx:
            assert sum(occupation_of(i, BASIS_4CH)) == 2

    def test_contains_computational_states(self):
        idx = set(two_photon_indices().tolist())
        assert set(LOGIC_INDICES.tolist()) <= idx

    def test_canonical_order(self):
        idx = two_photon_indices()
        assert list(idx) == sorted(idx)
        assert idx[0] == index_of((0, 0, 0, 2), BASIS_4CH)
