import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from spingas.errors import DuplicateLabel, ShapeError, TooLarge, UnknownLabel
from spingas.tensor import (
    MAX_DENSITY_QUBITS,
    MAX_VECTOR_QUBITS,
    PAULI,
    DensityMatrix,
    DiagonalUnitary,
    QubitRegister,
    StateVector,
    basis_state,
    bell_basis,
    bit_table,
    hadamard_product,
    partial_trace,
    plus_state,
    pure_gate_phases,
    random_density_matrix,
    random_state,
    tensor_product,
)

seeds = st.integers(0, 2**32 - 1)


def reg(*labels):
    return QubitRegister(labels)


class TestRegister:
    def test_labels_unique(self):
        with pytest.raises(DuplicateLabel):
            reg("q0", "q0")

    def test_empty_rejected(self):
        with pytest.raises(ShapeError):
            QubitRegister(())

    def test_dimension(self):
        assert reg("s0", "b0", "b1").dim == 8

    def test_unknown_label(self):
        with pytest.raises(UnknownLabel):
            reg("s0").index("b3")

    def test_msb_convention(self):
        # |q0 q1 q2> = |100> sits at index 4
        v = basis_state(reg("q0", "q1", "q2"), [1, 0, 0])
        assert v.amplitudes[4] == 1
        assert bit_table(3)[4].tolist() == [1, 0, 0]


class TestContainers:
    def test_unnormalized_state_must_be_marked(self):
        with pytest.raises(ShapeError):
            StateVector(reg("q0"), [1.0, 1.0])
        StateVector(reg("q0"), [1.0, 1.0], normalized=False)

    def test_non_hermitian_rejected(self):
        with pytest.raises(ShapeError):
            DensityMatrix(reg("q0"), [[0.5, 1.0], [0.0, 0.5]])

    def test_trace_checked(self):
        with pytest.raises(ShapeError):
            DensityMatrix(reg("q0"), np.eye(2))
        DensityMatrix(reg("q0"), np.eye(2), normalized=False)

    def test_psd_check(self):
        rho = DensityMatrix(reg("q0"), [[1.5, 0], [0, -0.5]])
        with pytest.raises(ShapeError):
            rho.check_psd()

    def test_arrays_read_only(self):
        v = plus_state(reg("q0"))
        with pytest.raises(ValueError):
            v.amplitudes[0] = 0

    def test_vector_cap(self):
        with pytest.raises(TooLarge):
            plus_state(QubitRegister.numbered(MAX_VECTOR_QUBITS + 1))

    def test_density_cap(self):
        r = QubitRegister.numbered(MAX_DENSITY_QUBITS + 1)
        with pytest.raises(TooLarge):
            DensityMatrix(r, np.zeros((1, 1)), normalized=False)


class TestTensorProduct:
    def test_basis_states(self):
        out = tensor_product(basis_state(reg("a"), [0]), basis_state(reg("b"), [1]))
        assert out.register.labels == ("a", "b")
        np.testing.assert_array_equal(out.amplitudes, [0, 1, 0, 0])

    def test_identities(self):
        half = DensityMatrix(reg("a"), np.eye(2) / 2)
        out = tensor_product(half, half.relabel(reg("b")))
        np.testing.assert_allclose(out.entries, np.eye(4) / 4)

    def test_plus_plus(self):
        out = tensor_product(plus_state(reg("a")), plus_state(reg("b")))
        np.testing.assert_allclose(out.amplitudes, np.full(4, 0.5))

    def test_label_collision(self):
        with pytest.raises(DuplicateLabel):
            tensor_product(plus_state(reg("a")), plus_state(reg("a")))


class TestPartialTrace:
    def test_bell_marginal(self):
        phi = StateVector(reg("a", "b"), np.array([1, 0, 0, 1]) / np.sqrt(2))
        np.testing.assert_allclose(partial_trace(phi.density(), {"a"}).entries, np.eye(2) / 2)

    def test_vector_and_matrix_routes_agree(self, rng):
        v = random_state(QubitRegister.numbered(4), rng)
        for keep in ({"q0"}, {"q1", "q3"}, {"q0", "q1", "q2", "q3"}):
            a = partial_trace(v, keep).entries
            b = partial_trace(v.density(), keep).entries
            assert np.max(np.abs(a - b)) < 1e-14

    def test_keeps_relative_order(self, rng):
        rho = random_density_matrix(reg("x", "y", "z"), rng)
        assert partial_trace(rho, {"z", "x"}).register.labels == ("x", "z")

    def test_unknown_label(self, rng):
        rho = random_density_matrix(reg("x", "y"), rng)
        with pytest.raises(UnknownLabel):
            partial_trace(rho, {"w"})

    def test_two_qubit_gate_pi_dephases(self):
        r = reg("s0", "b0")
        u = DiagonalUnitary.from_pure_gates(r, [(("s0", "b0"), np.pi)])
        rho = partial_trace(u.apply(plus_state(r)), {"s0"})
        np.testing.assert_allclose(rho.entries, np.eye(2) / 2, atol=1e-15)

    @given(seeds, st.integers(1, 3), st.integers(1, 3))
    def test_product_round_trip(self, seed, na, nb):
        rng = np.random.default_rng(seed)
        a = random_density_matrix(QubitRegister.numbered(na, "a"), rng)
        b = random_density_matrix(QubitRegister.numbered(nb, "b"), rng)
        out = partial_trace(tensor_product(a, b), set(a.register.labels))
        assert np.max(np.abs(out.entries - a.entries)) < 1e-12
        assert abs(out.trace() - 1) < 1e-12


class TestHadamardProduct:
    def test_all_ones_is_identity(self, rng):
        rho = random_density_matrix(QubitRegister.numbered(2), rng)
        np.testing.assert_array_equal(hadamard_product(rho, np.ones((4, 4))).entries, rho.entries)

    def test_identity_gives_diagonal(self, rng):
        rho = random_density_matrix(QubitRegister.numbered(2), rng)
        out = hadamard_product(rho, np.eye(4)).entries
        np.testing.assert_array_equal(out, np.diag(np.diag(rho.entries)))

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            hadamard_product(np.eye(2), np.eye(4))

    @given(seeds, st.integers(1, 4))
    def test_conjugation_is_hadamard(self, seed, n):
        rng = np.random.default_rng(seed)
        r = QubitRegister.numbered(n)
        u = DiagonalUnitary(r, rng.uniform(0, 2 * np.pi, r.dim))
        rho = random_density_matrix(r, rng)
        lhs = u.matrix() @ rho.entries @ u.matrix().conj().T
        mask = 2**n * u.apply(plus_state(r)).density().entries
        assert np.max(np.abs(lhs - hadamard_product(rho, mask).entries)) < 1e-12


class TestDiagonalUnitary:
    @given(seeds)
    def test_composition_commutes(self, seed):
        rng = np.random.default_rng(seed)
        r = QubitRegister.numbered(3)
        a = DiagonalUnitary(r, rng.uniform(0, 2 * np.pi, 8))
        b = DiagonalUnitary(r, rng.uniform(0, 2 * np.pi, 8))
        np.testing.assert_array_equal(a.compose(b).phases, b.compose(a).phases)

    def test_norm_preserved(self, rng):
        r = QubitRegister.numbered(5)
        u = DiagonalUnitary(r, rng.uniform(0, 2 * np.pi, r.dim))
        v = random_state(r, rng)
        assert abs(np.linalg.norm(u.apply(v).amplitudes) - 1) < 1e-14

    def test_pure_gate_phases(self):
        r = reg("q0", "q1", "q2")
        ph = pure_gate_phases(r, [(("q0", "q2"), 0.7)])
        # only |1?1> picks up the phase
        assert np.flatnonzero(ph).tolist() == [5, 7]

    def test_dagger_inverts(self, rng):
        r = QubitRegister.numbered(2)
        u = DiagonalUnitary(r, rng.uniform(0, 2 * np.pi, 4))
        np.testing.assert_allclose(u.compose(u.dagger()).diagonal, np.ones(4), atol=1e-14)


class TestBellBasis:
    def test_first_vectors(self):
        basis = bell_basis(1)
        np.testing.assert_allclose(basis[0].amplitudes, np.array([1, 0, 0, 1]) / np.sqrt(2))
        np.testing.assert_allclose(basis[3].amplitudes, np.array([1, 0, 0, -1]) / np.sqrt(2))

    @pytest.mark.parametrize("n_pairs", [1, 2])
    def test_orthonormal(self, n_pairs):
        mat = np.stack([v.amplitudes for v in bell_basis(n_pairs)], axis=1)
        np.testing.assert_allclose(mat.conj().T @ mat, np.eye(4**n_pairs), atol=1e-14)

    def test_pauli_order(self):
        # Y = i X Z fixes the index convention 0..3 = I, X, Y, Z
        np.testing.assert_allclose(PAULI[2], 1j * PAULI[1] @ PAULI[3])
