import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from spingas.errors import FitError, ShapeError, WrongArity
from spingas.maps import DephasingMap, hadamard_form, map_oracle
from spingas.metrics import (
    concurrence,
    coherence_factor,
    coherence_time_ratio,
    dfs_check,
    e_indep_vs_e_dep,
    e_indep_vs_e_dep_sqrt_variant,
    eof_from_concurrence,
    eof_two_qubit,
    fig1_scan,
    fig2_point,
    fig2_scan,
    ghz_log_negativity_oracle,
    log_negativity,
    markov_decay,
    max_concurrence_scan,
    maximally_entangled,
    maximize_concurrence,
    nonmarkov_decay,
    werner_state,
)
from spingas.pattern import (
    InteractionPattern,
    PurePhaseGate,
    random_pattern,
    repeated_collisions_pattern,
    shared_core_pattern,
    two_system_pattern,
)
from spingas.tensor import (
    BELL_STATES,
    DensityMatrix,
    QubitRegister,
    bell_state,
    random_density_matrix,
    random_state,
    tensor_product,
)

seeds = st.integers(0, 2**32 - 1)
PAIR = QubitRegister(("s0", "s1"))


def oracle_factor(p):
    """|rho_01| multiplier read off the dense oracle applied to |+><+|."""
    plus = np.full((2, 2), 0.5)
    return 2 * abs(map_oracle(p, plus).entries[0, 1])


def binary_entropy(x):
    return -x * math.log2(x) - (1 - x) * math.log2(1 - x)


class TestCoherenceFactor:
    def test_identity(self):
        assert coherence_factor(InteractionPattern(1, 1, ())) == pytest.approx(1.0)

    def test_two_qubit_gate_pi(self):
        p = repeated_collisions_pattern(0, [1], [np.pi])
        assert coherence_factor(p) == pytest.approx(0.0, abs=1e-15)

    def test_three_qubit_gate_pi(self):
        p = repeated_collisions_pattern(0, [2], [np.pi])
        assert coherence_factor(hadamard_form(p)) == pytest.approx(0.5)
        assert oracle_factor(p) == pytest.approx(0.5)

    def test_wrong_arity(self):
        with pytest.raises(WrongArity):
            coherence_factor(two_system_pattern("independent", 1.0, 1.0))


class TestDecay:
    def test_examples(self):
        assert markov_decay(1, 3, np.pi / 2) == pytest.approx(np.cos(np.pi / 4) ** 3)
        assert markov_decay(2, 1, np.pi) == pytest.approx(0.5)
        assert nonmarkov_decay(1, 2, np.pi) == pytest.approx(1.0)
        assert nonmarkov_decay(2, 2, np.pi) == pytest.approx(1.0)

    @given(st.integers(0, 6), st.floats(0, 2 * np.pi))
    def test_one_bath_qubit(self, k, phi):
        assert markov_decay(1, k, phi) == pytest.approx(abs(np.cos(phi / 2)) ** k, abs=1e-12)
        assert nonmarkov_decay(1, k, phi) == pytest.approx(abs(np.cos(k * phi / 2)), abs=1e-12)

    @pytest.mark.parametrize("phi", [0.3, 1.1, 2.0, 4.4])
    def test_markov_vs_oracle_seven_qubits(self, phi):
        p = repeated_collisions_pattern(0, [3, 3], [phi, phi])
        assert markov_decay(3, 2, phi) == pytest.approx(oracle_factor(p), abs=1e-10)

    @pytest.mark.parametrize("phi", [0.3, 1.1, 2.0, 4.4])
    def test_nonmarkov_vs_oracle_five_qubit_gates(self, phi):
        p = repeated_collisions_pattern(4, [4, 4], [phi, phi])
        assert nonmarkov_decay(4, 2, phi) == pytest.approx(oracle_factor(p), abs=1e-10)

    @given(st.integers(1, 8), st.floats(1e-4, 1.0))
    def test_small_phase_gaussian(self, k, x):
        phi = math.sqrt(0.1 * x / k)
        assert abs(markov_decay(1, k, phi) - math.exp(-k * phi**2 / 8)) <= 5e-3

    def test_rejects_bad_arguments(self):
        with pytest.raises(ShapeError):
            markov_decay(0, 1, 1.0)
        with pytest.raises(ShapeError):
            nonmarkov_decay(1, -1, 1.0)


class TestCoherenceTimes:
    @pytest.mark.parametrize("n1, expected", [(2, 4 / 3), (3, 16 / 7), (1, 1.0)])
    def test_ratios(self, n1, expected):
        assert coherence_time_ratio(n1, 1) == pytest.approx(expected, rel=0.02)

    def test_fit_error(self):
        with pytest.raises(FitError):
            coherence_time_ratio(2, 1, phi_max=3.0, max_residual=1e-6)


class TestFig1:
    def test_checkpoints(self):
        assert fig1_scan(4, [np.pi]).samples[0][1] == pytest.approx(1.0, abs=1e-12)
        assert fig1_scan(0, [np.pi]).samples[0][1] == pytest.approx(0.765625, abs=1e-12)

    @pytest.mark.parametrize("m", [0, 1, 3, 4])
    def test_vs_oracle(self, m):
        grid = np.linspace(0, 2 * np.pi, 7)
        scan = fig1_scan(m, grid)
        for phi, value in scan.samples:
            p = repeated_collisions_pattern(m, [4, 4], [phi, phi])
            assert value == pytest.approx(oracle_factor(p), abs=1e-10)

    @given(st.sampled_from([0, 1, 3, 4]), st.floats(0, 2 * np.pi))
    def test_range_and_periodicity(self, m, phi):
        (_, a), (_, b) = fig1_scan(m, [phi, phi + 2 * np.pi]).samples
        assert 0 <= a <= 1 + 1e-12
        assert a == pytest.approx(b, abs=1e-12)


class TestEof:
    def test_bell_and_mixed(self):
        assert eof_two_qubit(bell_state("phip").density()) == pytest.approx(1.0)
        assert eof_two_qubit(np.eye(4) / 4) == pytest.approx(0.0)

    def test_werner_half(self):
        rho = werner_state(0.5)
        # independent route: eigenvalues of R = rho (YxY) rho* (YxY)
        y = np.array([[0, -1j], [1j, 0]])
        yy = np.kron(y, y)
        mu = np.sort(np.sqrt(np.abs(np.linalg.eigvals(rho.entries @ yy @ rho.entries.conj() @ yy))))
        c = max(0.0, mu[3] - mu[2] - mu[1] - mu[0])
        assert c == pytest.approx(0.25)
        expected = binary_entropy((1 + math.sqrt(1 - c**2)) / 2)
        assert expected == pytest.approx(0.11761887377091781, abs=1e-15)
        assert eof_two_qubit(rho) == pytest.approx(expected, abs=1e-12)

    def test_shape(self):
        with pytest.raises(ShapeError):
            eof_two_qubit(np.eye(2) / 2)

    @given(seeds)
    def test_pure_state_concurrence(self, seed):
        v = random_state(PAIR, np.random.default_rng(seed)).amplitudes
        assert concurrence(np.outer(v, v.conj())) == pytest.approx(
            2 * abs(v[0] * v[3] - v[1] * v[2]), abs=1e-7)

    def test_eof_endpoints(self):
        np.testing.assert_allclose(eof_from_concurrence([0.0, 1.0]), [0.0, 1.0])

    @given(seeds)
    def test_separable_maps_keep_products_separable(self, seed):
        rng = np.random.default_rng(seed)
        p = random_pattern(rng, 2, int(rng.integers(0, 6)), 4, local_gates=True)
        a = random_density_matrix(QubitRegister(("s0",)), rng)
        b = random_density_matrix(QubitRegister(("s1",)), rng)
        out = DephasingMap(p).apply(tensor_product(a, b))
        assert eof_two_qubit(out) == pytest.approx(0.0, abs=1e-7)


class TestFig2:
    @pytest.mark.parametrize("phi", [0.4, 1.5, np.pi, 5.0])
    def test_overlap_edge_fixed_points(self, phi):
        # equal phases fix Psi-, opposite phases fix Phi+
        for phis, name in (((phi, phi), "psim"), ((phi, 2 * np.pi - phi), "phip")):
            p = two_system_pattern("overlap_edge", *phis)
            rho = bell_state(name).density()
            assert np.max(np.abs(map_oracle(p, rho).entries - rho.entries)) < 1e-12
            assert eof_from_concurrence(fig2_point("overlap_edge", *phis, starts=4).value) == \
                pytest.approx(1.0, abs=1e-6)

    def test_optimizer_matches_reduced_search(self):
        for coupling in ("independent", "overlap_qubit", "overlap_edge"):
            mask = DephasingMap(two_system_pattern(coupling, 2.0, 0.9)).hadamard.mask()
            best = maximize_concurrence(mask, np.random.default_rng(3), starts=8)
            assert best.converged
            assert best.value == pytest.approx(max_concurrence_scan(mask), abs=1e-6)

    @given(seeds)
    def test_reduced_search_bounds_random_inputs(self, seed):
        rng = np.random.default_rng(seed)
        phis = rng.uniform(0, 2 * np.pi, 2)
        coupling = ["independent", "overlap_qubit", "overlap_edge"][seed % 3]
        mask = DephasingMap(two_system_pattern(coupling, *phis)).hadamard.mask()
        params = rng.uniform(0, 2 * np.pi, (64, 6))
        from spingas.metrics import _output_concurrence

        assert np.max(_output_concurrence(mask, params)) <= max_concurrence_scan(mask) + 1e-6

    def test_overlap_qubit_slice_minimum(self):
        grid = np.linspace(0, 2 * np.pi, 9)
        scan = fig2_scan("overlap_qubit", [(np.pi, b) for b in grid], starts=6)
        k = int(np.argmin(scan.values))
        mask = DephasingMap(two_system_pattern("overlap_qubit", np.pi, grid[k])).hadamard.mask()
        brute = float(eof_from_concurrence(max_concurrence_scan(mask)))
        assert scan.values[k] == pytest.approx(brute, abs=1e-4)

    def test_family_is_maximally_entangled(self, rng):
        for psi in maximally_entangled(rng.uniform(0, 2 * np.pi, (5, 6))):
            rho = DensityMatrix(PAIR, np.outer(psi, psi.conj()))
            assert eof_two_qubit(rho) == pytest.approx(1.0, abs=1e-9)

    def test_scan_deterministic(self):
        grid = [(0.5, 2.0), (3.0, 1.0)]
        a = fig2_scan("independent", grid, seed=7, starts=4)
        b = fig2_scan("independent", grid, seed=7, starts=4)
        assert a == b
        assert all(0 <= v <= 1 for v in a.values)


class TestLogNegativity:
    def test_bell(self):
        assert log_negativity(bell_state("phip").density(), {"s0"}) == pytest.approx(1.0)

    def test_product(self, rng):
        a = random_density_matrix(QubitRegister(("s0",)), rng)
        b = random_density_matrix(QubitRegister(("s1",)), rng)
        assert log_negativity(tensor_product(a, b), {"s0"}) == pytest.approx(0.0, abs=1e-12)

    def test_bad_cut(self):
        with pytest.raises(ShapeError):
            log_negativity(bell_state("phip").density(), {"s0", "s1"})

    @given(seeds)
    def test_local_unitary_invariance(self, seed):
        rng = np.random.default_rng(seed)
        reg = QubitRegister.numbered(3, "s")
        rho = random_density_matrix(reg, rng, rank=2)

        def haar(d):
            q, r = np.linalg.qr(rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)))
            return q * (np.diag(r) / abs(np.diag(r)))

        u = np.kron(haar(2), haar(4))
        moved = DensityMatrix(reg, u @ rho.entries @ u.conj().T)
        assert log_negativity(moved, {"s0"}) == pytest.approx(log_negativity(rho, {"s0"}), abs=1e-10)


class TestGhz:
    def test_no_decoherence(self):
        assert e_indep_vs_e_dep(3, 2, 0.5, 0.0) == pytest.approx((1.0, 1.0))

    @pytest.mark.parametrize("ns", [2, 3, 4])
    def test_inequality(self, ns):
        e_ind, e_dep = e_indep_vs_e_dep(ns, 2, 0.5, np.pi / ns)
        assert e_ind > e_dep

    @pytest.mark.parametrize("ns, phi", [(2, np.pi / 2), (3, np.pi / 3), (2, 1.0)])
    @pytest.mark.parametrize("p", [0.5, 0.3])
    def test_closed_forms_vs_oracle(self, ns, phi, p):
        e_ind, e_dep = e_indep_vs_e_dep(ns, 2, p, phi)
        assert e_ind == pytest.approx(ghz_log_negativity_oracle(ns, 2, p, phi, False), abs=1e-9)
        assert e_dep == pytest.approx(ghz_log_negativity_oracle(ns, 2, p, phi, True), abs=1e-9)

    def test_square_root_variant_departs_from_oracle(self):
        got = e_indep_vs_e_dep_sqrt_variant(2, 2, 0.5, np.pi / 2)
        want = (ghz_log_negativity_oracle(2, 2, 0.5, np.pi / 2, False),
                ghz_log_negativity_oracle(2, 2, 0.5, np.pi / 2, True))
        assert abs(got[0] - want[0]) > 1e-3
        assert got[0] > got[1]


class TestDecoherenceFree:
    @pytest.fixture
    def pattern(self):
        return shared_core_pattern(2, [2, 2], [1.3, 1.3])

    def test_family(self, pattern, rng):
        a, b, c, d = rng.dirichlet(np.ones(4))
        psip = np.outer(BELL_STATES["psip"], BELL_STATES["psip"])
        psim = np.outer(BELL_STATES["psim"], BELL_STATES["psim"])
        rho = a * np.diag([1, 0, 0, 0]) + b * np.diag([0, 0, 0, 1]) + c * psip + d * psim
        assert dfs_check(pattern, DensityMatrix(PAIR, rho)) < 1e-12

    def test_werner(self, pattern):
        for p in (0.0, 0.3, 1.0):
            assert dfs_check(pattern, werner_state(p)) < 1e-12

    def test_plus_plus_moves(self):
        pat = shared_core_pattern(2, [2, 2], [np.pi / 2, np.pi / 2])
        plus = np.full((4, 4), 0.25)
        assert dfs_check(pat, DensityMatrix(PAIR, plus)) > 1e-3

    def test_complete_dephasing_condition(self, rng):
        # a pattern whose rho_Sigma is 1/2 kills every off-diagonal entry
        p = InteractionPattern(1, 1, (PurePhaseGate(("s0", "b0"), np.pi),))
        rho = random_density_matrix(p.system_register, rng)
        out = DephasingMap(p).apply(rho).entries
        np.testing.assert_allclose(out, np.diag(np.diag(rho.entries)), atol=1e-15)
