import numpy as np
import pytest
from scipy.stats import chisquare

from rmnkq.errors import InputError, ResourceError
from rmnkq.landscape import RmnkConfig, generate
from rmnkq.pauli_map import hamiltonian_diagonals
from rmnkq.quantum import (
    AnsatzParams,
    ShotCounts,
    apply_cost_phase,
    apply_mixer,
    basis_state,
    init_plus,
    probabilities,
    run_ansatz,
    sample,
    top_candidates,
)


def reference_ansatz(diagonals, params):
    """Dense-matrix re-implementation: full 2^N x 2^N mixer via Kronecker products."""
    n = diagonals.shape[1].bit_length() - 1
    state = np.full(1 << n, 2 ** (-n / 2), dtype=complex)
    for layer in range(params.layers):
        for k in range(params.n_blocks):
            state = np.exp(-1j * params.gammas[layer, k] * diagonals[k]) * state
            b = params.betas[layer, k]
            rx = np.array([[np.cos(b), -1j * np.sin(b)], [-1j * np.sin(b), np.cos(b)]])
            full = np.array([[1.0]])
            for _ in range(n):
                full = np.kron(rx, full)
            state = full @ state
    return state


class TestInit:
    def test_one_qubit(self):
        assert np.allclose(init_plus(1), [2**-0.5, 2**-0.5])

    def test_three_qubits(self):
        s = init_plus(3)
        assert s.shape == (8,) and np.allclose(s, 1 / (2 * np.sqrt(2)))
        assert np.isclose(np.vdot(s, s).real, 1.0, atol=1e-15)

    @pytest.mark.parametrize("n", [0, 27])
    def test_guard(self, n):
        with pytest.raises(ResourceError):
            init_plus(n)


class TestGates:
    def test_zero_gamma_identity(self, rng):
        s = init_plus(4) * np.exp(1j * rng.random(16))
        assert np.array_equal(apply_cost_phase(s.copy(), rng.random(16), 0.0), s)

    def test_phase_preserves_probabilities(self, rng):
        s = rng.normal(size=16) + 1j * rng.normal(size=16)
        s /= np.linalg.norm(s)
        out = apply_cost_phase(s.copy(), rng.random(16), 1.7)
        assert np.allclose(np.abs(out) ** 2, np.abs(s) ** 2, atol=1e-15)

    def test_constant_diag_global_phase(self, rng):
        s = rng.normal(size=8) + 1j * rng.normal(size=8)
        s /= np.linalg.norm(s)
        out = apply_cost_phase(s.copy(), np.full(8, 0.3), 0.9)
        assert np.allclose(out, np.exp(-1j * 0.9 * 0.3) * s)
        assert abs(abs(np.vdot(s, out)) - 1) < 1e-12

    def test_phase_shape_mismatch(self):
        with pytest.raises(InputError):
            apply_cost_phase(init_plus(2), np.zeros(8), 0.1)

    def test_mixer_zero_identity(self, rng):
        s = rng.normal(size=8) + 0j
        assert np.array_equal(apply_mixer(s.copy(), 0.0), s)

    @pytest.mark.parametrize("beta", [0.3, -1.1, 2.5])
    def test_mixer_on_plus(self, beta):
        n = 5
        out = apply_mixer(init_plus(n), beta)
        assert np.allclose(out, np.exp(-1j * n * beta) * init_plus(n), atol=1e-13)
        assert np.max(np.abs(probabilities(out) - 2.0**-n)) <= 1e-12

    def test_mixer_flips_zero(self):
        out = apply_mixer(basis_state(1, 0), np.pi / 2)
        assert np.allclose(out, [0, -1j], atol=1e-15)

    def test_mixer_targets_each_qubit(self):
        # exp(-i pi/2 X) on every qubit maps |000> to |111> up to phase
        out = apply_mixer(basis_state(3, 0), np.pi / 2)
        assert abs(abs(out[7]) - 1) < 1e-14


class TestAnsatz:
    def test_zero_params_uniform(self, small_landscape):
        d = hamiltonian_diagonals(small_landscape)
        s = run_ansatz(d, AnsatzParams.zeros(2, 2))
        assert np.allclose(s, init_plus(8))

    def test_single_layer_single_objective_reference(self, rng):
        L = generate(RmnkConfig(6, 1, 2, 0.0, 1))
        d = hamiltonian_diagonals(L)
        for _ in range(5):
            p = AnsatzParams(rng.uniform(-2, 2, (1, 1)), rng.uniform(-20, 20, (1, 1)))
            assert np.allclose(probabilities(run_ansatz(d, p)), np.abs(reference_ansatz(d, p)) ** 2, atol=1e-12)

    def test_multi_block_reference(self, rng):
        L = generate(RmnkConfig(5, 3, 1, 0.2, 2))
        d = hamiltonian_diagonals(L)
        p = AnsatzParams(rng.uniform(-2, 2, (2, 3)), rng.uniform(-20, 20, (2, 3)))
        assert np.allclose(run_ansatz(d, p), reference_ansatz(d, p), atol=1e-12)

    def test_block_order_matters(self, rng):
        L = generate(RmnkConfig(5, 2, 1, 0.0, 2))
        d = hamiltonian_diagonals(L)
        p = AnsatzParams(rng.uniform(-2, 2, (1, 2)), rng.uniform(-20, 20, (1, 2)))
        swapped = AnsatzParams(p.betas[:, ::-1], p.gammas[:, ::-1])
        # the same blocks in the opposite order give a different state
        assert not np.allclose(run_ansatz(d, p), run_ansatz(d[::-1], swapped))

    def test_norm_preserved(self, rng):
        L = generate(RmnkConfig(8, 5, 2, 0.0, 3))
        d = hamiltonian_diagonals(L)
        s = run_ansatz(d, AnsatzParams(rng.uniform(-3, 3, (4, 5)), rng.uniform(-30, 30, (4, 5))))
        assert abs(np.linalg.norm(s) - 1) < 1e-9

    def test_unitarity_over_many_blocks(self, rng):
        d = rng.random((1, 64))
        s = init_plus(6)
        for _ in range(100):
            apply_cost_phase(s, d[0], rng.normal())
            apply_mixer(s, rng.normal())
        assert abs(np.linalg.norm(s) - 1) < 1e-9

    def test_gamma_zero_uniform(self, rng):
        d = rng.random((3, 256))
        s = run_ansatz(d, AnsatzParams(rng.uniform(-3, 3, (2, 3)), np.zeros((2, 3))))
        assert np.max(np.abs(probabilities(s) - 1 / 256)) <= 1e-12

    def test_shape_errors(self):
        with pytest.raises(InputError):
            run_ansatz(np.zeros((2, 8)), AnsatzParams.zeros(1, 3))
        with pytest.raises(InputError):
            AnsatzParams(np.zeros((1, 2)), np.zeros((2, 1)))
        with pytest.raises(InputError):
            AnsatzParams.from_vector(np.zeros(5), 1, 2)

    def test_vector_roundtrip(self, rng):
        p = AnsatzParams(rng.normal(size=(2, 3)), rng.normal(size=(2, 3)))
        q = AnsatzParams.from_vector(p.to_vector(), 2, 3)
        assert np.array_equal(p.betas, q.betas) and np.array_equal(p.gammas, q.gammas)


class TestSampling:
    def test_deterministic_state(self):
        counts = sample(basis_state(4, 9), 100, 0)
        assert counts.counts == {9: 100}

    def test_uniform_chi_square(self):
        counts = sample(init_plus(12), 8192, 2024)
        observed = np.zeros(4096)
        for k, v in counts.counts.items():
            observed[k] = v
        assert chisquare(observed).pvalue > 0.001

    def test_same_seed_same_counts(self, rng):
        s = rng.normal(size=64) + 1j * rng.normal(size=64)
        s /= np.linalg.norm(s)
        assert sample(s, 1000, 5).counts == sample(s, 1000, 5).counts
        assert sample(s, 1000, 5).total == 1000

    def test_rejects_zero_shots(self):
        with pytest.raises(InputError):
            sample(init_plus(2), 0, 0)


class TestTopCandidates:
    def test_tie_break(self):
        counts = ShotCounts(2, {0b00: 5, 0b01: 3, 0b10: 3})
        assert top_candidates(counts, 2) == [0b00, 0b01]

    def test_fewer_distinct(self):
        counts = ShotCounts(2, {3: 1, 1: 4})
        assert top_candidates(counts, 10) == [1, 3]

    def test_modal_string(self, rng):
        for trial in range(20):
            # a strongly peaked state: mostly one basis state plus small noise
            target = int(rng.integers(64))
            s = 0.05 * (rng.normal(size=64) + 1j * rng.normal(size=64))
            s[target] = 1.0
            s /= np.linalg.norm(s)
            assert top_candidates(sample(s, 1024, trial), 1) == [int(np.argmax(probabilities(s)))]
