import itertools
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qphase import statevector as sv
from conftest import rand_vec


def brute_marginal(amps, n, qubits):
    out = np.zeros(1 << len(qubits))
    for idx, bits in enumerate(itertools.product([0, 1], repeat=n)):
        # bits[0] is the most significant qubit (n-1)
        bit_of = {n - 1 - i: b for i, b in enumerate(bits)}
        assert idx == sum(b << q for q, b in bit_of.items())
        k = sum(bit_of[q] << i for i, q in enumerate(qubits))
        out[k] += abs(amps[idx]) ** 2
    return out


class TestConstruction:
    def test_basis_states(self):
        np.testing.assert_array_equal(sv.basis_state(1, 0).amplitudes, [1, 0])
        np.testing.assert_array_equal(sv.basis_state(2, 3).amplitudes, [0, 0, 0, 1])

    def test_basis_out_of_range(self):
        with pytest.raises(sv.StateError):
            sv.basis_state(3, 8)

    def test_uniform_from_ones(self):
        s = sv.from_amplitudes(np.full(8, 5.0))
        assert s.n_qubits == 3
        np.testing.assert_allclose(s.amplitudes, 1 / np.sqrt(8), atol=1e-15)

    def test_linear_state(self):
        s = sv.from_amplitudes(np.arange(8))
        np.testing.assert_allclose(s.amplitudes, np.arange(8) / np.sqrt(140), atol=1e-15)

    @pytest.mark.parametrize("bad", [[0, 0], [1, 2, 3]])
    def test_rejects(self, bad):
        with pytest.raises(sv.StateError):
            sv.from_amplitudes(bad)

    def test_unnormalized_constructor_rejected(self):
        with pytest.raises(sv.StateError):
            sv.StateVector(1, [1, 1])

    def test_immutable(self):
        s = sv.basis_state(1, 0)
        with pytest.raises(ValueError):
            s.amplitudes[0] = 2

    def test_amplitude_file_roundtrip(self, tmp_path, rng):
        v = rand_vec(rng, 8)
        path = tmp_path / "amps.json"
        sv.save_amplitudes(path, v)
        np.testing.assert_allclose(sv.load_amplitudes(path), v, atol=1e-15)

    def test_amplitude_file_normalizes(self, tmp_path):
        path = tmp_path / "amps.json"
        path.write_text(json.dumps([[1, 0], [0, 1]]))
        np.testing.assert_allclose(sv.load_amplitudes(path), [1 / np.sqrt(2), 1j / np.sqrt(2)])

    @pytest.mark.parametrize("content", ['[[1, 0], [0, 1], [1, 1]]', '[1, 2]'])
    def test_amplitude_file_rejects(self, tmp_path, content):
        path = tmp_path / "amps.json"
        path.write_text(content)
        with pytest.raises(sv.StateError):
            sv.load_amplitudes(path)


class TestLayout:
    def test_composite_index(self):
        lay = sv.RegisterLayout(3)
        assert lay.composite_index(5, 2) == 5 * 8 + 2
        assert lay.split_index(42) == (5, 2)
        assert set(lay.primary_qubits) | set(lay.ancilla_qubits) == set(range(6))
        assert not set(lay.primary_qubits) & set(lay.ancilla_qubits)

    def test_product_state_matches_kron(self, rng):
        lay = sv.RegisterLayout(2)
        p, a = rand_vec(rng, 4), rand_vec(rng, 4)
        m = lay.as_matrix(lay.product_state(p, a))
        np.testing.assert_allclose(m, np.outer(p, a), atol=1e-15)


class TestGates:
    def test_cnot0_flips_on_zero_control(self):
        # qubit 1 is y (control), qubit 0 is x (target): |y=0>|x=0> -> |0>|1>
        g = sv.CNOT0(control=1, target=0)
        assert sv.apply_gate(sv.basis_state(2, 0b00), g).amplitudes[0b01] == 1
        assert sv.apply_gate(sv.basis_state(2, 0b10), g).amplitudes[0b10] == 1

    def test_mcphase_pi(self):
        out = sv.apply_gate(sv.basis_state(2, 3), sv.MultiControlledPhase((0, 1), np.pi))
        assert abs(out.amplitudes[3] + 1) < 1e-15

    def test_mcphase_only_on_all_ones(self, rng):
        s = sv.StateVector(3, rand_vec(rng, 8))
        out = sv.apply_gate(s, sv.MultiControlledPhase((0, 2), 0.7))
        for i in range(8):
            factor = np.exp(0.7j) if (i & 0b101) == 0b101 else 1
            assert abs(out.amplitudes[i] - factor * s.amplitudes[i]) < 1e-15

    def test_single_qubit_matches_kron(self, rng):
        h = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
        s = sv.StateVector(3, rand_vec(rng, 8))
        for t in range(3):
            ops = [np.eye(2)] * 3
            ops[2 - t] = h  # kron order is most significant first
            dense = np.kron(np.kron(ops[0], ops[1]), ops[2])
            out = sv.apply_gate(s, sv.SingleQubitGate(h, t))
            np.testing.assert_allclose(out.amplitudes, dense @ s.amplitudes, atol=1e-14)

    def test_invalid_gates(self):
        with pytest.raises(sv.StateError):
            sv.SingleQubitGate(np.array([[1, 1], [0, 1]]), 0)
        with pytest.raises(sv.StateError):
            sv.CNOT0(1, 1)
        with pytest.raises(sv.StateError):
            sv.apply_gate(sv.basis_state(2, 0), sv.CNOT0(0, 5))

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.floats(-8, 8))
    def test_norm_preserved(self, seed, delta):
        rng = np.random.default_rng(seed)
        s = sv.StateVector(3, rand_vec(rng, 8))
        for g in (sv.CNOT0(0, 2), sv.MultiControlledPhase((1, 2), delta),
                  sv.SingleQubitGate(np.array([[np.cos(delta), -np.sin(delta)],
                                               [np.sin(delta), np.cos(delta)]]), 1)):
            assert abs(sv.apply_gate(s, g).norm() - 1) <= 1e-12


class TestMarginals:
    def test_uniform(self):
        s = sv.from_amplitudes(np.ones(4))
        np.testing.assert_allclose(sv.marginal_probabilities(s, [0]), [0.5, 0.5])

    def test_deterministic(self):
        np.testing.assert_allclose(sv.marginal_probabilities(sv.basis_state(2, 2), [1]), [0, 1])

    def test_brute_force(self, rng):
        amps = rand_vec(rng, 8)
        s = sv.StateVector(3, amps)
        for qs in ([0], [2], [1, 0], [0, 2], [2, 1, 0]):
            np.testing.assert_allclose(sv.marginal_probabilities(s, qs),
                                       brute_marginal(amps, 3, qs), atol=1e-15)

    def test_sum_to_one(self, rng):
        for _ in range(100):
            n = int(rng.integers(1, 5))
            s = sv.StateVector(n, rand_vec(rng, 1 << n))
            for k in range(1, n + 1):
                for qs in itertools.combinations(range(n), k):
                    assert abs(sv.marginal_probabilities(s, qs).sum() - 1) <= 1e-12

    @pytest.mark.parametrize("qs", [[], [3], [0, 0]])
    def test_invalid(self, qs):
        with pytest.raises(sv.StateError):
            sv.marginal_probabilities(sv.basis_state(3, 0), qs)


class TestMeasurement:
    def test_product_state_basis_ancilla(self):
        lay = sv.RegisterLayout(2)
        s = lay.product_state(sv.from_amplitudes([1, 2, 3, 4]), sv.basis_state(2, 2))
        for seed in range(5):
            mu, post, p = sv.measure_subregister(s, lay.ancilla_qubits, np.random.default_rng(seed))
            assert mu == 2 and p == pytest.approx(1.0, abs=1e-15)
            np.testing.assert_allclose(post.amplitudes, s.amplitudes, atol=1e-15)

    def test_binomial_frequencies(self):
        # marginal on qubits {0,1} is [0.25, 0.75, 0, 0]
        amps = np.zeros(8, dtype=complex)
        amps[0b000], amps[0b001], amps[0b101] = 0.5, np.sqrt(0.5), 0.5
        s = sv.StateVector(3, amps)
        np.testing.assert_allclose(sv.marginal_probabilities(s, [0, 1]), [0.25, 0.75, 0, 0])
        g = np.random.default_rng(99)
        outcomes = [sv.measure_subregister(s, [0, 1], g)[0] for _ in range(1000)]
        counts = np.bincount(outcomes, minlength=4)
        sigma = np.sqrt(1000 * 0.25 * 0.75)
        assert abs(counts[0] - 250) <= 4 * sigma
        assert abs(counts[1] - 750) <= 4 * sigma
        assert counts[2] == counts[3] == 0

    def test_collapse_renormalized(self, rng):
        s = sv.StateVector(3, rand_vec(rng, 8))
        mu, post, p = sv.measure_subregister(s, [1], np.random.default_rng(0))
        keep = ((np.arange(8) >> 1) & 1) == mu
        expected = np.where(keep, s.amplitudes, 0) / np.sqrt(p)
        np.testing.assert_allclose(post.amplitudes, expected, atol=1e-14)
        assert abs(post.norm() - 1) <= 1e-12

    def test_seed_determinism(self, rng):
        s = sv.StateVector(3, rand_vec(rng, 8))
        runs = []
        for _ in range(2):
            g = np.random.default_rng(5)
            runs.append([sv.measure_subregister(s, [0, 2], g)[0] for _ in range(100)])
        assert runs[0] == runs[1]

    def test_zero_branch_projection(self):
        with pytest.raises(sv.StateError):
            sv.project(sv.basis_state(2, 0), [0], 1)


class TestReducedDensity:
    def test_product_state(self, rng):
        lay = sv.RegisterLayout(2)
        p, a = rand_vec(rng, 4), rand_vec(rng, 4)
        rho = sv.reduced_density_matrix(lay.product_state(p, a), lay.ancilla_qubits)
        np.testing.assert_allclose(rho.entries, np.outer(a, a.conj()), atol=1e-14)

    def test_bell_pair(self):
        s = sv.from_amplitudes([1, 0, 0, 1])
        np.testing.assert_allclose(sv.reduced_density_matrix(s, [0]).entries, np.eye(2) / 2, atol=1e-15)

    def test_against_explicit_partial_trace(self, rng):
        amps = rand_vec(rng, 16)
        s = sv.StateVector(4, amps)
        # keep qubits (1, 3): reshape as [q3, q2, q1, q0]
        t = amps.reshape(2, 2, 2, 2)
        red = np.zeros((4, 4), dtype=complex)
        for q3, q1, r3, r1 in itertools.product([0, 1], repeat=4):
            red[q1 | q3 << 1, r1 | r3 << 1] = sum(
                t[q3, q2, q1, q0] * np.conj(t[r3, q2, r1, q0]) for q2 in (0, 1) for q0 in (0, 1))
        np.testing.assert_allclose(sv.reduced_density_matrix(s, [1, 3]).entries, red, atol=1e-14)

    def test_spectrum(self, rng):
        for _ in range(30):
            n = int(rng.integers(2, 5))
            s = sv.StateVector(n, rand_vec(rng, 1 << n))
            rho = sv.reduced_density_matrix(s, [0])
            ev = rho.eigenvalues()
            assert ev.min() >= -1e-10 and ev.max() <= 1 + 1e-10
            assert abs(rho.trace() - 1) <= 1e-12
            np.testing.assert_allclose(rho.entries, rho.entries.conj().T, atol=1e-12)

    @pytest.mark.parametrize("keep", [[], [0, 1], [4]])
    def test_invalid(self, keep):
        with pytest.raises(sv.StateError):
            sv.reduced_density_matrix(sv.basis_state(2, 0), keep)


class TestFidelity:
    def test_cases(self, rng):
        v = rand_vec(rng, 8)
        assert sv.fidelity_up_to_global_phase(v, v) == pytest.approx(1, abs=1e-15)
        assert sv.fidelity_up_to_global_phase(v, np.exp(0.9j) * v) == pytest.approx(1, abs=1e-15)
        assert sv.fidelity_up_to_global_phase(sv.basis_state(2, 0), sv.basis_state(2, 1)) == 0

    def test_dimension_mismatch(self):
        with pytest.raises(sv.StateError):
            sv.fidelity_up_to_global_phase(np.ones(2), np.ones(4))


class TestQFT:
    def test_zero_to_uniform(self):
        out = sv.qft(sv.basis_state(3, 0))
        np.testing.assert_allclose(out.amplitudes, 1 / np.sqrt(8), atol=1e-15)

    @pytest.mark.parametrize("k", range(8))
    def test_basis_columns(self, k):
        x = np.arange(8)
        out = sv.qft(sv.basis_state(3, k))
        np.testing.assert_allclose(out.amplitudes, np.exp(2j * np.pi * k * x / 8) / np.sqrt(8), atol=1e-15)

    def test_roundtrip(self, rng):
        s = sv.StateVector(4, rand_vec(rng, 16))
        back = sv.qft(sv.qft(s, [1, 2, 3]), [1, 2, 3], inverse=True)
        np.testing.assert_allclose(back.amplitudes, s.amplitudes, atol=1e-12)

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_dense_dft(self, rng, n):
        N = 1 << n
        j = np.arange(N)
        F = np.exp(2j * np.pi * np.outer(j, j) / N) / np.sqrt(N)
        s = sv.StateVector(n, rand_vec(rng, N))
        assert np.max(np.abs(sv.qft(s).amplitudes - F @ s.amplitudes)) <= 1e-12
        assert np.max(np.abs(sv.qft(s, inverse=True).amplitudes - F.conj().T @ s.amplitudes)) <= 1e-12

    def test_register_axis(self, rng):
        # QFT on the high register of a 2+2 layout is F (x) I
        lay = sv.RegisterLayout(2)
        s = sv.StateVector(4, rand_vec(rng, 16))
        F = sv.dft_matrix(4)
        out = sv.qft(s, lay.primary_qubits)
        np.testing.assert_allclose(out.amplitudes, np.kron(F, np.eye(4)) @ s.amplitudes, atol=1e-14)
        assert abs(out.norm() - 1) <= 1e-12
