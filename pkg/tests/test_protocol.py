from fractions import Fraction

import numpy as np
import pytest

from qphase import protocol as pr
from qphase import statevector as sv
from qphase.initializer import make_initializer
from conftest import aligned_gap, rand_vec


def dense_cycle(psi, phi, delta, completion):
    """Joint pre-measurement state from explicit 4**n matrices; primary is the left factor."""
    N = len(psi)
    U = make_initializer(phi, completion).matrix
    diag = np.ones(N * N, dtype=complex)
    diag[np.arange(N) * N + np.arange(N)] = np.exp(1j * delta)
    M = np.kron(np.eye(N), U.conj().T) @ np.diag(diag) @ np.kron(np.eye(N), U)
    e0 = np.zeros(N)
    e0[0] = 1
    return (M @ np.kron(psi, e0)).reshape(N, N)  # [x, mu]


def closed_form_demo(delta):
    return 1 - 533 / 1400 * np.sin(delta / 2) ** 2


class TestRunCycle:
    def test_zero_delta(self, rng):
        psi, phi = rand_vec(rng, 8), rand_vec(rng, 8)
        out = pr.run_cycle(psi, phi, 0.0, rng=np.random.default_rng(0))
        assert out.mu == 0 and out.success and out.probability == pytest.approx(1, abs=1e-12)
        assert aligned_gap(out.post_state, psi) <= 1e-12

    @pytest.mark.parametrize("k", [0, 5])
    def test_basis_software_state(self, rng, k):
        psi = rand_vec(rng, 8)
        phi = np.zeros(8)
        phi[k] = 1
        g = np.random.default_rng(1)
        for delta in (0.3, 2.5, -6.0):
            out = pr.run_cycle(psi, phi, delta, rng=g)
            assert out.mu == 0 and out.probability == pytest.approx(1, abs=1e-12)
            expected = psi.copy()
            expected[k] *= np.exp(1j * delta)
            assert aligned_gap(out.post_state, expected) <= 1e-12

    @pytest.mark.parametrize("delta", [0.05, 2.0])
    def test_shot_statistics(self, demo_states, delta):
        psi, phi = demo_states
        p0 = pr.exact_outcome_distribution(psi, phi, delta).success
        g = np.random.default_rng(11)
        succ = sum(pr.run_cycle(psi, phi, delta, rng=g).success for _ in range(1000))
        sigma = np.sqrt(1000 * p0 * (1 - p0))
        assert abs(succ - 1000 * p0) <= 4 * sigma + 1

    def test_circuit_route_agrees(self, rng):
        psi, phi = rand_vec(rng, 4), rand_vec(rng, 4)
        a = pr.run_cycle(psi, phi, 1.1, postselect=True, use_circuit=True)
        b = pr.run_cycle(psi, phi, 1.1, postselect=True)
        assert abs(a.probability - b.probability) <= 1e-12
        assert aligned_gap(a.post_state, b.post_state) <= 1e-12

    def test_requires_rng(self, rng):
        with pytest.raises(ValueError):
            pr.run_cycle(rand_vec(rng, 2), rand_vec(rng, 2), 0.1)

    def test_dimension_mismatch(self, rng):
        with pytest.raises(sv.StateError):
            pr.run_cycle(rand_vec(rng, 4), rand_vec(rng, 8), 0.1, rng=rng)


class TestOutcomeLaw:
    def test_demo_closed_form(self, demo_states):
        psi, phi = demo_states
        for d in np.linspace(-8, 8, 65):
            assert abs(pr.exact_success_probability(psi, phi, d) - closed_form_demo(d)) <= 1e-12
            assert abs(pr.exact_outcome_distribution(psi, phi, d).success - closed_form_demo(d)) <= 1e-12

    def test_demo_coefficient_arithmetic(self, demo_states):
        x = range(8)
        s2, s4 = sum(v**2 for v in x), sum(v**4 for v in x)
        assert (s2, s4) == (140, 4676)
        assert Fraction(1, 280) * (s2 - Fraction(s4, 140)) == Fraction(533, 1400)
        psi, phi = demo_states
        assert pr.exact_success_probability(psi, phi, np.pi) == pytest.approx(1 - 533 / 1400, abs=1e-12)

    def test_zero_delta(self, rng):
        assert pr.exact_success_probability(rand_vec(rng, 4), rand_vec(rng, 4), 0.0) == 1.0

    def test_sums_to_one(self, rng):
        for _ in range(50):
            N = 1 << int(rng.integers(1, 4))
            d = pr.exact_outcome_distribution(rand_vec(rng, N), rand_vec(rng, N), rng.uniform(-8, 8), "gram_schmidt")
            assert abs(d.probabilities.sum() - 1) <= 1e-12 and d.probabilities.min() >= -1e-14

    def test_failure_probability_formula(self, rng):
        psi, phi = rand_vec(rng, 8), rand_vec(rng, 8)
        d = 2.2
        u = make_initializer(phi, "householder")
        probs = pr.exact_outcome_distribution(psi, phi, d, u).probabilities
        for mu in range(1, 8):
            expected = 4 * np.sin(d / 2) ** 2 * np.sum(np.abs(psi * u.column(mu) * phi) ** 2)
            assert abs(probs[mu] - expected) <= 1e-12

    @pytest.mark.parametrize("completion", ["householder", "gram_schmidt"])
    def test_dense_oracle(self, rng, completion):
        for _ in range(30):
            N = 1 << int(rng.integers(1, 4))
            psi, phi, d = rand_vec(rng, N), rand_vec(rng, N), rng.uniform(-8, 8)
            gamma = dense_cycle(psi, phi, d, completion)
            probs = np.sum(np.abs(gamma) ** 2, axis=0)
            dist = pr.exact_outcome_distribution(psi, phi, d, completion).probabilities
            assert np.max(np.abs(probs - dist)) <= 1e-12
            assert aligned_gap(gamma[:, 0] / np.linalg.norm(gamma[:, 0]),
                               pr.exact_postselected_state(psi, phi, d)) <= 1e-10
            for mu in range(1, N):
                if probs[mu] > 1e-10:
                    col = gamma[:, mu] / np.linalg.norm(gamma[:, mu])
                    assert aligned_gap(col, pr.exact_failure_state(psi, phi, d, mu, completion)) <= 1e-10

    def test_lower_bound(self, rng):
        for _ in range(1000):
            N = 1 << int(rng.integers(1, 4))
            d = rng.uniform(-8, 8)
            assert pr.exact_success_probability(rand_vec(rng, N), rand_vec(rng, N), d) >= np.cos(d / 2) ** 2 - 1e-12


class TestClosedFormStates:
    def test_postselected_zero_delta(self, rng):
        psi = rand_vec(rng, 8)
        assert aligned_gap(pr.exact_postselected_state(psi, rand_vec(rng, 8), 0.0), psi) <= 1e-15

    def test_postselected_basis(self, rng):
        psi = rand_vec(rng, 4)
        phi = np.array([0, 0, 1, 0])
        expected = psi * np.array([1, 1, np.exp(0.8j), 1])
        assert aligned_gap(pr.exact_postselected_state(psi, phi, 0.8), expected) <= 1e-15

    def test_postselected_matches_simulation(self, demo_states):
        psi, phi = demo_states
        g = np.random.default_rng(3)
        out = pr.run_cycle(psi, phi, 0.05, rng=g)
        assert out.success
        assert aligned_gap(out.post_state, pr.exact_postselected_state(psi, phi, 0.05)) <= 1e-10

    def test_failure_zero_branch(self, rng):
        phi = np.zeros(8)
        phi[2] = 1
        with pytest.raises(sv.StateError):
            pr.exact_failure_state(rand_vec(rng, 8), phi, 0.5, 3)
        with pytest.raises(ValueError):
            pr.exact_failure_state(rand_vec(rng, 8), phi, 0.5, 0)

    def test_failure_depends_on_completion(self, rng):
        psi, phi = rand_vec(rng, 4), rand_vec(rng, 4)
        a = pr.exact_failure_state(psi, phi, 1.0, 1, "householder")
        b = pr.exact_failure_state(psi, phi, 1.0, 1, "gram_schmidt")
        assert sv.fidelity_up_to_global_phase(a, b) < 1 - 1e-6
        assert pr.exact_success_probability(psi, phi, 1.0) == pytest.approx(
            pr.exact_outcome_distribution(psi, phi, 1.0, "gram_schmidt").success, abs=1e-12)

    def test_small_delta_phase_law(self, rng):
        for _ in range(100):
            N = 1 << int(rng.integers(1, 4))
            psi, phi = rand_vec(rng, N), rand_vec(rng, N)
            d = rng.uniform(-1e-3, 1e-3)
            f = sv.fidelity_up_to_global_phase(pr.exact_postselected_state(psi, phi, d),
                                               pr.ideal_phase_state(psi, phi, d))
            assert f >= 1 - 10 * d**2


class TestConfig:
    def test_alpha_derives_delta(self):
        c = pr.ProtocolConfig(alpha=1.0, cycles=3)
        assert c.delta == 1 / 3 and c.alpha == 1.0

    def test_delta_derives_alpha(self):
        assert pr.ProtocolConfig(delta=0.05, cycles=100).alpha == pytest.approx(5.0)

    @pytest.mark.parametrize("kw", [dict(delta=0.1, cycles=0), dict(cycles=2), dict(delta=0.1, alpha=1.0, cycles=2),
                                    dict(delta=0.1, mode="bogus")])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            pr.ProtocolConfig(**kw)


class TestRunProtocol:
    def test_single_cycle_matches_run_cycle(self, demo_states):
        psi, phi = demo_states
        res = pr.run_protocol(psi, phi, pr.ProtocolConfig(delta=0.3, cycles=1))
        one = pr.run_cycle(psi, phi, 0.3, postselect=True)
        assert res.cycles_run == 1 and res.failed_at is None
        assert aligned_gap(res.final_state, one.post_state) <= 1e-14
        assert res.total_success_probability == pytest.approx(one.probability, abs=1e-12)

    def test_postselected_vs_exact(self, demo_states):
        psi, phi = demo_states
        a = pr.run_protocol(psi, phi, pr.ProtocolConfig(delta=0.05, cycles=100, mode="postselected"))
        b = pr.run_protocol(psi, phi, pr.ProtocolConfig(delta=0.05, cycles=100, mode="exact"))
        assert aligned_gap(a.final_state, b.final_state) <= 1e-10
        assert a.cycles_run == 100 and a.failed_at is None
        assert a.total_success_probability == pytest.approx(b.total_success_probability, abs=1e-12)

    def test_failure_scaling(self, demo_states):
        psi, phi = demo_states
        fail = {m: 1 - pr.total_success_probability(psi, phi, 1.0 / m, m) for m in (50, 100, 200)}
        for m in (50, 100):
            assert 1.8 <= fail[m] / fail[2 * m] <= 2.2

    def test_sampled_is_seeded(self, demo_states):
        psi, phi = demo_states
        cfg = pr.ProtocolConfig(delta=1.5, cycles=20, mode="sampled", seed=42)
        a, b = pr.run_protocol(psi, phi, cfg), pr.run_protocol(psi, phi, cfg)
        assert [o.mu for o in a.outcome_log] == [o.mu for o in b.outcome_log]
        np.testing.assert_array_equal(a.final_state.amplitudes, b.final_state.amplitudes)

    def test_sampled_stops_at_failure(self):
        # uniform software state at delta=pi: P(0) = 9/16 every cycle
        psi = phi = np.full(8, 1 / np.sqrt(8))
        assert pr.total_success_probability(psi, phi, np.pi, 30) < 1e-7
        res = pr.run_protocol(psi, phi, pr.ProtocolConfig(delta=np.pi, cycles=30, mode="sampled", seed=1))
        assert res.failed_at is not None
        assert res.cycles_run == res.failed_at + 1
        last = res.outcome_log[-1]
        assert not last.success and last.post_state is res.final_state

    def test_to_dict(self, demo_states):
        psi, phi = demo_states
        d = pr.run_protocol(psi, phi, pr.ProtocolConfig(delta=0.1, cycles=2, mode="exact")).to_dict()
        assert {"mode", "delta", "cycles", "failed_at", "total_success_probability", "final_amplitudes"} <= set(d)
        assert len(d["final_amplitudes"]) == 8 and len(d["final_amplitudes"][0]) == 2

    def test_dimension_mismatch(self, rng):
        with pytest.raises(sv.StateError):
            pr.run_protocol(rand_vec(rng, 4), rand_vec(rng, 2), pr.ProtocolConfig(delta=0.1))
