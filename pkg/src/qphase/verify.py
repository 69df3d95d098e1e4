"""Property suites run by ``qphase verify``.

Each suite returns a list of :class:`Check` records.  The protocol suite
takes the success-probability function as a parameter so a deliberately
broken implementation can be fed through it.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np

from . import hamiltonian as ham
from . import partial_phase as pp
from . import protocol as proto
from . import statevector as sv
from .initializer import make_initializer

SUITES = ("core", "partial-phase", "protocol", "hamiltonian")
_SEED = 7


@dataclass
class Check:
    name: str
    passed: bool
    detail: str = ""


def random_vector(rng: np.random.Generator, dim: int) -> np.ndarray:
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


def random_state(rng: np.random.Generator, n_qubits: int) -> sv.StateVector:
    return sv.StateVector(n_qubits, random_vector(rng, 1 << n_qubits))


def _haar_2x2(rng):
    q, r = np.linalg.qr(rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))
    return q * (np.diag(r) / np.abs(np.diag(r)))


def _check(name, worst, tol) -> Check:
    return Check(name, bool(worst <= tol), f"worst={worst:.3e} tol={tol:.0e}")


# ----------------------------------------------------------------------------


def core_suite(rng=None) -> list[Check]:
    rng = rng or np.random.default_rng(_SEED)
    out = []

    worst = 0.0
    for _ in range(50):
        n = int(rng.integers(2, 5))
        s = random_state(rng, n)
        a, b = rng.choice(n, size=2, replace=False)
        gates = [
            sv.SingleQubitGate(_haar_2x2(rng), int(a)),
            sv.CNOT0(int(a), int(b)),
            sv.MultiControlledPhase(tuple(int(q) for q in rng.choice(n, size=2, replace=False)),
                                    float(rng.uniform(-8, 8))),
        ]
        for g in gates:
            worst = max(worst, abs(sv.apply_gate(s, g).norm() - 1))
        worst = max(worst, abs(sv.qft(s).norm() - 1), abs(sv.qft(s, inverse=True).norm() - 1))
    out.append(_check("norm preservation", worst, 1e-12))

    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(1, 5))
        s = random_state(rng, n)
        k = int(rng.integers(1, n + 1))
        qs = [int(q) for q in rng.choice(n, size=k, replace=False)]
        worst = max(worst, abs(sv.marginal_probabilities(s, qs).sum() - 1))
    out.append(_check("marginals sum to one", worst, 1e-12))

    s = random_state(rng, 3)
    seqs = []
    for _ in range(2):
        g = np.random.default_rng(123)
        seqs.append([sv.measure_subregister(s, [0, 2], g)[0] for _ in range(50)])
    out.append(Check("measurement determinism", seqs[0] == seqs[1]))

    worst_tr = worst_ev = 0.0
    for _ in range(50):
        n = int(rng.integers(2, 5))
        s = random_state(rng, n)
        k = int(rng.integers(1, n))
        rho = sv.reduced_density_matrix(s, [int(q) for q in rng.choice(n, size=k, replace=False)])
        ev = rho.eigenvalues()
        worst_tr = max(worst_tr, abs(rho.trace() - 1))
        worst_ev = max(worst_ev, -ev.min(), ev.max() - 1)
    out.append(_check("reduced density matrix has unit trace", worst_tr, 1e-12))
    out.append(_check("reduced density matrix spectrum in [0, 1]", worst_ev, 1e-10))

    worst = 0.0
    for n in (1, 2, 3):
        s = random_state(rng, n)
        dense = sv.dft_matrix(1 << n) @ s.amplitudes
        worst = max(worst, np.max(np.abs(sv.qft(s).amplitudes - dense)))
    out.append(_check("qft equals dense DFT", worst, 1e-12))
    return out


def partial_phase_suite(rng=None) -> list[Check]:
    rng = rng or np.random.default_rng(_SEED)
    out = []
    worst = worst_u = worst_id = worst_sw = 0.0
    counts_ok = True
    for n in (1, 2, 3):
        counts_ok &= pp.build_partial_phase_circuit(n, 0.1).gate_count == 2 * n + 1
        perm = pp.register_swap_permutation(n)
        for delta in rng.uniform(-8, 8, size=20):
            direct = pp.dense_operator(n, delta, "direct")
            circuit = pp.dense_operator(n, delta, "circuit")
            eye = np.eye(direct.shape[0])
            worst = max(worst, np.max(np.abs(direct - circuit)))
            worst_u = max(worst_u, np.max(np.abs(circuit.conj().T @ circuit - eye)))
            worst_id = max(worst_id, abs(np.max(np.abs(direct - eye)) - 2 * abs(math.sin(delta / 2))))
            worst_sw = max(worst_sw, np.max(np.abs(perm @ direct @ perm.T - direct)))
    out.append(_check("circuit equals direct", worst, 1e-12))
    out.append(Check("gate count 2n+1", bool(counts_ok)))
    out.append(_check("unitarity", worst_u, 1e-12))
    out.append(_check("identity limit", worst_id, 1e-12))
    out.append(_check("register swap symmetry", worst_sw, 1e-12))

    worst = 0.0
    for _ in range(20):
        n = int(rng.integers(1, 4))
        lay = sv.RegisterLayout(n)
        s = random_state(rng, 2 * n)
        d1, d2 = rng.uniform(-8, 8, size=2)
        two = pp.apply_partial_phase_direct(pp.apply_partial_phase_direct(s, lay, d1), lay, d2)
        one = pp.apply_partial_phase_direct(s, lay, d1 + d2)
        worst = max(worst, np.max(np.abs(two.amplitudes - one.amplitudes)))
    out.append(_check("phases compose additively", worst, 1e-12))
    return out


def _aligned_gap(a, b) -> float:
    va = a.amplitudes if isinstance(a, sv.StateVector) else np.asarray(a)
    vb = b.amplitudes if isinstance(b, sv.StateVector) else np.asarray(b)
    ov = np.vdot(va, vb)
    ph = ov / abs(ov) if abs(ov) > 0 else 1.0
    return float(np.max(np.abs(va * ph - vb)))


def protocol_suite(rng=None, success_probability: Callable = proto.exact_success_probability) -> list[Check]:
    rng = rng or np.random.default_rng(_SEED)
    out = []

    worst_p = worst_s = 0.0
    for _ in range(100):
        n = int(rng.integers(1, 4))
        N = 1 << n
        psi, phi = random_vector(rng, N), random_vector(rng, N)
        delta = float(rng.uniform(-8, 8))
        completion = str(rng.choice(["householder", "gram_schmidt"]))
        u = make_initializer(phi, completion)
        gamma = proto.cycle_state(psi, phi, delta, u, use_circuit=True)
        lay = sv.RegisterLayout(n)
        sim_p = sv.marginal_probabilities(gamma, lay.ancilla_qubits)
        exact = proto.exact_outcome_distribution(psi, phi, delta, u).probabilities
        worst_p = max(worst_p, np.max(np.abs(sim_p - exact)),
                      abs(success_probability(psi, phi, delta) - sim_p[0]))
        mat = lay.as_matrix(gamma)
        for mu in range(N):
            if sim_p[mu] < 1e-10:
                continue
            col = mat[:, mu] / np.linalg.norm(mat[:, mu])
            ref = (proto.exact_postselected_state(psi, phi, delta) if mu == 0
                   else proto.exact_failure_state(psi, phi, delta, mu, u))
            worst_s = max(worst_s, _aligned_gap(col, ref))
    out.append(_check("outcome law matches simulation", worst_p, 1e-12))
    out.append(_check("collapsed states match closed forms", worst_s, 1e-10))

    worst = 0.0
    for _ in range(1000):
        N = 1 << int(rng.integers(1, 4))
        psi, phi = random_vector(rng, N), random_vector(rng, N)
        delta = float(rng.uniform(-8, 8))
        p0 = success_probability(psi, phi, delta)
        lo = math.cos(delta / 2) ** 2
        worst = max(worst, lo - p0, p0 - 1.0)
    out.append(_check("success probability within [cos^2(delta/2), 1]", worst, 1e-12))

    worst = 0.0
    for _ in range(50):
        N = 1 << int(rng.integers(1, 4))
        psi, phi = random_vector(rng, N), random_vector(rng, N)
        delta = float(rng.uniform(-8, 8))
        hh = proto.run_cycle(psi, phi, delta, "householder", postselect=True)
        gs = proto.run_cycle(psi, phi, delta, "gram_schmidt", postselect=True)
        worst = max(worst, abs(hh.probability - gs.probability),
                    _aligned_gap(hh.post_state, gs.post_state))
    out.append(_check("success branch independent of completion", worst, 1e-12))

    worst = 0.0
    for _ in range(50):
        N = 1 << int(rng.integers(1, 4))
        psi, phi = random_vector(rng, N), random_vector(rng, N)
        delta = float(rng.uniform(-1e-3, 1e-3))
        f = sv.fidelity_up_to_global_phase(proto.exact_postselected_state(psi, phi, delta),
                                           proto.ideal_phase_state(psi, phi, delta))
        worst = max(worst, (1 - 10 * delta**2) - f)
    out.append(_check("small-step phase law", worst, 0.0))

    worst = 0.0
    for _ in range(100):
        N = 1 << int(rng.integers(1, 4))
        d = proto.exact_outcome_distribution(random_vector(rng, N), random_vector(rng, N),
                                             float(rng.uniform(-8, 8)), "gram_schmidt")
        worst = max(worst, abs(d.probabilities.sum() - 1))
    out.append(_check("outcome probabilities sum to one", worst, 1e-12))
    return out


def hamiltonian_suite(rng=None) -> list[Check]:
    rng = rng or np.random.default_rng(_SEED)
    out = []
    base = ham.harmonic_oscillator(3, total_time=1.0)
    psi = ham.gaussian_state(3)

    worst = 0.0
    for m in (1, 3, 8):
        worst = max(worst, abs(ham.evolve(psi, base.with_steps(m)).norm() - 1))
    worst = max(worst, abs(ham.evolve(psi, base.with_steps(2), "protocol_phase").norm() - 1))
    out.append(_check("norm preservation", worst, 1e-12))

    pot = ham.HamiltonianSpec(3, base.potential, np.zeros(8), 1.0, 1)
    ref = ham.evolve(psi, pot)
    worst = max(np.max(np.abs(ham.evolve(psi, pot.with_steps(m)).amplitudes - ref.amplitudes))
                for m in (2, 5, 16))
    out.append(_check("commuting case independent of steps", worst, 1e-12))

    errs = [ham.trotter_error(psi, base.with_steps(m)) for m in (1, 2, 4, 8, 16)]
    out.append(Check("Trotter error non-increasing in steps",
                     all(b <= a for a, b in zip(errs, errs[1:])),
                     "errors=" + ", ".join(f"{e:.3e}" for e in errs)))
    ratios = [ham.trotter_error(psi, base.with_steps(m)) / ham.trotter_error(psi, base.with_steps(2 * m))
              for m in (8, 16)]
    out.append(Check("first-order Trotter scaling", all(1.7 <= r <= 2.3 for r in ratios),
                     "ratios=" + ", ".join(f"{r:.3f}" for r in ratios)))
    return out


_RUNNERS = {
    "core": core_suite,
    "partial-phase": partial_phase_suite,
    "protocol": protocol_suite,
    "hamiltonian": hamiltonian_suite,
}


def run_suites(suite: str = "all") -> dict:
    names = SUITES if suite == "all" else (suite,)
    unknown = [s for s in names if s not in _RUNNERS]
    if unknown:
        raise ValueError(f"unknown suite {unknown[0]!r}; choose from {SUITES + ('all',)}")
    results = {name: [asdict(c) for c in _RUNNERS[name]()] for name in names}
    passed = all(c["passed"] for checks in results.values() for c in checks)
    return {"passed": passed, "suites": results}
