"""Partial phase operator ``U(delta)``.

``U(delta)|x>|y> = e^{i delta}|x>|y>`` when ``x == y`` and leaves every other
basis pair alone.  Two routes are provided and cross-checked in the tests:

* :func:`apply_partial_phase_direct` multiplies the diagonal of the composite
  amplitude matrix;
* :func:`build_partial_phase_circuit` / :func:`apply_circuit` run the
  ``2n + 1`` gate construction: ``n`` CNOT0 gates write the flag bits
  ``z_j = x_j XOR NOT y_j`` onto the primary qubits, a phase gate controlled
  on all flags fires when ``x == y``, and the same CNOT0s undo the flags.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .statevector import (
    CNOT0,
    GateOp,
    MultiControlledPhase,
    RegisterLayout,
    StateError,
    StateVector,
    apply_gate,
    basis_state,
)

MAX_DENSE_QUBITS_PER_REGISTER = 4


@dataclass(frozen=True)
class PartialPhaseCircuit:
    n: int
    delta: float
    gates: tuple[GateOp, ...]

    @property
    def gate_count(self) -> int:
        return len(self.gates)

    @property
    def layout(self) -> RegisterLayout:
        return RegisterLayout(self.n)


def apply_partial_phase_direct(state: StateVector, layout: RegisterLayout, delta: float) -> StateVector:
    if state.n_qubits != layout.n_qubits:
        raise StateError(
            f"state has {state.n_qubits} qubits, layout expects {layout.n_qubits}")
    m = layout.as_matrix(state).copy()
    d = np.arange(m.shape[0])
    m[d, d] *= np.exp(1j * delta)
    return StateVector(state.n_qubits, m.reshape(-1))


def build_partial_phase_circuit(n: int, delta: float) -> PartialPhaseCircuit:
    if n < 1:
        raise StateError(f"register size must be >= 1, got {n}")
    layout = RegisterLayout(n)
    anc, prim = layout.ancilla_qubits, layout.primary_qubits
    compute = [CNOT0(control=anc[j], target=prim[j]) for j in range(n)]
    phase = MultiControlledPhase(controls=prim, delta=float(delta))
    gates = (*compute, phase, *reversed(compute))
    return PartialPhaseCircuit(n=n, delta=float(delta), gates=gates)


def apply_circuit(state: StateVector, circuit: PartialPhaseCircuit) -> StateVector:
    if state.n_qubits != 2 * circuit.n:
        raise StateError(
            f"circuit acts on {2 * circuit.n} qubits, state has {state.n_qubits}")
    for g in circuit.gates:
        state = apply_gate(state, g)
    return state


def dense_operator(n: int, delta: float, source: Literal["direct", "circuit"] = "direct") -> np.ndarray:
    """Full ``4**n x 4**n`` matrix, built column by column from basis states."""
    if n < 1:
        raise StateError(f"register size must be >= 1, got {n}")
    if n > MAX_DENSE_QUBITS_PER_REGISTER:
        raise StateError(f"dense operator limited to n <= {MAX_DENSE_QUBITS_PER_REGISTER}")
    layout = RegisterLayout(n)
    if source == "direct":
        act = lambda s: apply_partial_phase_direct(s, layout, delta)  # noqa: E731
    elif source == "circuit":
        circuit = build_partial_phase_circuit(n, delta)
        act = lambda s: apply_circuit(s, circuit)  # noqa: E731
    else:
        raise ValueError(f"unknown source {source!r}")
    dim = 1 << (2 * n)
    out = np.empty((dim, dim), dtype=np.complex128)
    for k in range(dim):
        out[:, k] = act(basis_state(2 * n, k)).amplitudes
    return out


def register_swap_permutation(n: int) -> np.ndarray:
    """Permutation matrix exchanging the two registers: ``|x>|y> -> |y>|x>``."""
    N = 1 << n
    dim = N * N
    s = np.arange(dim)
    swapped = (s % N) * N + s // N
    perm = np.zeros((dim, dim))
    perm[swapped, s] = 1.0
    return perm
