"""Dense statevector engine.

Bit convention: qubit ``q`` is bit ``q`` of the basis index, so qubit 0 is the
least significant bit.  A register given as an ordered qubit sequence
``(q_0, q_1, ...)`` reads its value as ``sum(bit(q_i) << i)``.

For the two-register protocol the composite index of ``|x>|y>`` is
``s = x * 2**n + y``: the primary register ``x`` owns the high qubits
``n .. 2n-1`` and the ancilla ``y`` owns the low qubits ``0 .. n-1``.  Qubit
``n + j`` therefore holds ``x_j`` and qubit ``j`` holds ``y_j``.

All operations are pure; they return new objects and never mutate inputs.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence, Union

import numpy as np

NORM_TOL = 1e-12
# Guard used at construction; public operations are tested at NORM_TOL.
_CONSTRUCT_TOL = 1e-9
_BRANCH_TOL = 1e-14


class StateError(ValueError):
    """Invalid state, register, or gate specification."""


def _is_power_of_two(k: int) -> bool:
    return k >= 1 and (k & (k - 1)) == 0


@dataclass(frozen=True, eq=False)
class StateVector:
    """Unit-norm vector of ``2**n_qubits`` complex amplitudes."""

    n_qubits: int
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=np.complex128)
        if self.n_qubits < 1:
            raise StateError(f"n_qubits must be >= 1, got {self.n_qubits}")
        if amps.shape != (1 << self.n_qubits,):
            raise StateError(
                f"expected {1 << self.n_qubits} amplitudes, got shape {amps.shape}")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > _CONSTRUCT_TOL:
            raise StateError(f"state is not normalized (norm={norm!r})")
        amps = amps.copy()
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def __len__(self):
        return self.dim

    def __array__(self, dtype=None, copy=None):
        return np.array(self.amplitudes, dtype=dtype)


def _renormalized(n_qubits: int, amps: np.ndarray) -> StateVector:
    # Strips accumulated roundoff so every returned state sits at NORM_TOL.
    return StateVector(n_qubits, amps / np.linalg.norm(amps))


@dataclass(frozen=True)
class RegisterLayout:
    """Two equal registers: primary on the high qubits, ancilla on the low ones."""

    n: int

    def __post_init__(self):
        if self.n < 1:
            raise StateError(f"register size must be >= 1, got {self.n}")

    @property
    def n_qubits(self) -> int:
        return 2 * self.n

    @property
    def primary_qubits(self) -> tuple[int, ...]:
        return tuple(range(self.n, 2 * self.n))

    @property
    def ancilla_qubits(self) -> tuple[int, ...]:
        return tuple(range(self.n))

    def composite_index(self, x: int, y: int) -> int:
        return (x << self.n) | y

    def split_index(self, s: int) -> tuple[int, int]:
        return s >> self.n, s & ((1 << self.n) - 1)

    def product_state(self, primary, ancilla) -> StateVector:
        """``|primary>|ancilla>`` as a 2n-qubit state."""
        p = _as_vector(primary)
        a = _as_vector(ancilla)
        if p.shape[0] != 1 << self.n or a.shape[0] != 1 << self.n:
            raise StateError("register states do not match the layout size")
        return StateVector(2 * self.n, np.kron(p, a))

    def as_matrix(self, state: StateVector) -> np.ndarray:
        """Amplitudes reshaped so that ``m[x, y]`` is the ``|x>|y>`` amplitude."""
        if state.n_qubits != self.n_qubits:
            raise StateError("state does not match the layout")
        N = 1 << self.n
        return state.amplitudes.reshape(N, N)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    entries: np.ndarray = field(repr=False)

    def __post_init__(self):
        rho = np.asarray(self.entries, dtype=np.complex128)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise StateError("density matrix must be square")
        object.__setattr__(self, "entries", rho)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @classmethod
    def from_pure(cls, vector) -> "DensityMatrix":
        v = _as_vector(vector)
        return cls(np.outer(v, v.conj()))

    def trace(self) -> complex:
        return complex(np.trace(self.entries))

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.entries)

    def trace_distance(self, other: "DensityMatrix") -> float:
        """``0.5 * ||rho - sigma||_1``."""
        if other.dim != self.dim:
            raise StateError("dimension mismatch")
        diff = self.entries - other.entries
        return 0.5 * float(np.abs(np.linalg.eigvalsh(0.5 * (diff + diff.conj().T))).sum())


# ----------------------------------------------------------------------------
# Gate alphabet


@dataclass(frozen=True, eq=False)
class SingleQubitGate:
    matrix: np.ndarray
    target: int

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.complex128)
        if m.shape != (2, 2):
            raise StateError("single-qubit gate needs a 2x2 matrix")
        if np.max(np.abs(m.conj().T @ m - np.eye(2))) > NORM_TOL:
            raise StateError("single-qubit gate matrix is not unitary")
        object.__setattr__(self, "matrix", m)

    @property
    def qubits(self) -> tuple[int, ...]:
        return (self.target,)


@dataclass(frozen=True)
class CNOT0:
    """CNOT that flips ``target`` when ``control`` is in ``|0>``."""

    control: int
    target: int

    def __post_init__(self):
        if self.control == self.target:
            raise StateError("control and target must differ")

    @property
    def qubits(self) -> tuple[int, ...]:
        return (self.control, self.target)


@dataclass(frozen=True)
class MultiControlledPhase:
    """Phase ``e^{i delta}`` on basis states whose control qubits are all 1."""

    controls: tuple[int, ...]
    delta: float

    def __post_init__(self):
        controls = tuple(int(c) for c in self.controls)
        if not controls:
            raise StateError("multi-controlled phase needs at least one qubit")
        if len(set(controls)) != len(controls):
            raise StateError("duplicate control qubits")
        object.__setattr__(self, "controls", controls)

    @property
    def qubits(self) -> tuple[int, ...]:
        return self.controls


GateOp = Union[SingleQubitGate, CNOT0, MultiControlledPhase]


# ----------------------------------------------------------------------------
# Construction and I/O


def _as_vector(values) -> np.ndarray:
    if isinstance(values, StateVector):
        return values.amplitudes
    return np.asarray(values, dtype=np.complex128).reshape(-1)


def basis_state(n_qubits: int, index: int) -> StateVector:
    if n_qubits < 1:
        raise StateError(f"n_qubits must be >= 1, got {n_qubits}")
    if not 0 <= index < 1 << n_qubits:
        raise StateError(f"basis index {index} out of range for {n_qubits} qubits")
    amps = np.zeros(1 << n_qubits, dtype=np.complex128)
    amps[index] = 1.0
    return StateVector(n_qubits, amps)


def from_amplitudes(values) -> StateVector:
    """Normalize an arbitrary nonzero vector of power-of-two length."""
    amps = np.asarray(values, dtype=np.complex128).reshape(-1)
    if not _is_power_of_two(amps.shape[0]) or amps.shape[0] < 2:
        raise StateError(f"length {amps.shape[0]} is not a power of two >= 2")
    norm = np.linalg.norm(amps)
    if norm <= 1e-12:
        raise StateError("cannot normalize a zero vector")
    return StateVector(amps.shape[0].bit_length() - 1, amps / norm)


def load_amplitudes(path) -> np.ndarray:
    """Read a JSON array of ``[re, im]`` pairs; the vector is normalized."""
    with open(path) as fh:
        raw = json.load(fh)
    try:
        arr = np.asarray(raw, dtype=float)
    except (TypeError, ValueError) as exc:
        raise StateError(f"{path}: expected an array of [re, im] pairs") from exc
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise StateError(f"{path}: expected an array of [re, im] pairs")
    return from_amplitudes(arr[:, 0] + 1j * arr[:, 1]).amplitudes


def amplitudes_to_pairs(values) -> list[list[float]]:
    v = _as_vector(values)
    return [[float(z.real), float(z.imag)] for z in v]


def save_amplitudes(path, values) -> None:
    Path(path).write_text(json.dumps(amplitudes_to_pairs(values)))


# ----------------------------------------------------------------------------
# Register bookkeeping


def _check_qubits(n_qubits: int, qubits: Sequence[int], *, allow_all=True) -> tuple[int, ...]:
    qs = tuple(int(q) for q in qubits)
    if not qs:
        raise StateError("qubit set is empty")
    if len(set(qs)) != len(qs):
        raise StateError(f"duplicate qubits in {qs}")
    if any(q < 0 or q >= n_qubits for q in qs):
        raise StateError(f"qubits {qs} out of range for {n_qubits} qubits")
    if not allow_all and len(qs) == n_qubits:
        raise StateError("qubit set must be a proper subset")
    return qs


def register_values(n_qubits: int, qubits: Sequence[int]) -> np.ndarray:
    """Value of the register ``qubits`` at every basis index."""
    idx = np.arange(1 << n_qubits)
    vals = np.zeros_like(idx)
    for i, q in enumerate(qubits):
        vals |= ((idx >> q) & 1) << i
    return vals


def _register_order(n_qubits: int, qubits: Sequence[int]):
    """Permutation grouping indices by (rest of qubits, register value)."""
    idx = np.arange(1 << n_qubits)
    mask = 0
    for q in qubits:
        mask |= 1 << q
    vals = register_values(n_qubits, qubits)
    rest = idx & ~mask
    return np.lexsort((vals, rest))


def apply_register_matrix(state: StateVector, matrix, qubits: Sequence[int]) -> StateVector:
    """Apply a ``2**k x 2**k`` matrix to the register ``qubits``."""
    qs = _check_qubits(state.n_qubits, qubits)
    m = np.asarray(matrix, dtype=np.complex128)
    K = 1 << len(qs)
    if m.shape != (K, K):
        raise StateError(f"matrix shape {m.shape} does not fit a {len(qs)}-qubit register")
    order = _register_order(state.n_qubits, qs)
    block = state.amplitudes[order].reshape(-1, K)
    out = np.empty(state.dim, dtype=np.complex128)
    out[order] = (block @ m.T).reshape(-1)
    return _renormalized(state.n_qubits, out)


# ----------------------------------------------------------------------------
# Gates


def apply_gate(state: StateVector, gate: GateOp) -> StateVector:
    n = state.n_qubits
    _check_qubits(n, gate.qubits)
    amps = state.amplitudes
    idx = np.arange(state.dim)

    if isinstance(gate, CNOT0):
        flip = (1 - ((idx >> gate.control) & 1)) << gate.target
        out = amps[idx ^ flip]
    elif isinstance(gate, MultiControlledPhase):
        mask = 0
        for q in gate.controls:
            mask |= 1 << q
        out = amps.copy()
        out[(idx & mask) == mask] *= np.exp(1j * gate.delta)
    elif isinstance(gate, SingleQubitGate):
        t = gate.target
        i0 = idx[((idx >> t) & 1) == 0]
        i1 = i0 | (1 << t)
        a0, a1 = amps[i0], amps[i1]
        (m00, m01), (m10, m11) = gate.matrix
        out = np.empty_like(amps)
        out[i0] = m00 * a0 + m01 * a1
        out[i1] = m10 * a0 + m11 * a1
    else:
        raise StateError(f"unknown gate {gate!r}")
    return _renormalized(n, out)


def apply_gates(state: StateVector, gates: Sequence[GateOp]) -> StateVector:
    for g in gates:
        state = apply_gate(state, g)
    return state


# ----------------------------------------------------------------------------
# Measurement and reduced states


def marginal_probabilities(state: StateVector, qubits: Sequence[int]) -> np.ndarray:
    qs = _check_qubits(state.n_qubits, qubits)
    vals = register_values(state.n_qubits, qs)
    probs = np.bincount(vals, weights=np.abs(state.amplitudes) ** 2, minlength=1 << len(qs))
    return probs / probs.sum()


def project(state: StateVector, qubits: Sequence[int], outcome: int) -> tuple[StateVector, float]:
    """Collapse onto ``outcome`` of register ``qubits``.

    Returns the renormalized post-measurement state and the branch probability.
    Raises :class:`StateError` if the branch has (numerically) zero weight.
    """
    qs = _check_qubits(state.n_qubits, qubits)
    if not 0 <= outcome < 1 << len(qs):
        raise StateError(f"outcome {outcome} out of range")
    keep = register_values(state.n_qubits, qs) == outcome
    branch = np.where(keep, state.amplitudes, 0)
    weight = np.linalg.norm(branch)
    if weight < _BRANCH_TOL:
        raise StateError(f"outcome {outcome} has zero probability (branch norm {weight:.3e})")
    return StateVector(state.n_qubits, branch / weight), float(weight**2)


def sample_outcome(probs: np.ndarray, rng: np.random.Generator) -> int:
    cdf = np.cumsum(probs)
    k = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
    return min(k, len(probs) - 1)


def measure_subregister(state: StateVector, qubits: Sequence[int],
                        rng: np.random.Generator) -> tuple[int, StateVector, float]:
    """Sample a computational-basis measurement of ``qubits``.

    Returns ``(outcome, collapsed_state, probability)`` where ``probability``
    is the exact marginal of the sampled outcome.
    """
    probs = marginal_probabilities(state, qubits)
    outcome = sample_outcome(probs, rng)
    collapsed, _ = project(state, qubits, outcome)
    return outcome, collapsed, float(probs[outcome])


def reduced_density_matrix(state: StateVector, keep: Sequence[int]) -> DensityMatrix:
    """Partial trace over every qubit not in ``keep``."""
    qs = _check_qubits(state.n_qubits, keep, allow_all=False)
    order = _register_order(state.n_qubits, qs)
    block = state.amplitudes[order].reshape(-1, 1 << len(qs))
    rho = block.T @ block.conj()
    rho = 0.5 * (rho + rho.conj().T)
    return DensityMatrix(rho / np.trace(rho).real)


def fidelity_up_to_global_phase(a, b) -> float:
    """``|<a|b>|`` for two states of equal dimension."""
    va, vb = _as_vector(a), _as_vector(b)
    if va.shape != vb.shape:
        raise StateError(f"dimension mismatch: {va.shape[0]} vs {vb.shape[0]}")
    return float(abs(np.vdot(va, vb)))


# ----------------------------------------------------------------------------
# Fourier transform


def dft_matrix(N: int) -> np.ndarray:
    """``F[j, k] = exp(2 pi i j k / N) / sqrt(N)``."""
    j = np.arange(N)
    return np.exp(2j * np.pi * np.outer(j, j) / N) / np.sqrt(N)


def qft(state: StateVector, register: Sequence[int] | None = None, inverse: bool = False) -> StateVector:
    """Discrete Fourier transform on the amplitude axis of ``register``.

    ``register`` defaults to every qubit of the state.  Forward uses the
    positive exponent ``e^{+2 pi i jk/N}``; ``inverse=True`` applies its adjoint.
    """
    if register is None:
        register = range(state.n_qubits)
    qs = _check_qubits(state.n_qubits, register)
    order = _register_order(state.n_qubits, qs)
    block = state.amplitudes[order].reshape(-1, 1 << len(qs))
    if inverse:
        block = np.fft.fft(block, axis=1, norm="ortho")
    else:
        block = np.fft.ifft(block, axis=1, norm="ortho")
    out = np.empty(state.dim, dtype=np.complex128)
    out[order] = block.reshape(-1)
    return _renormalized(state.n_qubits, out)
