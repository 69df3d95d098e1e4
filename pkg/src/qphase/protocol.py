"""Phase-transformation cycles and their closed-form outcome law.

One cycle on a primary state ``psi`` with software state ``phi``::

    |psi>|0>  --(I x U_phi)-->  --U(delta)-->  --(I x U_phi^dag)-->  measure ancilla

Outcome ``mu = 0`` leaves the primary register in
``psi(x) * (1 + (e^{i delta} - 1) |phi(x)|^2)`` (normalized), which is
``psi(x) e^{i delta |phi(x)|^2}`` up to ``O(delta^2)``.  Any other outcome
leaves ``psi(x) conj(phi_mu(x)) phi(x)`` where ``phi_mu`` is column ``mu`` of
the initializer.

Simulation (:func:`run_cycle`) and the analytic functions below are kept on
separate code paths so they can check each other.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal, Optional, Union

import numpy as np

from . import rng as rng_mod
from .initializer import InitializerUnitary, apply_initializer, make_initializer
from .partial_phase import apply_circuit, apply_partial_phase_direct, build_partial_phase_circuit
from .statevector import (
    RegisterLayout,
    StateError,
    StateVector,
    amplitudes_to_pairs,
    marginal_probabilities,
    project,
    sample_outcome,
)

Mode = Literal["sampled", "postselected", "exact"]
MODES: tuple[str, ...] = ("sampled", "postselected", "exact")
CompletionArg = Union[str, InitializerUnitary]

_BRANCH_TOL = 1e-14


def _vector(v) -> np.ndarray:
    if isinstance(v, StateVector):
        return v.amplitudes
    return np.asarray(v, dtype=np.complex128).reshape(-1)


def _pair(psi, phi) -> tuple[np.ndarray, np.ndarray]:
    p, f = _vector(psi), _vector(phi)
    if p.shape != f.shape:
        raise StateError(f"dimension mismatch: psi has {p.shape[0]}, phi has {f.shape[0]}")
    N = p.shape[0]
    if N < 2 or N & (N - 1):
        raise StateError(f"register dimension {N} is not a power of two >= 2")
    return p, f


def _initializer(phi: np.ndarray, completion: CompletionArg) -> InitializerUnitary:
    if isinstance(completion, InitializerUnitary):
        if not np.allclose(completion.matrix[:, 0], phi, atol=1e-12, rtol=0):
            raise StateError("initializer column 0 does not match phi")
        return completion
    return make_initializer(phi, completion)


def phase_kick(delta: float) -> complex:
    """``2i e^{i delta/2} sin(delta/2)``, i.e. ``e^{i delta} - 1``."""
    return 2j * np.exp(0.5j * delta) * np.sin(0.5 * delta)


# ----------------------------------------------------------------------------
# Result types


@dataclass(frozen=True)
class CycleOutcome:
    mu: int
    probability: float
    post_state: StateVector

    @property
    def success(self) -> bool:
        return self.mu == 0


@dataclass(frozen=True, eq=False)
class OutcomeDistribution:
    probabilities: np.ndarray = field(repr=False)

    def __post_init__(self):
        p = np.asarray(self.probabilities, dtype=float)
        if np.any(p < -1e-14):
            raise StateError("negative outcome probability")
        if abs(p.sum() - 1.0) > 1e-12:
            raise StateError(f"outcome probabilities sum to {p.sum()!r}")
        object.__setattr__(self, "probabilities", p)

    @property
    def success(self) -> float:
        return float(self.probabilities[0])

    def __getitem__(self, mu):
        return self.probabilities[mu]

    def __len__(self):
        return len(self.probabilities)


@dataclass(frozen=True)
class ProtocolConfig:
    """Cycle schedule.  Give ``delta`` directly or ``alpha`` (then ``delta = alpha / cycles``)."""

    cycles: int = 1
    delta: Optional[float] = None
    alpha: Optional[float] = None
    mode: str = "postselected"
    seed: Optional[int] = None
    completion: str = "householder"

    def __post_init__(self):
        if self.cycles < 1:
            raise ValueError(f"cycles must be >= 1, got {self.cycles}")
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}; choose from {MODES}")
        if self.delta is None and self.alpha is None:
            raise ValueError("give delta or alpha")
        if self.delta is None:
            object.__setattr__(self, "delta", float(self.alpha) / self.cycles)
        elif self.alpha is None:
            object.__setattr__(self, "alpha", float(self.delta) * self.cycles)
        elif abs(self.alpha - self.cycles * self.delta) > 1e-12:
            raise ValueError(
                f"alpha={self.alpha} disagrees with cycles*delta={self.cycles * self.delta}")


@dataclass
class ProtocolResult:
    mode: str
    delta: float
    cycles: int
    final_state: StateVector
    cycles_run: int
    total_success_probability: float
    failed_at: Optional[int] = None
    outcome_log: list = field(default_factory=list, repr=False)
    seed: Optional[int] = None

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "delta": self.delta,
            "cycles": self.cycles,
            "cycles_run": self.cycles_run,
            "failed_at": self.failed_at,
            "seed": self.seed,
            "total_success_probability": self.total_success_probability,
            "outcomes": [int(o.mu) for o in self.outcome_log],
            "final_amplitudes": amplitudes_to_pairs(self.final_state),
        }


# ----------------------------------------------------------------------------
# Simulation path


def cycle_state(psi, phi, delta: float, completion: CompletionArg = "householder",
                use_circuit: bool = False) -> StateVector:
    """Joint state just before the ancilla readout."""
    p, f = _pair(psi, phi)
    u = _initializer(f, completion)
    layout = RegisterLayout(u.n)
    zero = np.zeros_like(f)
    zero[0] = 1.0
    state = layout.product_state(StateVector(u.n, p), zero)
    state = apply_initializer(state, u, layout.ancilla_qubits)
    if use_circuit:
        state = apply_circuit(state, build_partial_phase_circuit(u.n, delta))
    else:
        state = apply_partial_phase_direct(state, layout, delta)
    return apply_initializer(state, u, layout.ancilla_qubits, adjoint=True)


def _primary_part(state: StateVector, layout: RegisterLayout, mu: int) -> StateVector:
    col = layout.as_matrix(state)[:, mu]
    return StateVector(layout.n, col / np.linalg.norm(col))


def run_cycle(psi, phi, delta: float, completion: CompletionArg = "householder",
              rng: Optional[np.random.Generator] = None, *, postselect: bool = False,
              use_circuit: bool = False) -> CycleOutcome:
    """Simulate one cycle on the joint statevector.

    With ``postselect=True`` the ancilla is collapsed onto ``mu = 0`` instead of
    sampled, and ``rng`` is not used.
    """
    state = cycle_state(psi, phi, delta, completion, use_circuit)
    layout = RegisterLayout(state.n_qubits // 2)
    anc = layout.ancilla_qubits
    if postselect:
        mu = 0
    else:
        if rng is None:
            raise ValueError("sampled cycle needs an rng")
        mu = sample_outcome(marginal_probabilities(state, anc), rng)
    collapsed, prob = project(state, anc, mu)
    return CycleOutcome(mu=mu, probability=prob, post_state=_primary_part(collapsed, layout, mu))


# ----------------------------------------------------------------------------
# Closed forms


def branch_amplitudes(psi, phi, delta: float, completion: CompletionArg = "householder") -> np.ndarray:
    """Unnormalized ``a[x, mu] = psi(x) (delta_{mu 0} + kick * conj(phi_mu(x)) phi(x))``."""
    p, f = _pair(psi, phi)
    cols = _initializer(f, completion).matrix
    amps = phase_kick(delta) * cols.conj() * f[:, None]
    amps[:, 0] += 1.0
    return p[:, None] * amps


def exact_outcome_distribution(psi, phi, delta: float,
                               completion: CompletionArg = "householder") -> OutcomeDistribution:
    probs = np.sum(np.abs(branch_amplitudes(psi, phi, delta, completion)) ** 2, axis=0)
    return OutcomeDistribution(probs / probs.sum())


def exact_success_probability(psi, phi, delta: float) -> float:
    """``sum_x |psi|^2 (1 - 4 sin^2(delta/2) |phi|^2 (1 - |phi|^2))``; at least ``cos^2(delta/2)``."""
    p, f = _pair(psi, phi)
    w = np.abs(p) ** 2
    q = np.abs(f) ** 2
    return float(np.sum(w * (1.0 - 4.0 * np.sin(0.5 * delta) ** 2 * q * (1.0 - q))))


def exact_postselected_state(psi, phi, delta: float) -> StateVector:
    p, f = _pair(psi, phi)
    out = p * (1.0 + phase_kick(delta) * np.abs(f) ** 2)
    return StateVector(p.shape[0].bit_length() - 1, out / np.linalg.norm(out))


def exact_failure_state(psi, phi, delta: float, mu: int,
                        completion: CompletionArg = "householder") -> StateVector:
    """Primary state after outcome ``mu != 0``: ``psi * conj(phi_mu) * phi``, normalized."""
    p, f = _pair(psi, phi)
    if mu == 0:
        raise ValueError("mu = 0 is the success branch; use exact_postselected_state")
    if not 0 < mu < p.shape[0]:
        raise StateError(f"outcome {mu} out of range")
    col = branch_amplitudes(p, f, delta, completion)[:, mu]
    weight = np.linalg.norm(col)
    if weight**2 < _BRANCH_TOL:
        raise StateError(f"outcome {mu} has zero probability")
    return StateVector(p.shape[0].bit_length() - 1, col / weight)


def ideal_phase_state(psi, phi, alpha: float) -> StateVector:
    """Target of the protocol: ``psi(x) e^{i alpha |phi(x)|^2}``."""
    p, f = _pair(psi, phi)
    out = p * np.exp(1j * alpha * np.abs(f) ** 2)
    return StateVector(p.shape[0].bit_length() - 1, out / np.linalg.norm(out))


def total_success_probability(psi, phi, delta: float, cycles: int) -> float:
    """Probability that ``cycles`` consecutive cycles all succeed."""
    state = StateVector(_vector(psi).shape[0].bit_length() - 1, _vector(psi))
    total = 1.0
    for _ in range(cycles):
        total *= exact_success_probability(state, phi, delta)
        state = exact_postselected_state(state, phi, delta)
    return total


# ----------------------------------------------------------------------------
# Iteration


def run_protocol(psi, phi, config: ProtocolConfig) -> ProtocolResult:
    p, f = _pair(psi, phi)
    n = p.shape[0].bit_length() - 1
    state = StateVector(n, p)
    delta = float(config.delta)
    u = make_initializer(f, config.completion) if config.mode != "exact" else None
    gen = seed = None
    if config.mode == "sampled":
        seed = rng_mod.default_seed() if config.seed is None else config.seed
        gen = rng_mod.stream(seed)
    total = 1.0
    log: list[CycleOutcome] = []
    failed_at = None
    for k in range(config.cycles):
        p_success = exact_success_probability(state, f, delta)
        total *= p_success
        if config.mode == "exact":
            state = exact_postselected_state(state, f, delta)
            outcome = CycleOutcome(mu=0, probability=p_success, post_state=state)
        else:
            outcome = run_cycle(state, f, delta, u, gen, postselect=config.mode == "postselected")
            state = outcome.post_state
        log.append(outcome)
        if not outcome.success:
            failed_at = k
            break
    return ProtocolResult(
        mode=config.mode,
        delta=delta,
        cycles=config.cycles,
        final_state=state,
        cycles_run=len(log),
        total_success_probability=total,
        failed_at=failed_at,
        outcome_log=log,
        seed=seed,
    )
