"""First-order Trotter evolution for ``H = T(P) + V(X)``.

Profiles are already-discretized tables on an ``N = 2**n`` grid (``hbar = 1``).
``V`` is indexed by position and ``T`` by the DFT frequency index of the
forward transform in :func:`qphase.statevector.qft` (no fftshift).  One step is
``F^dag diag(e^{-i T dt}) F  diag(e^{-i V dt})``.

In ``protocol_phase`` mode each diagonal phase is imposed by post-selected
protocol cycles using a software state built from the profile.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Literal, Optional, Sequence

import numpy as np

from .protocol import ProtocolConfig, run_protocol
from .statevector import StateError, StateVector, dft_matrix, qft

PhaseMode = Literal["exact_phase", "protocol_phase"]
PHASE_MODES = ("exact_phase", "protocol_phase")
DEFAULT_MAX_DELTA = 0.01


@dataclass(frozen=True, eq=False)
class HamiltonianSpec:
    n: int
    potential: np.ndarray = field(repr=False)
    kinetic: np.ndarray = field(repr=False)
    total_time: float = 1.0
    steps: int = 1

    def __post_init__(self):
        N = 1 << self.n
        for name in ("potential", "kinetic"):
            arr = np.asarray(getattr(self, name), dtype=float).reshape(-1)
            if arr.shape != (N,):
                raise StateError(f"{name} profile needs {N} entries, got {arr.shape[0]}")
            if not np.all(np.isfinite(arr)):
                raise StateError(f"{name} profile has non-finite entries")
            object.__setattr__(self, name, arr)
        if self.steps < 1:
            raise StateError(f"steps must be >= 1, got {self.steps}")

    @property
    def dim(self) -> int:
        return 1 << self.n

    @property
    def dt(self) -> float:
        return self.total_time / self.steps

    def with_steps(self, steps: int) -> "HamiltonianSpec":
        return HamiltonianSpec(self.n, self.potential, self.kinetic, self.total_time, steps)

    def matrix(self) -> np.ndarray:
        F = dft_matrix(self.dim)
        return F.conj().T @ np.diag(self.kinetic) @ F + np.diag(self.potential)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "potential": self.potential.tolist(),
            "kinetic": self.kinetic.tolist(),
            "t": self.total_time,
            "m": self.steps,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "HamiltonianSpec":
        return cls(n=int(d["n"]), potential=d["potential"], kinetic=d["kinetic"],
                   total_time=float(d.get("t", 1.0)), steps=int(d.get("m", 1)))

    @classmethod
    def load(cls, path) -> "HamiltonianSpec":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def harmonic_oscillator(n: int = 3, omega: float = 1.0, mass: float = 1.0,
                        total_time: float = 1.0, steps: int = 1) -> HamiltonianSpec:
    """``p^2/2m + m omega^2 x^2/2`` on a centred grid with ``dx = sqrt(2 pi / N)``.

    That spacing makes the position and momentum grids identical.
    """
    N = 1 << n
    dx = math.sqrt(2 * math.pi / N)
    x = (np.arange(N) - N // 2) * dx
    p = 2 * np.pi * np.fft.fftfreq(N, d=dx)
    return HamiltonianSpec(
        n=n,
        potential=0.5 * mass * omega**2 * x**2,
        kinetic=p**2 / (2 * mass),
        total_time=total_time,
        steps=steps,
    )


def position_grid(n: int) -> np.ndarray:
    N = 1 << n
    return (np.arange(N) - N // 2) * math.sqrt(2 * math.pi / N)


# ----------------------------------------------------------------------------
# Phase profiles


@dataclass(frozen=True, eq=False)
class PhaseProfile:
    values: np.ndarray
    software_state: Optional[np.ndarray] = None
    alpha: Optional[float] = None


def profile_to_software_state(values) -> PhaseProfile:
    """Encode a phase table as ``alpha * |phi(x)|^2``.

    ``phi = sqrt(values / A)`` and ``alpha = A`` with ``A = sum(values)``.  A
    non-positive profile gets a negative ``alpha``; mixed signs cannot be
    carried by one software state and are rejected.
    """
    v = np.asarray(values, dtype=float).reshape(-1)
    if not np.all(np.isfinite(v)):
        raise StateError("phase profile has non-finite entries")
    if np.all(v == 0):
        raise StateError("phase profile is identically zero")
    if np.any(v > 0) and np.any(v < 0):
        raise StateError(
            "mixed-sign phase profile; split it into non-negative and non-positive parts")
    total = float(v.sum())
    phi = np.sqrt(v / total).astype(np.complex128)
    return PhaseProfile(values=v, software_state=phi, alpha=total)


def apply_phase_profile(state: StateVector, values, mode: str = "exact_phase",
                        max_delta: float = DEFAULT_MAX_DELTA) -> StateVector:
    """Multiply amplitudes by ``e^{i values(x)}``, exactly or via protocol cycles."""
    v = np.asarray(values, dtype=float).reshape(-1)
    if v.shape[0] != state.dim:
        raise StateError(f"profile has {v.shape[0]} entries, state has {state.dim}")
    if mode == "exact_phase":
        return StateVector(state.n_qubits, state.amplitudes * np.exp(1j * v))
    if mode != "protocol_phase":
        raise ValueError(f"unknown phase mode {mode!r}; choose from {PHASE_MODES}")
    if np.all(v == 0):
        return state
    prof = profile_to_software_state(v)
    cycles = max(1, math.ceil(abs(prof.alpha) / max_delta))
    config = ProtocolConfig(alpha=prof.alpha, cycles=cycles, mode="postselected")
    return run_protocol(state, prof.software_state, config).final_state


# ----------------------------------------------------------------------------
# Evolution


def _check_state(state: StateVector, spec: HamiltonianSpec):
    if state.n_qubits != spec.n:
        raise StateError(f"state has {state.n_qubits} qubits, spec has {spec.n}")


def trotter_step(state: StateVector, spec: HamiltonianSpec, mode: str = "exact_phase",
                 max_delta: float = DEFAULT_MAX_DELTA, *, potential=None, kinetic=None) -> StateVector:
    """One step; ``potential``/``kinetic`` override the spec's profiles for this step only."""
    _check_state(state, spec)
    V = spec.potential if potential is None else np.asarray(potential, dtype=float)
    T = spec.kinetic if kinetic is None else np.asarray(kinetic, dtype=float)
    dt = spec.dt
    state = apply_phase_profile(state, -V * dt, mode, max_delta)
    state = qft(state)
    state = apply_phase_profile(state, -T * dt, mode, max_delta)
    return qft(state, inverse=True)


def evolve(state: StateVector, spec: HamiltonianSpec, mode: str = "exact_phase",
           max_delta: float = DEFAULT_MAX_DELTA,
           overrides: Optional[Sequence[tuple]] = None) -> StateVector:
    """``spec.steps`` Trotter steps.

    ``overrides`` optionally supplies a ``(potential, kinetic)`` pair per step;
    ``None`` entries fall back to the spec's profiles.
    """
    _check_state(state, spec)
    if overrides is not None and len(overrides) != spec.steps:
        raise StateError(f"got {len(overrides)} overrides for {spec.steps} steps")
    for k in range(spec.steps):
        V, T = overrides[k] if overrides is not None else (None, None)
        state = trotter_step(state, spec, mode, max_delta, potential=V, kinetic=T)
    return state


def exact_evolution(state: StateVector, spec: HamiltonianSpec) -> StateVector:
    """``e^{-i H t}|psi>`` from the eigendecomposition of the dense ``H``."""
    _check_state(state, spec)
    H = spec.matrix()
    w, vecs = np.linalg.eigh(0.5 * (H + H.conj().T))
    out = vecs @ (np.exp(-1j * w * spec.total_time) * (vecs.conj().T @ state.amplitudes))
    return StateVector(spec.n, out / np.linalg.norm(out))


def pure_state_distance(a, b) -> float:
    """Trace distance between pure states, ``sqrt(1 - |<a|b>|^2)``."""
    va = a.amplitudes if isinstance(a, StateVector) else np.asarray(a)
    vb = b.amplitudes if isinstance(b, StateVector) else np.asarray(b)
    f = abs(np.vdot(va, vb))
    return math.sqrt(max(0.0, 1.0 - f * f))


def trotter_error(state: StateVector, spec: HamiltonianSpec, mode: str = "exact_phase",
                  max_delta: float = DEFAULT_MAX_DELTA) -> float:
    """Distance between Trotter evolution and the exact propagator."""
    return pure_state_distance(evolve(state, spec, mode, max_delta), exact_evolution(state, spec))


def gaussian_state(n: int, center: float = 1.0, width: float = 1.0, momentum: float = 0.0) -> StateVector:
    x = position_grid(n)
    amps = np.exp(-((x - center) ** 2) / (2 * width**2) + 1j * momentum * x)
    return StateVector(n, amps / np.linalg.norm(amps))
