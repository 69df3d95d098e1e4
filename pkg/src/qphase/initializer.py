"""Initializer unitaries ``U`` with ``U|0> = |phi>``.

Only column 0 is fixed by the target state.  The other ``N - 1`` columns
decide which states the failure outcomes collapse to, so two completions are
offered: a single Householder reflection (the default) and a Gram-Schmidt
sweep over the computational basis.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np

from .statevector import StateError, StateVector, apply_register_matrix

Completion = Literal["householder", "gram_schmidt"]
COMPLETIONS: tuple[str, ...] = ("householder", "gram_schmidt")

_NORM_INPUT_TOL = 1e-9
_DEGENERATE_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class InitializerUnitary:
    n: int
    matrix: np.ndarray = field(repr=False)
    construction_tag: str

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def column(self, mu: int) -> np.ndarray:
        return column(self, mu)


def _validated_target(phi) -> tuple[int, np.ndarray]:
    v = np.asarray(phi.amplitudes if isinstance(phi, StateVector) else phi,
                   dtype=np.complex128).reshape(-1)
    N = v.shape[0]
    if N < 2 or N & (N - 1):
        raise StateError(f"target length {N} is not a power of two >= 2")
    norm = np.linalg.norm(v)
    if norm < 1e-12:
        raise StateError("target state is the zero vector")
    if abs(norm - 1.0) > _NORM_INPUT_TOL:
        raise StateError(f"target state is not normalized (norm={norm!r})")
    return N.bit_length() - 1, v


def householder_unitary(phi) -> InitializerUnitary:
    """One reflection sending ``e^{i theta}|0>`` to ``phi``, ``theta = arg phi(0)``.

    The reflection maps ``|0>`` to ``e^{-i theta} phi``; multiplying column 0 by
    ``e^{i theta}`` removes that phase so column 0 equals ``phi`` exactly.
    """
    n, v = _validated_target(phi)
    N = v.shape[0]
    theta = float(np.angle(v[0])) if abs(v[0]) > 0 else 0.0
    phase = np.exp(1j * theta)
    e0 = np.zeros(N, dtype=np.complex128)
    e0[0] = phase
    w = e0 - v
    wn = np.linalg.norm(w)
    if wn < _DEGENERATE_TOL:
        u = np.eye(N, dtype=np.complex128)
    else:
        w = w / wn
        u = np.eye(N, dtype=np.complex128) - 2.0 * np.outer(w, w.conj())
    u[:, 0] *= phase
    u[:, 0] = v  # exact, not merely to roundoff
    return InitializerUnitary(n=n, matrix=u, construction_tag="householder")


def gram_schmidt_unitary(phi) -> InitializerUnitary:
    """Orthonormalize ``[phi, |0>, |1>, ...]``, skipping the dependent vector."""
    n, v = _validated_target(phi)
    N = v.shape[0]
    cols = [v]
    for k in range(N):
        if len(cols) == N:
            break
        c = np.zeros(N, dtype=np.complex128)
        c[k] = 1.0
        # two passes of modified Gram-Schmidt for orthogonality at 1e-15
        for _ in range(2):
            for q in cols:
                c = c - np.vdot(q, c) * q
        cn = np.linalg.norm(c)
        if cn < 1e-8:
            continue
        cols.append(c / cn)
    if len(cols) != N:  # pragma: no cover - basis always spans
        raise StateError("Gram-Schmidt completion failed to span the space")
    return InitializerUnitary(n=n, matrix=np.column_stack(cols), construction_tag="gram_schmidt")


def make_initializer(phi, completion: str = "householder") -> InitializerUnitary:
    key = completion.replace("-", "_")
    if key == "householder":
        return householder_unitary(phi)
    if key == "gram_schmidt":
        return gram_schmidt_unitary(phi)
    raise ValueError(f"unknown completion {completion!r}; choose from {COMPLETIONS}")


def apply_initializer(state: StateVector, u: InitializerUnitary, register: Sequence[int],
                      adjoint: bool = False) -> StateVector:
    if len(tuple(register)) != u.n:
        raise StateError(f"register has {len(tuple(register))} qubits, initializer expects {u.n}")
    m = u.matrix.conj().T if adjoint else u.matrix
    return apply_register_matrix(state, m, register)


def column(u: InitializerUnitary, mu: int) -> np.ndarray:
    """The state ``phi_mu = U|mu>``."""
    if not 0 <= mu < u.dim:
        raise StateError(f"column index {mu} out of range for dimension {u.dim}")
    return u.matrix[:, mu].copy()
