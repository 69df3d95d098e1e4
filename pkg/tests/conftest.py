import numpy as np
import pytest


def rand_vec(rng, dim):
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


def aligned_gap(a, b):
    """Max elementwise difference after removing the relative global phase."""
    a = np.asarray(getattr(a, "amplitudes", a))
    b = np.asarray(getattr(b, "amplitudes", b))
    ov = np.vdot(a, b)
    ph = ov / abs(ov) if abs(ov) > 0 else 1.0
    return float(np.max(np.abs(a * ph - b)))


@pytest.fixture
def rng():
    return np.random.default_rng(2024)


@pytest.fixture
def demo_states():
    """Uniform primary state and linearly growing software state on 3 qubits."""
    x = np.arange(8)
    return np.full(8, 1 / np.sqrt(8), dtype=complex), (x / np.sqrt(140)).astype(complex)
