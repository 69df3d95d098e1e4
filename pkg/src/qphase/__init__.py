"""Statevector simulation of programmable phase transformations.

A primary register ``psi`` picks up the phase profile ``e^{i alpha |phi(x)|^2}``
by consuming copies of a software state ``phi`` in short, post-selected
cycles.  See :mod:`qphase.protocol` for the cycle and its outcome law.
"""
from .statevector import (
    CNOT0,
    DensityMatrix,
    MultiControlledPhase,
    RegisterLayout,
    SingleQubitGate,
    StateError,
    StateVector,
    apply_gate,
    basis_state,
    fidelity_up_to_global_phase,
    from_amplitudes,
    marginal_probabilities,
    measure_subregister,
    qft,
    reduced_density_matrix,
)
from .partial_phase import (
    apply_circuit,
    apply_partial_phase_direct,
    build_partial_phase_circuit,
    dense_operator,
)
from .initializer import apply_initializer, gram_schmidt_unitary, householder_unitary
from .protocol import (
    ProtocolConfig,
    exact_failure_state,
    exact_outcome_distribution,
    exact_postselected_state,
    exact_success_probability,
    run_cycle,
    run_protocol,
)
from .fitting import FitParams, fit_success_curve, model_eval

__version__ = "0.1.0"
