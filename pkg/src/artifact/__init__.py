"""Simulation and analysis toolkit for a three-party entanglement-swapping test of real versus complex quantum theory."""

from .game import CLASSICAL_BOUND, QUANTUM_BOUND, REAL_BOUND, derive_sign_table, probability_matrix, score
from .noise import NoiseParams, closed_form_score, p_from_fidelity, predicted_score, werner
from .quantum import Observable, ProjectiveMeasurement, QuantumState, bell_state, pauli

__version__ = "0.1.0"

__all__ = [
    "CLASSICAL_BOUND",
    "QUANTUM_BOUND",
    "REAL_BOUND",
    "NoiseParams",
    "Observable",
    "ProjectiveMeasurement",
    "QuantumState",
    "bell_state",
    "closed_form_score",
    "derive_sign_table",
    "p_from_fidelity",
    "pauli",
    "predicted_score",
    "probability_matrix",
    "score",
    "werner",
]
