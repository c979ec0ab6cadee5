"""Calibrated imperfections: Werner sources, finite BSM visibility, setting flips."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .game import (
    GameScore,
    ProbabilityMatrix,
    SettingsSpec,
    SignTable,
    build_settings,
    conditional_state,
    derive_sign_table,
    probability_matrix,
    score,
)
from .quantum import QuantumState, bell_state

# source fidelities and HOM visibility reported for the experiment
REPORTED_FIDELITY_S1 = 0.9852
REPORTED_FIDELITY_S2 = 0.9892
REPORTED_VISIBILITY = 0.943


def werner(p: float) -> QuantumState:
    """p |Phi+><Phi+| + (1 - p) I/4."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"Werner parameter must lie in [0, 1], got {p}")
    return QuantumState(p * bell_state("Phi+").matrix + (1 - p) * np.eye(4) / 4)


def p_from_fidelity(f: float) -> float:
    """Werner parameter with fidelity ``f`` to Phi+ (inverts F = p + (1 - p)/4)."""
    if not 0.25 <= f <= 1.0:
        raise ValueError(f"fidelity {f} is outside the Werner range [0.25, 1]")
    return (4 * f - 1) / 3


@dataclass(frozen=True)
class NoiseParams:
    p1: float = 1.0
    p2: float = 1.0
    v_bsm: float = 1.0
    f_setting: float = 1.0
    # optional per-setting flip probabilities, overriding the symmetric 1 - f_setting
    alice_flips: tuple[float, ...] | None = None
    claire_flips: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        for name in ("p1", "p2", "v_bsm"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if not 0.5 <= self.f_setting <= 1.0:
            raise ValueError(f"f_setting must lie in [0.5, 1], got {self.f_setting}")
        for name in ("alice_flips", "claire_flips"):
            flips = getattr(self, name)
            if flips is not None:
                flips = tuple(float(q) for q in flips)
                if any(not 0.0 <= q <= 0.5 for q in flips):
                    raise ValueError(f"{name} entries must lie in [0, 0.5]")
                object.__setattr__(self, name, flips)

    @classmethod
    def from_fidelities(cls, f1: float, f2: float, v_bsm: float, f_setting: float = 1.0) -> "NoiseParams":
        return cls(p_from_fidelity(f1), p_from_fidelity(f2), v_bsm, f_setting)

    @classmethod
    def calibrated(cls) -> "NoiseParams":
        return cls.from_fidelities(REPORTED_FIDELITY_S1, REPORTED_FIDELITY_S2, REPORTED_VISIBILITY)


def noisy_conditional_state(
    rho1: QuantumState, rho2: QuantumState, b: str, v: float
) -> tuple[QuantumState, float]:
    """Swapped Alice-Claire state when the interfering photons are only partly indistinguishable.

    With weight ``1 - v`` Bob's detectors effectively resolve H/V only, so the
    Alice-Claire state keeps computational-basis correlations and loses its
    coherences.
    """
    return conditional_state(rho1, rho2, b, visibility=v)


def apply_outcome_flips(
    pm: ProbabilityMatrix,
    alice_flip: float | Sequence[float],
    claire_flip: float | Sequence[float],
    n_alice: int = 6,
    n_claire: int = 3,
) -> ProbabilityMatrix:
    """Flip Alice's and Claire's outcomes independently, per setting if sequences are given."""
    qa = np.broadcast_to(np.asarray(alice_flip, dtype=float), (n_alice,))
    qc = np.broadcast_to(np.asarray(claire_flip, dtype=float), (n_claire,))
    probs = np.array(pm.probs)
    for k, (x, z) in enumerate(pm.combos):
        a, c = qa[x - 1], qc[z - 1]
        row = probs[k]
        row = (1 - a) * row + a * row[::-1, :, :]
        row = (1 - c) * row + c * row[:, :, ::-1]
        probs[k] = row
    return ProbabilityMatrix(probs, pm.combos, pm.outcomes)


def noisy_probability_matrix(np_: NoiseParams, settings: SettingsSpec | None = None) -> ProbabilityMatrix:
    settings = settings or build_settings()
    pm = probability_matrix(werner(np_.p1), werner(np_.p2), settings, visibility=np_.v_bsm)
    qa = np_.alice_flips if np_.alice_flips is not None else 1 - np_.f_setting
    qc = np_.claire_flips if np_.claire_flips is not None else 1 - np_.f_setting
    if np.any(np.asarray(qa) > 0) or np.any(np.asarray(qc) > 0):
        pm = apply_outcome_flips(pm, qa, qc, len(settings.alice), len(settings.claire))
    return pm


def predicted_score(np_: NoiseParams, signs: SignTable | None = None) -> GameScore:
    return score(noisy_probability_matrix(np_), signs or derive_sign_table())


def closed_form_score(p1: float, p2: float, v: float, f_setting: float = 1.0) -> float:
    """p1 p2 (4 + 8 v) / sqrt(2) (2 f - 1)^2: four Z-Z terms survive, eight X/Y terms scale with v."""
    return p1 * p2 * (4 + 8 * v) / np.sqrt(2) * (2 * f_setting - 1) ** 2
