"""The entanglement-swapping game: settings, Bob's Bell measurement and the score.

Alice holds six dichotomic settings, Claire three, and Bob performs a full Bell
state measurement on the two middle qubits. The score couples each Bob outcome
``b`` to the twelve scored ``(x, z)`` pairs through a sign table; the game
weight for outcome string ``abc`` is ``sign(b, xz) * a * c``.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .quantum import (
    BELL_LABELS,
    Observable,
    ProjectiveMeasurement,
    QuantumError,
    QuantumState,
    bell_state,
    bell_vector,
    pauli,
    tensor,
)

SQRT2 = np.sqrt(2.0)
QUANTUM_BOUND = 6 * SQRT2
REAL_BOUND = 7.66
CLASSICAL_BOUND = 6.0
DEGENERATE_PROB = 1e-12

# three CHSH blocks: ZX, ZY and XY, in the order they are reported
CANONICAL_COMBOS: tuple[tuple[int, int], ...] = (
    (1, 1), (1, 2), (2, 1), (2, 2),
    (3, 1), (3, 3), (4, 1), (4, 3),
    (5, 2), (5, 3), (6, 2), (6, 3),
)
OUTCOMES = (1, -1)


class DegenerateOutcome(QuantumError):
    """Bob's outcome has (numerically) zero probability."""


@dataclass(frozen=True, eq=False)
class SettingsSpec:
    alice: tuple[Observable, ...]
    claire: tuple[Observable, ...]
    combos: tuple[tuple[int, int], ...] = CANONICAL_COMBOS

    def __post_init__(self) -> None:
        object.__setattr__(self, "alice", tuple(self.alice))
        object.__setattr__(self, "claire", tuple(self.claire))
        object.__setattr__(self, "combos", tuple((int(x), int(z)) for x, z in self.combos))
        if len(set(self.combos)) != len(self.combos):
            raise ValueError("duplicate (x, z) combinations")
        for x, z in self.combos:
            if not (1 <= x <= len(self.alice) and 1 <= z <= len(self.claire)):
                raise ValueError(f"combo {(x, z)} out of range")
        for obs in self.alice + self.claire:
            if not obs.is_dichotomic():
                raise ValueError("all settings must be dichotomic observables")

    def pair(self, k: int) -> tuple[Observable, Observable]:
        x, z = self.combos[k]
        return self.alice[x - 1], self.claire[z - 1]


def build_settings() -> SettingsSpec:
    Z, X, Y = pauli("Z"), pauli("X"), pauli("Y")
    alice = (
        (Z + X) / SQRT2, (Z - X) / SQRT2,
        (Z + Y) / SQRT2, (Z - Y) / SQRT2,
        (X + Y) / SQRT2, (X - Y) / SQRT2,
    )
    return SettingsSpec(alice=alice, claire=(Z, X, Y), combos=CANONICAL_COMBOS)


def bsm_measurement() -> ProjectiveMeasurement:
    projs = []
    for label in BELL_LABELS:
        v = bell_vector(label)
        projs.append(np.outer(v, v.conj()))
    return ProjectiveMeasurement(BELL_LABELS, tuple(projs))


def dephase(matrix: np.ndarray) -> np.ndarray:
    """Drop every off-diagonal element in the computational product basis."""
    return np.diag(np.diag(matrix))


def _unnormalised_conditionals(
    rho1: QuantumState,
    rho2: QuantumState,
    bob: ProjectiveMeasurement,
    dims: Sequence[int],
) -> list[np.ndarray]:
    """Tr_B[(1 x P_b x 1)(rho1 x rho2)] for every Bob outcome, on Alice x Claire."""
    dA, dB1, dB2, dC = dims
    if rho1.dim != dA * dB1 or rho2.dim != dB2 * dC or bob.dim != dB1 * dB2:
        raise QuantumError(f"dimensions do not match dims={tuple(dims)}")
    r1 = rho1.matrix.reshape(dA, dB1, dA, dB1)
    r2 = rho2.matrix.reshape(dB2, dC, dB2, dC)
    out = []
    for P in bob.projectors:
        p = P.reshape(dB1, dB2, dB1, dB2)
        # sigma[a,c,a',c'] = sum rho1[a,i,a',k] rho2[j,c,l,c'] P[k,l,i,j]
        sigma = np.einsum("aibk,jcld,klij->acbd", r1, r2, p, optimize=True)
        out.append(sigma.reshape(dA * dC, dA * dC))
    return out


def conditional_state(
    rho1: QuantumState,
    rho2: QuantumState,
    b: str,
    visibility: float = 1.0,
) -> tuple[QuantumState, float]:
    """Alice-Claire state after Bob obtains Bell outcome ``b``, and its probability.

    With ``visibility < 1`` the swap is a mixture of the ideal projection and a
    distinguishable-photon event that only keeps computational-basis correlations.
    """
    if b not in BELL_LABELS:
        raise QuantumError(f"unknown Bell outcome {b!r}")
    if not 0.0 <= visibility <= 1.0:
        raise ValueError(f"visibility must lie in [0, 1], got {visibility}")
    bob = bsm_measurement()
    sigma = _unnormalised_conditionals(rho1, rho2, bob, (2, 2, 2, 2))[BELL_LABELS.index(b)]
    prob = float(np.trace(sigma).real)
    if prob < DEGENERATE_PROB:
        raise DegenerateOutcome(f"outcome {b} has probability {prob:.3g}")
    sigma = visibility * sigma + (1 - visibility) * dephase(sigma)
    sigma = sigma / prob
    return QuantumState((sigma + sigma.conj().T) / 2), prob


@dataclass(frozen=True, eq=False)
class SignTable:
    """+-1 coupling of Bob's outcome to each scored (x, z) pair."""

    signs: np.ndarray  # shape (n_outcomes, n_combos)
    combos: tuple[tuple[int, int], ...] = CANONICAL_COMBOS
    outcomes: tuple[str, ...] = BELL_LABELS

    def __post_init__(self) -> None:
        s = np.array(self.signs, dtype=int)
        if s.shape != (len(self.outcomes), len(self.combos)):
            raise ValueError(f"sign array shape {s.shape} does not match outcomes x combos")
        if not np.all(np.abs(s) == 1):
            raise ValueError("signs must be +1 or -1")
        s.setflags(write=False)
        object.__setattr__(self, "signs", s)
        object.__setattr__(self, "combos", tuple(tuple(c) for c in self.combos))
        object.__setattr__(self, "outcomes", tuple(self.outcomes))

    def sign(self, b: str, combo: tuple[int, int]) -> int:
        return int(self.signs[self.outcomes.index(b), self.combos.index(tuple(combo))])


def derive_sign_table(settings: SettingsSpec | None = None) -> SignTable:
    """Signs of the ideal conditional correlators on two exact EPR pairs."""
    settings = settings or build_settings()
    phi = bell_state("Phi+")
    signs = np.zeros((len(BELL_LABELS), len(settings.combos)), dtype=int)
    total = np.zeros(len(BELL_LABELS))
    for i, b in enumerate(BELL_LABELS):
        rho_ac, _ = conditional_state(phi, phi, b)
        for k in range(len(settings.combos)):
            A, C = settings.pair(k)
            e = float(np.trace(rho_ac.matrix @ tensor(A, C).matrix).real)
            if abs(e) < 0.5:
                raise ValueError(
                    f"ideal correlator for combo {settings.combos[k]} and outcome {b} is {e:.3g}; "
                    "the combination list cannot reach the quantum maximum"
                )
            signs[i, k] = 1 if e > 0 else -1
            total[i] += abs(e)
    expected = len(settings.combos) / SQRT2
    if np.max(np.abs(total - expected)) > 1e-9:
        raise ValueError(f"signed correlator sums {total} differ from {expected}")
    return SignTable(signs, settings.combos, BELL_LABELS)


@dataclass(frozen=True, eq=False)
class ProbabilityMatrix:
    """p(a, b, c | x, z), stored as shape (n_combos, 2, n_b, 2) with a, c in (+1, -1)."""

    probs: np.ndarray
    combos: tuple[tuple[int, int], ...] = CANONICAL_COMBOS
    outcomes: tuple[str, ...] = BELL_LABELS
    degenerate: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        p = np.array(self.probs, dtype=float)
        if p.shape != (len(self.combos), 2, len(self.outcomes), 2):
            raise ValueError(f"probability array has shape {p.shape}")
        if p.min() < -1e-12:
            raise ValueError("negative probability")
        rows = p.reshape(len(self.combos), -1).sum(axis=1)
        if np.max(np.abs(rows - 1)) > 1e-9:
            raise ValueError(f"rows do not sum to one: {rows}")
        p = np.clip(p, 0.0, None)
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    @property
    def matrix(self) -> np.ndarray:
        """12 x 16 view; columns ordered a (major), b, c."""
        return self.probs.reshape(len(self.combos), -1)

    def column_labels(self) -> list[str]:
        nb = len(self.outcomes)
        width = max(1, int(np.ceil(np.log2(nb))))
        labels = []
        for ia, ib, ic in itertools.product(range(2), range(nb), range(2)):
            labels.append(f"{ia}{ib:0{width}b}{ic}")
        return labels

    def row_labels(self) -> list[str]:
        return [f"{x}{z}" for x, z in self.combos]

    def bob_marginal(self) -> np.ndarray:
        """p(b | x, z), shape (n_combos, n_b)."""
        return self.probs.sum(axis=(1, 3))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["xz", *self.column_labels()])
        for label, row in zip(self.row_labels(), self.matrix):
            w.writerow([label, *(f"{v:.10f}" for v in row)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, outcomes: tuple[str, ...] = BELL_LABELS) -> "ProbabilityMatrix":
        rows = list(csv.reader(io.StringIO(text)))
        combos = tuple((int(r[0][0]), int(r[0][1:])) for r in rows[1:])
        values = np.array([[float(v) for v in r[1:]] for r in rows[1:]])
        return cls(values.reshape(len(combos), 2, len(outcomes), 2), combos, outcomes)

    def mix(self, other: "ProbabilityMatrix", weight: float) -> "ProbabilityMatrix":
        """Convex combination ``weight * self + (1 - weight) * other``."""
        return ProbabilityMatrix(weight * self.probs + (1 - weight) * other.probs, self.combos, self.outcomes)


def probability_matrix(
    rho1: QuantumState,
    rho2: QuantumState,
    settings: SettingsSpec | None = None,
    *,
    bob: ProjectiveMeasurement | None = None,
    dims: Sequence[int] | None = None,
    visibility: float = 1.0,
) -> ProbabilityMatrix:
    """Joint outcome distribution for every scored setting pair.

    By default Bob performs the ideal Bell measurement on two qubits; a general
    projective ``bob`` with explicit ``dims = (dA, dB1, dB2, dC)`` is accepted
    for strategies of other dimensions.
    """
    settings = settings or build_settings()
    if bob is None:
        bob = bsm_measurement()
    if dims is None:
        dims = (2, 2, 2, 2)
    if not 0.0 <= visibility <= 1.0:
        raise ValueError(f"visibility must lie in [0, 1], got {visibility}")
    sigmas = _unnormalised_conditionals(rho1, rho2, bob, dims)
    degenerate = []
    for label, s in zip(bob.outcomes, sigmas):
        if np.trace(s).real < DEGENERATE_PROB:
            degenerate.append(label)
    if visibility < 1.0:
        sigmas = [visibility * s + (1 - visibility) * dephase(s) for s in sigmas]
    probs = np.zeros((len(settings.combos), 2, len(bob.outcomes), 2))
    for k in range(len(settings.combos)):
        A, C = settings.pair(k)
        pa = A.eigenprojectors()
        pc = C.eigenprojectors()
        for ia, ic in itertools.product(range(2), range(2)):
            effect = np.kron(pa[ia], pc[ic])
            for ib, s in enumerate(sigmas):
                probs[k, ia, ib, ic] = np.trace(effect @ s).real
    return ProbabilityMatrix(probs, settings.combos, tuple(bob.outcomes), tuple(degenerate))


@dataclass(frozen=True)
class GameScore:
    per_b: dict[str, float]
    total: float
    p_b: dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"per_b": dict(self.per_b), "p_b": dict(self.p_b), "total": self.total}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _ac_products() -> np.ndarray:
    ac = np.outer(OUTCOMES, OUTCOMES).astype(float)
    return ac  # ac[ia, ic] = a * c


def score(pm: ProbabilityMatrix, signs: SignTable | None = None) -> GameScore:
    signs = signs or derive_sign_table()
    if pm.combos != signs.combos or pm.outcomes != signs.outcomes:
        raise ValueError("probability matrix and sign table index different combos/outcomes")
    ac = _ac_products()
    # joint[k, b] = sum_{a,c} a c p(a b c | xz_k)
    joint = np.einsum("kabc,ac->kb", pm.probs, ac)
    weights = signs.signs.T  # (k, b)
    total = float(np.sum(weights * joint))
    pb = pm.bob_marginal()
    per_b = {}
    with np.errstate(invalid="ignore", divide="ignore"):
        cond = np.where(pb > 0, joint / pb, np.nan)
    for ib, label in enumerate(pm.outcomes):
        per_b[label] = float(np.sum(weights[:, ib] * cond[:, ib]))
    p_b = {label: float(pb[:, ib].mean()) for ib, label in enumerate(pm.outcomes)}
    return GameScore(per_b=per_b, total=total, p_b=p_b)


def strategy_value(signs: SignTable, b: int, a_map: Sequence[int], c_map: Sequence[int]) -> float:
    """Score of a deterministic local strategy with Bob always answering outcome index ``b``."""
    return float(sum(s * a_map[x - 1] * c_map[z - 1] for s, (x, z) in zip(signs.signs[b], signs.combos)))


def classical_max(signs: SignTable | None = None) -> float:
    """Exhaustive maximum over deterministic local strategies."""
    signs = signs or derive_sign_table()
    nx = max(x for x, _ in signs.combos)
    nz = max(z for _, z in signs.combos)
    a_maps = np.array(list(itertools.product(OUTCOMES, repeat=nx)))
    c_maps = np.array(list(itertools.product(OUTCOMES, repeat=nz)))
    xs = np.array([x - 1 for x, _ in signs.combos])
    zs = np.array([z - 1 for _, z in signs.combos])
    # values[b, i, j] = sum_k sign[b, k] a_i(x_k) c_j(z_k)
    values = np.einsum("bk,ik,jk->bij", signs.signs, a_maps[:, xs], c_maps[:, zs])
    return float(values.max())
