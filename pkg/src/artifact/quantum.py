"""Dense finite-dimensional states, observables and projective measurements.

Subsystem order used throughout the package is (Alice, Bob-left, Bob-right,
Claire); Kronecker products nest left to right.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10
POSITIVITY_TOL = 1e-10
DICHOTOMIC_TOL = 1e-8
PROJECTOR_TOL = 1e-9

BELL_LABELS = ("Phi+", "Psi+", "Phi-", "Psi-")

_PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

_S = 1 / np.sqrt(2)
_BELL_VECTORS = {
    "Phi+": np.array([_S, 0, 0, _S], dtype=complex),
    "Psi+": np.array([0, _S, _S, 0], dtype=complex),
    "Phi-": np.array([_S, 0, 0, -_S], dtype=complex),
    "Psi-": np.array([0, _S, -_S, 0], dtype=complex),
}


class QuantumError(ValueError):
    """Invalid quantum object or incompatible arguments."""


def _square(matrix, name: str) -> np.ndarray:
    m = np.array(matrix, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
        raise QuantumError(f"{name} must be a non-empty square matrix, got shape {m.shape}")
    m.setflags(write=False)
    return m


def _check_hermitian(m: np.ndarray, name: str, tol: float = HERMITIAN_TOL) -> None:
    err = np.max(np.abs(m - m.conj().T))
    if err > tol:
        raise QuantumError(f"{name} is not Hermitian (max deviation {err:.3g})")


@dataclass(frozen=True, eq=False)
class QuantumState:
    """Density matrix, validated once on construction."""

    matrix: np.ndarray

    def __post_init__(self) -> None:
        m = _square(self.matrix, "density matrix")
        _check_hermitian(m, "density matrix")
        tr = np.trace(m)
        if abs(tr - 1) > TRACE_TOL:
            raise QuantumError(f"density matrix has trace {tr.real:.12g}, expected 1")
        min_eig = np.linalg.eigvalsh(m).min()
        if min_eig < -POSITIVITY_TOL:
            raise QuantumError(f"density matrix has negative eigenvalue {min_eig:.3g}")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def from_vector(cls, psi) -> "QuantumState":
        v = np.asarray(psi, dtype=complex).ravel()
        norm = np.linalg.norm(v)
        if norm == 0:
            raise QuantumError("zero state vector")
        v = v / norm
        return cls(np.outer(v, v.conj()))

    @classmethod
    def maximally_mixed(cls, dim: int) -> "QuantumState":
        return cls(np.eye(dim, dtype=complex) / dim)

    def is_pure(self, tol: float = 1e-9) -> bool:
        return abs(np.trace(self.matrix @ self.matrix).real - 1) < tol

    def pure_vector(self) -> np.ndarray:
        """State vector of a rank-1 density matrix (global phase fixed by the largest entry)."""
        if not self.is_pure():
            raise QuantumError("state is not pure")
        w, v = np.linalg.eigh(self.matrix)
        psi = v[:, -1]
        k = np.argmax(np.abs(psi))
        return psi * np.exp(-1j * np.angle(psi[k]))


@dataclass(frozen=True, eq=False)
class Observable:
    matrix: np.ndarray

    def __post_init__(self) -> None:
        m = _square(self.matrix, "observable")
        _check_hermitian(m, "observable")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def is_dichotomic(self, tol: float = DICHOTOMIC_TOL) -> bool:
        eig = np.linalg.eigvalsh(self.matrix)
        return bool(np.all(np.minimum(np.abs(eig - 1), np.abs(eig + 1)) < tol))

    def eigenprojectors(self) -> tuple[np.ndarray, np.ndarray]:
        """Projectors onto the +1 and -1 eigenspaces of a dichotomic observable."""
        if not self.is_dichotomic():
            raise QuantumError("observable is not dichotomic (eigenvalues must be +-1)")
        eye = np.eye(self.dim)
        return (eye + self.matrix) / 2, (eye - self.matrix) / 2

    def __add__(self, other: "Observable") -> "Observable":
        return Observable(self.matrix + other.matrix)

    def __sub__(self, other: "Observable") -> "Observable":
        return Observable(self.matrix - other.matrix)

    def __mul__(self, k: float) -> "Observable":
        return Observable(self.matrix * k)

    __rmul__ = __mul__

    def __truediv__(self, k: float) -> "Observable":
        return Observable(self.matrix / k)


@dataclass(frozen=True, eq=False)
class ProjectiveMeasurement:
    outcomes: tuple
    projectors: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        projs = tuple(_square(p, "projector") for p in self.projectors)
        if len(projs) != len(self.outcomes) or not projs:
            raise QuantumError("need one projector per outcome")
        d = projs[0].shape[0]
        if any(p.shape != (d, d) for p in projs):
            raise QuantumError("projectors have inconsistent dimensions")
        for label, p in zip(self.outcomes, projs):
            _check_hermitian(p, f"projector {label}", PROJECTOR_TOL)
            if np.max(np.abs(p @ p - p)) > PROJECTOR_TOL:
                raise QuantumError(f"projector {label} is not idempotent")
        if np.max(np.abs(sum(projs) - np.eye(d))) > PROJECTOR_TOL:
            raise QuantumError("projectors do not sum to identity")
        for i in range(len(projs)):
            for j in range(i + 1, len(projs)):
                if np.max(np.abs(projs[i] @ projs[j])) > PROJECTOR_TOL:
                    raise QuantumError(
                        f"projectors {self.outcomes[i]} and {self.outcomes[j]} are not orthogonal"
                    )
        object.__setattr__(self, "outcomes", tuple(self.outcomes))
        object.__setattr__(self, "projectors", projs)

    @property
    def dim(self) -> int:
        return self.projectors[0].shape[0]

    def __getitem__(self, label) -> np.ndarray:
        return self.projectors[self.outcomes.index(label)]


def pauli(label: str) -> Observable:
    try:
        return Observable(_PAULI[label])
    except KeyError:
        raise QuantumError(f"unknown Pauli label {label!r}; expected one of I, X, Y, Z") from None


def bell_vector(label: str) -> np.ndarray:
    try:
        return _BELL_VECTORS[label].copy()
    except KeyError:
        raise QuantumError(f"unknown Bell state {label!r}; expected one of {BELL_LABELS}") from None


def bell_state(label: str) -> QuantumState:
    return QuantumState.from_vector(bell_vector(label))


def tensor(a, b):
    """Kronecker product of two states or two observables."""
    if isinstance(a, QuantumState) and isinstance(b, QuantumState):
        return QuantumState(np.kron(a.matrix, b.matrix))
    if isinstance(a, Observable) and isinstance(b, Observable):
        return Observable(np.kron(a.matrix, b.matrix))
    raise QuantumError(f"cannot tensor {type(a).__name__} with {type(b).__name__}")


def _partial_trace_matrix(m: np.ndarray, keep: Sequence[int], dims: Sequence[int]) -> np.ndarray:
    n = len(dims)
    t = m.reshape(tuple(dims) * 2)
    traced = [i for i in range(n) if i not in keep]
    # trace out from the highest index so remaining axis positions stay valid
    for count, i in enumerate(sorted(traced, reverse=True)):
        remaining = n - count
        t = np.trace(t, axis1=i, axis2=i + remaining)
    kept = int(np.prod([dims[i] for i in sorted(keep)]))
    return t.reshape(kept, kept)


def partial_trace(state: QuantumState, keep: Sequence[int], dims: Sequence[int]) -> QuantumState:
    keep = sorted(set(int(k) for k in keep))
    dims = [int(d) for d in dims]
    if not keep:
        raise QuantumError("keep must be non-empty")
    if int(np.prod(dims)) != state.dim:
        raise QuantumError(f"dims {dims} do not multiply to state dimension {state.dim}")
    if keep[0] < 0 or keep[-1] >= len(dims):
        raise QuantumError(f"keep {keep} out of range for {len(dims)} subsystems")
    return QuantumState(_partial_trace_matrix(state.matrix, keep, dims))


def expectation(state: QuantumState, obs: Observable) -> float:
    if state.dim != obs.dim:
        raise QuantumError(f"dimension mismatch: state {state.dim}, observable {obs.dim}")
    value = np.trace(state.matrix @ obs.matrix)
    if abs(value.imag) > 1e-10:
        raise QuantumError(f"expectation has imaginary part {value.imag:.3g}")
    return float(value.real)


def born_probs(state: QuantumState, m: ProjectiveMeasurement) -> np.ndarray:
    if state.dim != m.dim:
        raise QuantumError(f"dimension mismatch: state {state.dim}, measurement {m.dim}")
    p = np.array([np.trace(P @ state.matrix).real for P in m.projectors])
    # round-off can leave tiny negatives
    return np.clip(p, 0.0, None)


def fidelity(state: QuantumState, target: QuantumState) -> float:
    """Overlap <psi|rho|psi> with a pure target state."""
    if state.dim != target.dim:
        raise QuantumError(f"dimension mismatch: {state.dim} vs {target.dim}")
    if not target.is_pure():
        raise QuantumError("fidelity target must be a pure state")
    psi = target.pure_vector()
    return float(np.clip(np.vdot(psi, state.matrix @ psi).real, 0.0, 1.0))


def computational_projectors(dim: int) -> ProjectiveMeasurement:
    eye = np.eye(dim, dtype=complex)
    return ProjectiveMeasurement(tuple(range(dim)), tuple(np.outer(eye[k], eye[k]) for k in range(dim)))
