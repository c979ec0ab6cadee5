"""Two-qubit Pauli-basis tomography: simulated counts, linear inversion, MLE and bootstrap."""

from __future__ import annotations

import csv
import io
import itertools
import json
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .quantum import QuantumState, fidelity, pauli

BASES = ("X", "Y", "Z")
PAIRS = tuple(itertools.product(BASES, BASES))
NONPHYSICAL_TOL = 1e-6


class TomographyError(ValueError):
    pass


def _basis_projectors(label: str) -> tuple[np.ndarray, np.ndarray]:
    p = pauli(label).matrix
    eye = np.eye(2)
    return (eye + p) / 2, (eye - p) / 2


def _effects() -> dict[tuple[str, str], list[np.ndarray]]:
    """Four product projectors per basis pair, ordered (++, +-, -+, --)."""
    out = {}
    for i, j in PAIRS:
        pi, pj = _basis_projectors(i), _basis_projectors(j)
        out[(i, j)] = [np.kron(pi[a], pj[c]) for a in range(2) for c in range(2)]
    return out


EFFECTS = _effects()


@dataclass(frozen=True, eq=False)
class CountsByBasis:
    """Four outcome counts (++, +-, -+, --) for each Pauli basis pair."""

    counts: Mapping[tuple[str, str], np.ndarray]

    def __post_init__(self) -> None:
        cleaned = {}
        for key, v in self.counts.items():
            arr = np.asarray(v, dtype=float)
            if arr.shape != (4,) or np.any(arr < 0):
                raise TomographyError(f"counts for basis {key} must be four non-negative numbers")
            cleaned[tuple(key)] = arr
        object.__setattr__(self, "counts", cleaned)

    def require_complete(self) -> None:
        missing = [k for k in PAIRS if k not in self.counts]
        if missing:
            raise TomographyError(f"missing bases: {missing}")
        empty = [k for k in PAIRS if self.counts[k].sum() == 0]
        if empty:
            raise TomographyError(f"bases with zero total counts: {empty}")

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["basis_i", "basis_j", "n_pp", "n_pm", "n_mp", "n_mm"])
        for (i, j), v in self.counts.items():
            w.writerow([i, j, *(f"{x:g}" for x in v)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "CountsByBasis":
        rows = list(csv.DictReader(io.StringIO(text)))
        return cls({(r["basis_i"], r["basis_j"]): [float(r[k]) for k in ("n_pp", "n_pm", "n_mp", "n_mm")] for r in rows})


def exact_probabilities(rho: QuantumState) -> CountsByBasis:
    """Born probabilities in place of counts (noiseless input)."""
    return CountsByBasis({k: [np.trace(e @ rho.matrix).real for e in EFFECTS[k]] for k in PAIRS})


def simulate_counts(rho: QuantumState, n_per_basis: int, seed: int | np.random.Generator = 0) -> CountsByBasis:
    if n_per_basis < 0:
        raise ValueError("n_per_basis must be non-negative")
    if rho.dim != 4:
        raise TomographyError("two-qubit state required")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    out = {}
    for k in PAIRS:
        p = np.clip([np.trace(e @ rho.matrix).real for e in EFFECTS[k]], 0, None)
        out[k] = rng.multinomial(n_per_basis, p / p.sum())
    return CountsByBasis(out)


@dataclass(frozen=True, eq=False)
class ReconstructedState:
    matrix: np.ndarray
    method: str
    nonphysical: bool = False
    loglik: float | None = None
    converged: bool = True
    iterations: int = 0
    loglik_trace: tuple[float, ...] = ()

    @property
    def state(self) -> QuantumState:
        return QuantumState(self.matrix)

    def to_json(self) -> str:
        m = np.asarray(self.matrix)
        return json.dumps(
            {
                "method": self.method,
                "nonphysical": self.nonphysical,
                "loglik": self.loglik,
                "real": m.real.tolist(),
                "imag": m.imag.tolist(),
            },
            indent=2,
        )


def _frequencies(counts: CountsByBasis) -> dict[tuple[str, str], np.ndarray]:
    return {k: counts.counts[k] / counts.counts[k].sum() for k in PAIRS}


def linear_inversion(counts: CountsByBasis) -> ReconstructedState:
    """rho = sum_ij E_ij s_i (x) s_j / 4, single-qubit terms averaged over the bases that fix them.

    Negative eigenvalues are reported through ``nonphysical``, never removed.
    """
    counts.require_complete()
    freq = _frequencies(counts)
    sa = np.array([1, 1, -1, -1])
    sc = np.array([1, -1, 1, -1])
    labels = ("I",) + BASES
    rho = np.zeros((4, 4), dtype=complex)
    for i in labels:
        for j in labels:
            if i == "I" and j == "I":
                e = 1.0
            elif i == "I":
                e = np.mean([freq[(k, j)] @ sc for k in BASES])
            elif j == "I":
                e = np.mean([freq[(i, k)] @ sa for k in BASES])
            else:
                e = freq[(i, j)] @ (sa * sc)
            rho += e * np.kron(pauli(i).matrix, pauli(j).matrix) / 4
    rho = (rho + rho.conj().T) / 2
    min_eig = np.linalg.eigvalsh(rho).min()
    return ReconstructedState(rho, "linear", nonphysical=bool(min_eig < -NONPHYSICAL_TOL))


EFFECT_STACK = np.array([e for k in PAIRS for e in EFFECTS[k]])  # (36, 4, 4)


def _probs(rho: np.ndarray) -> np.ndarray:
    return np.einsum("kij,ji->k", EFFECT_STACK, rho).real


def _loglik(rho: np.ndarray, n: np.ndarray) -> float:
    mask = n > 0
    return float(np.sum(n[mask] * np.log(np.maximum(_probs(rho)[mask], 1e-300))))


def mle_reconstruct(
    counts: CountsByBasis,
    max_iters: int = 20000,
    tol: float = 1e-12,
) -> ReconstructedState:
    """R rho R fixed-point iteration from the maximally mixed state.

    A step that lowers the likelihood is damped (mixed with the current
    estimate, halving the step) until it no longer does. Stops once the
    log-likelihood gain per iteration drops below ``tol`` per count.
    """
    counts.require_complete()
    n = np.concatenate([counts.counts[k] for k in PAIRS])
    # every basis is a complete measurement: weight its frequencies equally
    f = np.concatenate([counts.counts[k] / counts.counts[k].sum() for k in PAIRS]) / len(PAIRS)
    scale = n.sum()
    rho = np.eye(4, dtype=complex) / 4
    ll = _loglik(rho, n)
    trace = [ll]
    converged = False
    it = 0
    for it in range(1, max_iters + 1):
        p = _probs(rho)
        weights = np.where(f > 0, f / np.maximum(p, 1e-300), 0.0)
        r = np.einsum("k,kij->ij", weights, EFFECT_STACK)
        full = r @ rho @ r
        full = full / np.trace(full).real
        new, new_ll = full, _loglik(full, n)
        damping = 0.5
        while new_ll < ll - 1e-9 * scale and damping > 1e-6:
            new = (1 - damping) * rho + damping * full
            new_ll = _loglik(new, n)
            damping /= 2
        if new_ll < ll - 1e-9 * scale:
            break
        gain = new_ll - ll
        rho, ll = (new + new.conj().T) / 2, new_ll
        trace.append(ll)
        if gain < tol * scale:
            converged = True
            break
    return ReconstructedState(
        rho, "mle", nonphysical=False, loglik=ll, converged=converged, iterations=it, loglik_trace=tuple(trace)
    )


@dataclass(frozen=True)
class FidelityEstimate:
    fidelity: float
    sigma: float
    used: int
    excluded: int


def fidelity_with_error(
    counts: CountsByBasis,
    target: QuantumState,
    boots: int = 100,
    seed: int = 0,
    max_iters: int = 20000,
    tol: float = 1e-12,
) -> FidelityEstimate:
    """Mean and spread of the MLE fidelity over Poisson resamples of the counts."""
    if boots < 2:
        raise ValueError("boots must be at least 2")
    children = np.random.SeedSequence(seed).spawn(boots)
    values = []
    excluded = 0
    for child in children:
        rng = np.random.default_rng(child)
        resampled = CountsByBasis({k: rng.poisson(v) for k, v in counts.counts.items()})
        try:
            rec = mle_reconstruct(resampled, max_iters=max_iters, tol=tol)
        except TomographyError:
            excluded += 1
            continue
        values.append(fidelity(rec.state, target))
    if len(values) < 2:
        raise TomographyError("fewer than two resamples could be reconstructed")
    return FidelityEstimate(float(np.mean(values)), float(np.std(values, ddof=1)), len(values), excluded)
