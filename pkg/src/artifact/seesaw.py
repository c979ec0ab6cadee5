"""See-saw maximisation of the swap-game score over quantum strategies.

Each sweep fixes all but one component (Alice's observables, Claire's
observables, Bob's measurement, either source) and replaces it by the
maximiser of the score, which is linear in that component. In ``real`` mode
every matrix stays real symmetric/orthogonal, so the search explores the
real-Hilbert-space strategies the 7.66 bound refers to.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np

from .game import (
    REAL_BOUND,
    SettingsSpec,
    SignTable,
    derive_sign_table,
    probability_matrix,
    score,
)
from .quantum import Observable, ProjectiveMeasurement, QuantumState

log = logging.getLogger(__name__)

Field = Literal["complex", "real"]

# the real-field maximum is known to be just below 7.6605
REAL_CEILING = 7.6605
MONOTONE_TOL = 1e-10


class CeilingViolation(RuntimeError):
    """A real-field strategy scored above the known real bound; this is a bug."""


@dataclass(frozen=True)
class OptimizerConfig:
    restarts: int = 50
    max_iters: int = 500
    tol: float = 1e-9
    seed: int = 0

    def __post_init__(self) -> None:
        if self.restarts < 1 or self.max_iters < 1:
            raise ValueError("restarts and max_iters must be >= 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")


@dataclass(eq=False)
class Strategy:
    """A complete quantum strategy. Matrices are plain arrays for speed."""

    field: Field
    dims: tuple[int, int, int, int]
    rho1: np.ndarray
    rho2: np.ndarray
    alice: list[np.ndarray]
    claire: list[np.ndarray]
    bob_basis: np.ndarray  # columns are an orthonormal basis of B1 x B2
    bob_assign: np.ndarray  # outcome index of each basis column
    n_outcomes: int = 4

    def bob_projectors(self) -> list[np.ndarray]:
        projs = []
        for b in range(self.n_outcomes):
            cols = self.bob_basis[:, self.bob_assign == b]
            projs.append(cols @ cols.conj().T)
        return projs

    def max_imag(self) -> float:
        mats = [self.rho1, self.rho2, self.bob_basis, *self.alice, *self.claire]
        return max(float(np.max(np.abs(np.imag(m)))) for m in mats)

    def quantum_objects(self, outcomes: Sequence[str]):
        """Validated QuantumState / Observable / ProjectiveMeasurement views."""
        rho1 = QuantumState(self.rho1)
        rho2 = QuantumState(self.rho2)
        alice = tuple(Observable(a) for a in self.alice)
        claire = tuple(Observable(c) for c in self.claire)
        bob = ProjectiveMeasurement(tuple(outcomes), tuple(self.bob_projectors()))
        return rho1, rho2, alice, claire, bob

    def to_dict(self) -> dict:
        def flat(m):
            m = np.asarray(m, dtype=complex)
            return {"shape": list(m.shape), "re_im": [[float(v.real), float(v.imag)] for v in m.ravel()]}

        return {
            "field": self.field,
            "dims": list(self.dims),
            "rho1": flat(self.rho1),
            "rho2": flat(self.rho2),
            "alice": [flat(a) for a in self.alice],
            "claire": [flat(c) for c in self.claire],
            "bob": [flat(p) for p in self.bob_projectors()],
        }


class _Game:
    """Score functional in tensor form for fixed dims and sign table."""

    def __init__(self, signs: SignTable, dims: Sequence[int]):
        self.signs = signs
        self.dims = tuple(int(d) for d in dims)
        self.nx = max(x for x, _ in signs.combos)
        self.nz = max(z for _, z in signs.combos)
        self.xs = [x - 1 for x, _ in signs.combos]
        self.zs = [z - 1 for _, z in signs.combos]
        self.nb = len(signs.outcomes)

    def ac_operators(self, alice, claire) -> list[np.ndarray]:
        """Q_b = sum_k sign(b,k) A_x (x) C_z as a (dA, dC, dA, dC) tensor."""
        dA, _, _, dC = self.dims
        out = []
        for b in range(self.nb):
            q = sum(
                s * np.kron(alice[x], claire[z])
                for s, x, z in zip(self.signs.signs[b], self.xs, self.zs)
            )
            out.append(q.reshape(dA, dC, dA, dC))
        return out

    def _r(self, s: Strategy):
        dA, dB1, dB2, dC = self.dims
        return s.rho1.reshape(dA, dB1, dA, dB1), s.rho2.reshape(dB2, dC, dB2, dC)

    def _p(self, s: Strategy):
        dA, dB1, dB2, dC = self.dims
        return [p.reshape(dB1, dB2, dB1, dB2) for p in s.bob_projectors()]

    def sigmas(self, s: Strategy) -> list[np.ndarray]:
        """Unnormalised Alice-Claire states sigma_b[a, c, e, f]."""
        r1, r2 = self._r(s)
        return [np.einsum("aiek,jclf,klij->acef", r1, r2, p, optimize=True) for p in self._p(s)]

    def value(self, s: Strategy) -> float:
        qs = self.ac_operators(s.alice, s.claire)
        return float(
            sum(np.einsum("acef,efac->", sg, q).real for sg, q in zip(self.sigmas(s), qs))
        )

    # environments: the operator whose trace against the held-out component is F

    def alice_env(self, s: Strategy) -> list[np.ndarray]:
        sig = self.sigmas(s)
        env = [np.zeros((self.dims[0],) * 2, dtype=complex) for _ in range(self.nx)]
        for b, sg in enumerate(sig):
            for sgn, x, z in zip(self.signs.signs[b], self.xs, self.zs):
                env[x] += sgn * np.einsum("acef,fc->ae", sg, s.claire[z])
        return env

    def claire_env(self, s: Strategy) -> list[np.ndarray]:
        sig = self.sigmas(s)
        env = [np.zeros((self.dims[3],) * 2, dtype=complex) for _ in range(self.nz)]
        for b, sg in enumerate(sig):
            for sgn, x, z in zip(self.signs.signs[b], self.xs, self.zs):
                env[z] += sgn * np.einsum("acef,ea->cf", sg, s.alice[x])
        return env

    def bob_env(self, s: Strategy) -> list[np.ndarray]:
        r1, r2 = self._r(s)
        D = self.dims[1] * self.dims[2]
        return [
            np.einsum("aiek,jclf,efac->ijkl", r1, r2, q, optimize=True).reshape(D, D)
            for q in self.ac_operators(s.alice, s.claire)
        ]

    def rho1_env(self, s: Strategy) -> np.ndarray:
        _, r2 = self._r(s)
        d = self.dims[0] * self.dims[1]
        qs = self.ac_operators(s.alice, s.claire)
        w = sum(
            np.einsum("jclf,klij,efac->ekai", r2, p, q, optimize=True)
            for p, q in zip(self._p(s), qs)
        )
        return w.reshape(d, d)

    def rho2_env(self, s: Strategy) -> np.ndarray:
        r1, _ = self._r(s)
        d = self.dims[2] * self.dims[3]
        qs = self.ac_operators(s.alice, s.claire)
        w = sum(
            np.einsum("aiek,klij,efac->lfjc", r1, p, q, optimize=True)
            for p, q in zip(self._p(s), qs)
        )
        return w.reshape(d, d)


def _hermitian_part(op: np.ndarray, fld: Field) -> np.ndarray:
    h = (op + op.conj().T) / 2
    return h.real if fld == "real" else h


def _fix_sign(vecs: np.ndarray) -> np.ndarray:
    """Make the first non-negligible component of every column real positive."""
    out = vecs.copy()
    for k in range(out.shape[1]):
        col = out[:, k]
        idx = np.flatnonzero(np.abs(col) > 1e-12)
        if idx.size:
            out[:, k] = col * (np.abs(col[idx[0]]) / col[idx[0]])
    return out


def update_observable(op: np.ndarray, fld: Field = "complex") -> np.ndarray:
    """Dichotomic observable maximising tr(A op): the matrix sign of ``op`` (0 -> +1)."""
    h = _hermitian_part(np.asarray(op), fld)
    w, v = np.linalg.eigh(h)
    signs = np.where(w >= 0, 1.0, -1.0)
    return (v * signs) @ v.conj().T


def update_state(op: np.ndarray, fld: Field = "complex") -> np.ndarray:
    """Pure state on a top eigenvector of ``op``; ties broken by the lowest-index eigenvector."""
    h = _hermitian_part(np.asarray(op), fld)
    w, v = np.linalg.eigh(h)
    top = np.flatnonzero(w >= w[-1] - 1e-12)[0]
    psi = _fix_sign(v[:, [top]])[:, 0]
    return np.outer(psi, psi.conj())


def _bob_objective(basis, assign, ops) -> float:
    return float(sum(np.vdot(basis[:, k], ops[assign[k]] @ basis[:, k]).real for k in range(basis.shape[1])))


def _reassign(basis, ops) -> np.ndarray:
    q = np.array([[np.vdot(basis[:, k], m @ basis[:, k]).real for m in ops] for k in range(basis.shape[1])])
    return np.argmax(q, axis=1)


def _polar_ascent(basis, assign, ops, fld: Field, iters: int = 100, tol: float = 1e-13):
    """Alternate column reassignment and polar steps; both never decrease the objective."""
    D = basis.shape[0]
    shift = max(0.0, max(-np.linalg.eigvalsh(m).min() for m in ops)) + 1.0
    shifted = [m + shift * np.eye(D) for m in ops]
    f = _bob_objective(basis, assign, ops)
    for _ in range(iters):
        assign = _reassign(basis, ops)
        g = np.column_stack([shifted[assign[k]] @ basis[:, k] for k in range(D)])
        u, _, vh = np.linalg.svd(g)
        new = u @ vh
        if fld == "real":
            new = new.real
        new_assign = _reassign(new, ops)
        f_new = _bob_objective(new, new_assign, ops)
        if f_new < f - 1e-12:
            break
        basis, assign = new, new_assign
        done = f_new - f < tol
        f = f_new
        if done:
            break
    return basis, assign, f


def update_bob(
    ops: Sequence[np.ndarray],
    fld: Field = "complex",
    current: tuple[np.ndarray, np.ndarray] | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Projective measurement (basis, outcome assignment) increasing sum_b tr(P_b M_b).

    From ``current`` this is a monotone ascent. Without it, the computational
    basis and a start built from each operator's top eigenvector are both
    ascended and the better result kept (computational basis on ties).
    """
    ops = [_hermitian_part(np.asarray(m), fld) for m in ops]
    D = ops[0].shape[0]
    if current is not None:
        basis, assign = current
        f0 = _bob_objective(basis, assign, ops)
        nb, na, f = _polar_ascent(basis, assign, ops, fld)
        if f < f0 - 1e-12:
            return basis, assign
        return nb, na
    eye = np.eye(D, dtype=float if fld == "real" else complex)
    starts = [eye]
    tops = []
    for m in ops:
        _, v = np.linalg.eigh(m)
        tops.append(v[:, -1])
    if len(tops) < D:
        g = np.column_stack(tops + [eye[:, k] for k in range(len(tops), D)])
    else:
        g = np.column_stack(tops[:D])
    u, _, vh = np.linalg.svd(g)
    starts.append((u @ vh).real if fld == "real" else u @ vh)
    best = None
    for start in starts:
        assign = _reassign(start, ops)
        basis, assign, f = _polar_ascent(start, assign, ops, fld)
        if best is None or f > best[2] + 1e-10:
            best = (basis, assign, f)
    return best[0], best[1]


def bob_measurement(basis: np.ndarray, assign: np.ndarray, outcomes: Sequence[str]) -> ProjectiveMeasurement:
    projs = []
    for b in range(len(outcomes)):
        cols = basis[:, assign == b]
        projs.append(cols @ cols.conj().T)
    return ProjectiveMeasurement(tuple(outcomes), tuple(projs))


def _random_unitary(rng: np.random.Generator, d: int, fld: Field) -> np.ndarray:
    if fld == "real":
        z = rng.standard_normal((d, d))
    else:
        z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def _random_pure(rng: np.random.Generator, d: int, fld: Field) -> np.ndarray:
    v = rng.standard_normal(d) if fld == "real" else rng.standard_normal(d) + 1j * rng.standard_normal(d)
    v = v / np.linalg.norm(v)
    return np.outer(v, v.conj())


def _random_dichotomic(rng: np.random.Generator, d: int, fld: Field) -> np.ndarray:
    u = _random_unitary(rng, d, fld)
    signs = rng.choice([-1.0, 1.0], size=d)
    return (u * signs) @ u.conj().T


def random_strategy(rng: np.random.Generator, fld: Field, dims: Sequence[int], nx: int = 6, nz: int = 3) -> Strategy:
    dA, dB1, dB2, dC = dims
    D = dB1 * dB2
    return Strategy(
        field=fld,
        dims=tuple(dims),
        rho1=_random_pure(rng, dA * dB1, fld),
        rho2=_random_pure(rng, dB2 * dC, fld),
        alice=[_random_dichotomic(rng, dA, fld) for _ in range(nx)],
        claire=[_random_dichotomic(rng, dC, fld) for _ in range(nz)],
        bob_basis=_random_unitary(rng, D, fld),
        bob_assign=rng.permutation(np.arange(D) % 4),
    )


@dataclass
class RestartResult:
    best: float
    iterations: int
    converged: bool
    trace: list[float]
    strategy: Strategy


def _seesaw(game: _Game, s: Strategy, cfg: OptimizerConfig) -> RestartResult:
    fld = s.field
    f = game.value(s)
    trace = [f]
    converged = False
    it = 0
    for it in range(1, cfg.max_iters + 1):
        s.alice = [update_observable(k, fld) for k in game.alice_env(s)]
        s.claire = [update_observable(k, fld) for k in game.claire_env(s)]
        s.bob_basis, s.bob_assign = update_bob(game.bob_env(s), fld, (s.bob_basis, s.bob_assign))
        s.rho1 = update_state(game.rho1_env(s), fld)
        s.rho2 = update_state(game.rho2_env(s), fld)
        f_new = game.value(s)
        if f_new < f - MONOTONE_TOL:
            raise AssertionError(f"see-saw decreased the score: {f} -> {f_new}")
        trace.append(f_new)
        if f_new - f < cfg.tol:
            converged = True
            f = f_new
            break
        f = f_new
    return RestartResult(best=f, iterations=it, converged=converged, trace=trace, strategy=s)


@dataclass
class OptimizationResult:
    best: float
    strategy: Strategy
    trace: list[float]
    restarts: list[RestartResult] = field(default_factory=list)
    field: Field = "complex"
    dims: tuple[int, int, int, int] = (2, 2, 2, 2)

    def to_dict(self, include_strategy: bool = True) -> dict:
        out = {
            "field": self.field,
            "dims": list(self.dims),
            "best": self.best,
            "restarts": [
                {"best": r.best, "iterations": r.iterations, "converged": r.converged}
                for r in self.restarts
            ],
        }
        if include_strategy:
            out["strategy"] = self.strategy.to_dict()
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def optimize(
    cfg: OptimizerConfig,
    fld: Field = "complex",
    dims: Sequence[int] = (2, 2, 2, 2),
    signs: SignTable | None = None,
) -> OptimizationResult:
    """Best see-saw fixed point over ``cfg.restarts`` random starts."""
    if fld not in ("complex", "real"):
        raise ValueError(f"field must be 'complex' or 'real', got {fld!r}")
    dims = tuple(int(d) for d in dims)
    if len(dims) != 4 or min(dims) < 1:
        raise ValueError(f"dims must be four positive integers, got {dims}")
    signs = signs or derive_sign_table()
    game = _Game(signs, dims)
    children = np.random.SeedSequence(cfg.seed).spawn(cfg.restarts)
    results = []
    for child in children:
        rng = np.random.default_rng(child)
        start = random_strategy(rng, fld, dims, game.nx, game.nz)
        res = _seesaw(game, start, cfg)
        if fld == "real" and res.best > REAL_CEILING:
            raise CeilingViolation(f"real strategy reached {res.best:.6f} > {REAL_CEILING}")
        results.append(res)
        log.debug("restart best %.9f after %d iterations", res.best, res.iterations)
    best = max(results, key=lambda r: r.best)
    return OptimizationResult(
        best=best.best,
        strategy=best.strategy,
        trace=best.trace,
        restarts=results,
        field=fld,
        dims=dims,
    )


def bell_operator(
    strategy: Strategy,
    part: str,
    index: int | None = None,
    signs: SignTable | None = None,
) -> np.ndarray:
    """Operator ``W`` coupling the score to one component with the rest held fixed.

    ``part`` is ``"rho1"``, ``"rho2"`` (then ``F = tr(W rho)``), ``"alice"`` or
    ``"claire"`` with a 1-based setting ``index`` (``F = sum_x tr(W_x A_x)``),
    or ``"bob"`` with a 0-based outcome ``index`` (``F = sum_b tr(W_b P_b)``).
    """
    game = _Game(signs or derive_sign_table(), strategy.dims)
    if part == "rho1":
        return game.rho1_env(strategy)
    if part == "rho2":
        return game.rho2_env(strategy)
    envs = {"alice": game.alice_env, "claire": game.claire_env, "bob": game.bob_env}
    if part not in envs:
        raise ValueError(f"unknown part {part!r}")
    if index is None:
        raise ValueError(f"{part} needs an index")
    ops = envs[part](strategy)
    i = index if part == "bob" else index - 1
    if not 0 <= i < len(ops):
        raise ValueError(f"{part} index {index} out of range")
    return ops[i]


def rescore(strategy: Strategy, signs: SignTable | None = None) -> float:
    """Score of a strategy through the independent probability-matrix route."""
    signs = signs or derive_sign_table()
    rho1, rho2, alice, claire, bob = strategy.quantum_objects(signs.outcomes)
    settings = SettingsSpec(alice=alice, claire=claire, combos=signs.combos)
    pm = probability_matrix(rho1, rho2, settings, bob=bob, dims=strategy.dims)
    return score(pm, signs).total


__all__ = [
    "bell_operator",
    "REAL_BOUND",
    "REAL_CEILING",
    "CeilingViolation",
    "OptimizerConfig",
    "OptimizationResult",
    "Strategy",
    "bob_measurement",
    "optimize",
    "random_strategy",
    "rescore",
    "update_bob",
    "update_observable",
    "update_state",
]
