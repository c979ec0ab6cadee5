"""Seeded Monte Carlo trials, count tables and the score estimator with error bars."""

from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .game import BELL_LABELS, ProbabilityMatrix, SignTable, derive_sign_table

CHUNK = 65536
N_X, N_Z = 6, 3


class InsufficientData(ValueError):
    """A cell required by the estimator has no counts."""


@dataclass(frozen=True)
class TrialRecord:
    trial_id: int
    x: int
    z: int
    b: str
    a: int
    c: int

    def __post_init__(self) -> None:
        if not (1 <= self.x <= N_X and 1 <= self.z <= N_Z):
            raise ValueError(f"setting ({self.x}, {self.z}) out of range")
        if self.b not in BELL_LABELS or self.a not in (1, -1) or self.c not in (1, -1):
            raise ValueError(f"invalid outcome ({self.a}, {self.b}, {self.c})")


@dataclass(frozen=True, eq=False)
class TrialLog:
    """Column-oriented trial records; iterating yields :class:`TrialRecord`."""

    x: np.ndarray
    z: np.ndarray
    b: np.ndarray  # index into BELL_LABELS
    a: np.ndarray
    c: np.ndarray

    def __len__(self) -> int:
        return len(self.x)

    def __iter__(self) -> Iterator[TrialRecord]:
        for i in range(len(self)):
            yield TrialRecord(i, int(self.x[i]), int(self.z[i]), BELL_LABELS[self.b[i]], int(self.a[i]), int(self.c[i]))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["trial_id", "x", "z", "b", "a", "c"])
        for i in range(len(self)):
            w.writerow([i, self.x[i], self.z[i], BELL_LABELS[self.b[i]], self.a[i], self.c[i]])
        return buf.getvalue()

    @classmethod
    def from_records(cls, records: Iterable[TrialRecord]) -> "TrialLog":
        rows = [(r.x, r.z, BELL_LABELS.index(r.b), r.a, r.c) for r in records]
        cols = np.array(rows, dtype=np.int64).reshape(-1, 5).T
        return cls(*cols)


def uniform_settings(combos: Sequence[tuple[int, int]]) -> dict[tuple[int, int], float]:
    return {tuple(c): 1.0 / len(combos) for c in combos}


def experiment_settings() -> dict[tuple[int, int], float]:
    """Independent uniform choices of x in 1..6 and z in 1..3 (18 pairs)."""
    return {(x, z): 1.0 / (N_X * N_Z) for x in range(1, N_X + 1) for z in range(1, N_Z + 1)}


def _sample_chunk(seed_seq, n, probs, cdf, row_of, combo_arr, discard):
    rng = np.random.default_rng(seed_seq)
    pick = rng.choice(len(probs), size=n, p=probs)
    u = rng.random(n)
    rows = row_of[pick]
    keep = rows >= 0
    if not discard and not keep.all():
        raise ValueError("setting distribution selected a combination that is not scored")
    rows, u, pick = rows[keep], u[keep], pick[keep]
    idx = np.minimum((u[:, None] >= cdf[rows]).sum(axis=1), cdf.shape[1] - 1)
    n_b = (cdf.shape[1]) // 4
    ia, rem = np.divmod(idx, 2 * n_b)
    ib, ic = np.divmod(rem, 2)
    return combo_arr[pick, 0], combo_arr[pick, 1], ib, 1 - 2 * ia, 1 - 2 * ic


def sample_trials(
    pm: ProbabilityMatrix,
    n: int,
    setting_dist: Mapping[tuple[int, int], float] | None = None,
    seed: int = 0,
    *,
    discard_unscored: bool = False,
    threads: int = 1,
) -> TrialLog:
    """``n`` i.i.d. trials: a setting pair from ``setting_dist``, then outcomes from its row.

    Draws are made in fixed-size chunks with seed-derived substreams, so the
    result depends only on ``(pm, n, setting_dist, seed)`` and not on ``threads``.
    With ``discard_unscored`` draws of unscored pairs are dropped (so fewer
    than ``n`` records may be returned), as when a setting grid larger than
    the scored one is sampled.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    dist = dict(setting_dist) if setting_dist is not None else uniform_settings(pm.combos)
    combos = [tuple(k) for k in dist]
    probs = np.array([dist[k] for k in dist], dtype=float)
    if np.any(probs < 0) or not np.isclose(probs.sum(), 1.0):
        raise ValueError("setting distribution must be non-negative and sum to one")
    for x, z in combos:
        if not (1 <= x <= N_X and 1 <= z <= N_Z):
            raise ValueError(f"setting distribution includes invalid combination {(x, z)}")
    unscored = [c for c, p in zip(combos, probs) if p > 0 and c not in pm.combos]
    if unscored and not discard_unscored:
        raise ValueError(f"setting distribution includes unscored combinations {unscored}")
    row_of = np.array([pm.combos.index(c) if c in pm.combos else -1 for c in combos])
    combo_arr = np.array(combos, dtype=np.int64)
    cdf = np.cumsum(pm.matrix, axis=1)
    sizes = [CHUNK] * (n // CHUNK) + ([n % CHUNK] if n % CHUNK else [])
    children = np.random.SeedSequence(seed).spawn(len(sizes))
    args = [(ch, sz, probs, cdf, row_of, combo_arr, discard_unscored) for ch, sz in zip(children, sizes)]
    if threads > 1 and len(args) > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            parts = list(ex.map(lambda a: _sample_chunk(*a), args))
    else:
        parts = [_sample_chunk(*a) for a in args]
    if not parts:
        empty = np.zeros(0, dtype=np.int64)
        return TrialLog(empty, empty, empty, empty, empty)
    cols = [np.concatenate([p[i] for p in parts]).astype(np.int64) for i in range(5)]
    return TrialLog(*cols)


@dataclass(frozen=True, eq=False)
class CountTable:
    """counts[x-1, z-1, b, ia, ic] with ia, ic = 0 for outcome +1 and 1 for -1."""

    counts: np.ndarray

    def __post_init__(self) -> None:
        c = np.array(self.counts, dtype=np.int64)
        if c.shape != (N_X, N_Z, len(BELL_LABELS), 2, 2):
            raise ValueError(f"count array has shape {c.shape}")
        if np.any(c < 0):
            raise ValueError("counts must be non-negative")
        c.setflags(write=False)
        object.__setattr__(self, "counts", c)

    @classmethod
    def empty(cls) -> "CountTable":
        return cls(np.zeros((N_X, N_Z, len(BELL_LABELS), 2, 2), dtype=np.int64))

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def __getitem__(self, key: tuple[int, int, str, int, int]) -> int:
        x, z, b, a, c = key
        return int(self.counts[x - 1, z - 1, BELL_LABELS.index(b), (1 - a) // 2, (1 - c) // 2])

    def to_dict(self) -> dict:
        cells = []
        for (x, z, b, ia, ic), v in np.ndenumerate(self.counts):
            if v:
                cells.append({"x": x + 1, "z": z + 1, "b": BELL_LABELS[b], "a": 1 - 2 * ia, "c": 1 - 2 * ic, "n": int(v)})
        return {"total": self.total, "cells": cells}

    @classmethod
    def from_dict(cls, d: Mapping) -> "CountTable":
        c = np.zeros((N_X, N_Z, len(BELL_LABELS), 2, 2), dtype=np.int64)
        for cell in d["cells"]:
            c[cell["x"] - 1, cell["z"] - 1, BELL_LABELS.index(cell["b"]), (1 - cell["a"]) // 2, (1 - cell["c"]) // 2] = cell["n"]
        table = cls(c)
        if "total" in d and d["total"] != table.total:
            raise ValueError("total does not match the sum of counts")
        return table


def tabulate(records: TrialLog | Iterable[TrialRecord]) -> CountTable:
    log = records if isinstance(records, TrialLog) else TrialLog.from_records(records)
    c = np.zeros((N_X, N_Z, len(BELL_LABELS), 2, 2), dtype=np.int64)
    if len(log):
        np.add.at(c, (log.x - 1, log.z - 1, log.b, (1 - log.a) // 2, (1 - log.c) // 2), 1)
    return CountTable(c)


@dataclass(frozen=True)
class EstimateWithError:
    per_b: dict[str, tuple[float, float]]
    total: tuple[float, float]

    def __post_init__(self) -> None:
        if self.total[1] < 0 or any(s < 0 for _, s in self.per_b.values()):
            raise ValueError("sigmas must be non-negative")

    def to_dict(self) -> dict:
        return {
            "per_b": {k: {"value": v, "sigma": s} for k, (v, s) in self.per_b.items()},
            "total": {"value": self.total[0], "sigma": self.total[1]},
        }


def _cell_correlators(ct: CountTable, signs: SignTable):
    """E-hat[b, k] and its Poisson variance for every scored (x, z) pair."""
    n_b, n_k = signs.signs.shape
    e = np.zeros((n_b, n_k))
    var = np.zeros((n_b, n_k))
    ac = np.array([[1, -1], [-1, 1]])
    for k, (x, z) in enumerate(signs.combos):
        for ib in range(n_b):
            cell = ct.counts[x - 1, z - 1, ib]
            n = cell.sum()
            if n == 0:
                raise InsufficientData(f"no counts for x={x}, z={z}, b={signs.outcomes[ib]}")
            e[ib, k] = (cell * ac).sum() / n
            var[ib, k] = (1 - e[ib, k] ** 2) / n
    return e, var


def estimate_f(ct: CountTable, signs: SignTable | None = None, weighted: bool = False) -> EstimateWithError:
    """Per-outcome score estimates and their mean (or p-hat(b) weighted sum).

    Errors follow Poisson counting statistics propagated through each
    conditional correlator: var(E) = (1 - E^2) / N(xz, b).
    """
    signs = signs or derive_sign_table()
    e, var = _cell_correlators(ct, signs)
    f_b = np.sum(signs.signs * e, axis=1)
    s_b = np.sqrt(var.sum(axis=1))
    per_b = {label: (float(f), float(s)) for label, f, s in zip(signs.outcomes, f_b, s_b)}
    if weighted:
        nb = ct.counts.sum(axis=(0, 1, 3, 4)).astype(float)
        w = nb / nb.sum()
        total = (float(np.sum(w * f_b)), float(np.sqrt(np.sum(w**2 * s_b**2))))
    else:
        total = (float(f_b.mean()), float(np.sqrt(np.sum(s_b**2)) / len(f_b)))
    return EstimateWithError(per_b, total)


def bootstrap_f(ct: CountTable, signs: SignTable | None = None, boots: int = 200, seed: int = 0) -> tuple[float, float]:
    """Mean and spread of the total estimate over Poisson-resampled count tables."""
    signs = signs or derive_sign_table()
    rng = np.random.default_rng(seed)
    values = []
    for _ in range(boots):
        try:
            values.append(estimate_f(CountTable(rng.poisson(ct.counts)), signs).total[0])
        except InsufficientData:
            continue
    if len(values) < 2:
        raise InsufficientData("fewer than two bootstrap resamples were usable")
    return float(np.mean(values)), float(np.std(values, ddof=1))


def violation_sigma(estimate: EstimateWithError | tuple[float, float], bound: float) -> float:
    """Number of standard deviations by which the estimate exceeds ``bound``."""
    value, sigma = estimate.total if isinstance(estimate, EstimateWithError) else estimate
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    return (value - bound) / sigma


def setting_fidelity(
    ct: CountTable,
    reference: Mapping[int, int],
    party: str = "alice",
) -> dict[int, float]:
    """F_m = C_right / (C_right + C_wrong) for each calibrated setting.

    ``reference`` maps a setting index of ``party`` to the outcome expected
    from the calibration input (an eigenstate of that setting).
    """
    if party not in ("alice", "claire"):
        raise ValueError("party must be 'alice' or 'claire'")
    out = {}
    for setting, expected in reference.items():
        if party == "alice":
            block = ct.counts[setting - 1].sum(axis=(0, 1, 3))
        else:
            block = ct.counts[:, setting - 1].sum(axis=(0, 1, 2))
        right = block[(1 - expected) // 2]
        wrong = block.sum() - right
        if right + wrong == 0:
            raise ValueError(f"no calibration counts for setting {setting}")
        out[setting] = float(right / (right + wrong))
    return out


def calibration_table(
    party: str,
    flip: float | Sequence[float],
    n_per_setting: int,
    seed: int = 0,
) -> CountTable:
    """Counts from eigenstate calibration inputs whose ideal outcome is +1, with outcome flips."""
    rng = np.random.default_rng(seed)
    c = np.zeros((N_X, N_Z, len(BELL_LABELS), 2, 2), dtype=np.int64)
    n_settings = N_X if party == "alice" else N_Z
    q = np.broadcast_to(np.asarray(flip, dtype=float), (n_settings,))
    for s in range(n_settings):
        wrong = rng.binomial(n_per_setting, q[s])
        if party == "alice":
            c[s, 0, 0, 0, 0], c[s, 0, 0, 1, 0] = n_per_setting - wrong, wrong
        else:
            c[0, s, 0, 0, 0], c[0, s, 0, 0, 1] = n_per_setting - wrong, wrong
    return CountTable(c)


def estimate_report(est: EstimateWithError, bound: float) -> str:
    d = est.to_dict()
    d["bound"] = bound
    d["violation_sigma"] = violation_sigma(est, bound) if est.total[1] > 0 else None
    return json.dumps(d, indent=2)
