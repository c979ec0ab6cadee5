"""Hong-Ou-Mandel dip model and visibility fit."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np
from scipy.optimize import curve_fit

Shape = Literal["gaussian", "exponential"]

REPORTED_COHERENCE_PS = 133.0


class HOMFitError(RuntimeError):
    pass


def dip(delays, tau_c: float, v: float, c0: float, shape: Shape = "gaussian") -> np.ndarray:
    t = np.asarray(delays, dtype=float) / tau_c
    profile = np.exp(-t**2) if shape == "gaussian" else np.exp(-np.abs(t))
    return c0 * (1 - v * profile)


@dataclass(frozen=True)
class HOMCurve:
    delays: np.ndarray  # ps
    coincidences: np.ndarray
    v_fit: float | None = None
    tau_c: float | None = None

    def __post_init__(self) -> None:
        d = np.asarray(self.delays, dtype=float)
        c = np.asarray(self.coincidences, dtype=float)
        if d.shape != c.shape or d.ndim != 1:
            raise ValueError("delays and coincidences must be 1-d arrays of equal length")
        if np.any(c < 0):
            raise ValueError("coincidences must be non-negative")
        if self.v_fit is not None and not 0.0 <= self.v_fit <= 1.0:
            raise ValueError("v_fit must lie in [0, 1]")
        object.__setattr__(self, "delays", d)
        object.__setattr__(self, "coincidences", c)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["delay_ps", "coincidence"])
        for t, c in zip(self.delays, self.coincidences):
            w.writerow([f"{t:.3f}", f"{c:.6f}"])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "HOMCurve":
        rows = list(csv.reader(io.StringIO(text)))[1:]
        return cls(np.array([float(r[0]) for r in rows]), np.array([float(r[1]) for r in rows]))


def hom_curve(
    delays: Sequence[float],
    tau_c: float,
    v: float,
    c0: float = 1.0,
    shape: Shape = "gaussian",
) -> HOMCurve:
    """Coincidence rate ``c0 (1 - v exp(-(t/tau_c)^2))`` (or the exponential profile)."""
    if not tau_c > 0:
        raise ValueError(f"coherence time must be positive, got {tau_c}")
    if not 0.0 <= v <= 1.0:
        raise ValueError(f"visibility must lie in [0, 1], got {v}")
    return HOMCurve(np.asarray(delays, dtype=float), dip(delays, tau_c, v, c0, shape), v, tau_c)


def poisson_sample(curve: HOMCurve, rng: np.random.Generator) -> HOMCurve:
    """Counts drawn with the curve's coincidences as Poisson means."""
    return HOMCurve(curve.delays, rng.poisson(curve.coincidences).astype(float))


@dataclass(frozen=True)
class HOMFit:
    v: float
    tau_c: float
    c0: float
    sigma_v: float
    sigma_tau_c: float
    sigma_c0: float


def fit_visibility(
    curve: HOMCurve,
    shape: Shape = "gaussian",
    poisson_weights: bool = True,
    max_nfev: int = 2000,
) -> HOMFit:
    """Least-squares fit of the dip model; uncertainties from the fit covariance."""
    t, y = curve.delays, curve.coincidences
    if t.size < 5:
        raise HOMFitError(f"need at least 5 points, got {t.size}")
    if not (t.min() < 0 < t.max()):
        raise HOMFitError("samples must span both sides of zero delay")
    c0_guess = float(np.median(y[np.argsort(np.abs(t))[-max(2, t.size // 4):]]))
    if c0_guess <= 0:
        raise HOMFitError("baseline is zero; nothing to fit")
    v_guess = float(np.clip(1 - y[np.argmin(np.abs(t))] / c0_guess, 0.0, 1.0))
    tau_guess = float(np.ptp(t) / 6)
    sigma = np.sqrt(np.maximum(y, 1.0)) if poisson_weights else None
    try:
        popt, pcov = curve_fit(
            lambda d, tau, v, c0: dip(d, tau, v, c0, shape),
            t,
            y,
            p0=(tau_guess, v_guess, c0_guess),
            sigma=sigma,
            absolute_sigma=poisson_weights,
            bounds=([1e-9, 0.0, 0.0], [np.inf, 1.0, np.inf]),
            max_nfev=max_nfev,
        )
    except RuntimeError as exc:
        raise HOMFitError(str(exc)) from exc
    err = np.sqrt(np.clip(np.diag(pcov), 0.0, None))
    tau, v, c0 = popt
    return HOMFit(float(v), float(tau), float(c0), float(err[1]), float(err[0]), float(err[2]))
