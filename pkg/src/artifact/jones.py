"""Jones-matrix chains for the fast polarisation analysers.

A chain lists wave plates and electro-optic phase modulators in the order
the photon meets them. The measured observable is ``U^dagger Z U`` with the
polarising beam splitter resolving H/V after the chain.

Convention set searched by :func:`verify_setting`:

* retardance sign: a plate of retardance ``d`` is ``R(t) diag(1, exp(+-i d)) R(-t)``;
* element order: ``listed`` (first element acts first) or ``reversed``.

Fast-axis angles are in degrees, counterclockwise from horizontal. The phase
modulator is always ``diag(1, exp(i phi))``.
"""

from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .quantum import Observable, pauli

RETARDANCE = {"QWP": math.pi / 2, "HWP": math.pi, "L8": math.pi / 4}
ELEMENT_KINDS = ("QWP", "HWP", "L8", "PM")
MATCH_TOL = 1e-6


@dataclass(frozen=True)
class Element:
    kind: str
    value: float  # angle in degrees for plates, phase in radians for PM

    def __post_init__(self) -> None:
        if self.kind not in ELEMENT_KINDS:
            raise ValueError(f"unknown element kind {self.kind!r}")
        if not math.isfinite(self.value):
            raise ValueError(f"element value must be finite, got {self.value}")

    def __str__(self) -> str:
        return f"{self.kind}@{self.value:g}"


@dataclass(frozen=True)
class WaveplateChainConfig:
    elements: tuple[Element, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "elements", tuple(self.elements))
        if not self.elements:
            raise ValueError("a chain needs at least one element")

    @classmethod
    def parse(cls, text: str) -> "WaveplateChainConfig":
        """Parse ``"QWP@45, PM@pi/2, L8@45"``; PM values may use ``pi``."""
        elements = []
        for token in text.split(","):
            token = token.strip()
            if not token:
                continue
            kind, sep, value = token.partition("@")
            kind = kind.strip().upper()
            if not sep:
                raise ValueError(f"element {token!r} must look like KIND@value")
            elements.append(Element(kind, parse_number(value)))
        return cls(tuple(elements))

    def __str__(self) -> str:
        return ", ".join(str(e) for e in self.elements)


_NUM = re.compile(r"^\s*([+-]?)\s*(\d*\.?\d*)\s*\*?\s*(pi)?\s*(?:/\s*(\d+\.?\d*))?\s*$", re.IGNORECASE)


def parse_number(text: str) -> float:
    """Numbers such as ``13.68``, ``-45``, ``pi/2``, ``2pi/3`` or ``4*pi/3``."""
    m = _NUM.match(text)
    if not m or (not m.group(2) and not m.group(3)):
        raise ValueError(f"cannot parse number {text!r}")
    sign, coeff, has_pi, denom = m.groups()
    value = float(coeff) if coeff else 1.0
    if has_pi:
        value *= math.pi
    if denom:
        value /= float(denom)
    return -value if sign == "-" else value


@dataclass(frozen=True)
class Convention:
    retardance_sign: int = 1
    order: str = "listed"

    def __str__(self) -> str:
        return f"retardance {'+' if self.retardance_sign > 0 else '-'}i, {self.order} order"


CONVENTIONS = tuple(Convention(s, o) for s, o in itertools.product((1, -1), ("listed", "reversed")))


def _rot(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def element_matrix(e: Element, retardance_sign: int = 1) -> np.ndarray:
    if e.kind == "PM":
        return np.diag([1, np.exp(1j * e.value)])
    t = math.radians(e.value)
    d = RETARDANCE[e.kind]
    return _rot(t) @ np.diag([1, np.exp(retardance_sign * 1j * d)]) @ _rot(-t)


def jones_chain(config: WaveplateChainConfig, convention: Convention = Convention()) -> np.ndarray:
    elements = config.elements if convention.order == "listed" else config.elements[::-1]
    u = np.eye(2, dtype=complex)
    for e in elements:
        u = element_matrix(e, convention.retardance_sign) @ u
    return u


def measured_observable(config: WaveplateChainConfig, convention: Convention = Convention()) -> np.ndarray:
    u = jones_chain(config, convention)
    return u.conj().T @ pauli("Z").matrix @ u


@dataclass(frozen=True)
class MatchReport:
    matched: bool
    residual: float
    convention: Convention
    sign: int  # +1 if U^dag Z U = target, -1 if it equals -target
    observable: np.ndarray


def verify_setting(
    config: WaveplateChainConfig,
    target: Observable,
    conventions: Iterable[Convention] = CONVENTIONS,
    tol: float = MATCH_TOL,
) -> MatchReport:
    """Best match of ``U^dag Z U`` against ``+-target`` over the convention set."""
    if target.dim != 2 or not target.is_dichotomic():
        raise ValueError("target must be a dichotomic qubit observable")
    best = None
    for conv in conventions:
        obs = measured_observable(config, conv)
        for sign in (1, -1):
            r = float(np.linalg.norm(obs - sign * target.matrix))
            if best is None or r < best.residual - 1e-15:
                best = MatchReport(r < tol, r, conv, sign, obs)
    return best


def bloch_vector(op: np.ndarray) -> np.ndarray:
    return np.array([np.trace(op @ pauli(k).matrix).real / 2 for k in "XYZ"])


def frame_aligned_residual(
    configs: Sequence[WaveplateChainConfig],
    targets: Sequence[Observable],
    convention: Convention = Convention(),
) -> tuple[float, np.ndarray]:
    """Residual after the best common rotation of the measured Bloch axes onto the targets.

    A fixed polarisation rotation in front of an analyser (for instance an
    uncompensated fibre) rotates all of its settings together. This
    diagnostic finds the best common proper rotation, allowing each row an
    outcome relabelling, and returns the largest per-row Bloch-vector residual
    and the rotation.
    """
    measured = np.array([bloch_vector(measured_observable(c, convention)) for c in configs])
    wanted = np.array([bloch_vector(t.matrix) for t in targets])
    best = (np.inf, np.eye(3))
    for signs in itertools.product((1, -1), repeat=len(configs)):
        w = wanted * np.array(signs)[:, None]
        h = measured.T @ w
        u, _, vt = np.linalg.svd(h)
        d = np.sign(np.linalg.det(vt.T @ u.T))
        rot = vt.T @ np.diag([1, 1, d]) @ u.T
        res = float(np.max(np.linalg.norm(measured @ rot.T - w, axis=1)))
        if res < best[0]:
            best = (res, rot)
    return best
