"""Noise and analyser configuration files (INI syntax).

Schema::

    [noise]
    fidelity_s1 = 0.9852        # or p1 = ... (Werner weight)
    fidelity_s2 = 0.9892        # or p2 = ...
    visibility = 0.943
    setting_fidelity = 1.0      # optional, symmetric outcome flips
    alice_fidelities = ...      # optional, six comma-separated values
    claire_fidelities = ...     # optional, three values

    [sampling]
    settings = scored           # or "experiment" (all 18 pairs, unscored dropped)

    [chain alice 1]
    elements = QWP@45, PM@0, QWP@-45, PM@pi/2, L8@45
    target = Z+X                # normalised combination of X, Y, Z
"""

from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, field
from importlib.resources import files

import numpy as np

from .jones import WaveplateChainConfig
from .noise import NoiseParams, p_from_fidelity
from .quantum import Observable, pauli


class ConfigError(ValueError):
    """Malformed configuration, optionally tagged with a 1-based line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


def fixture_path(name: str):
    """Path of a configuration shipped with the package (``paper-noise.cfg``, ``paper-spacetime.cfg``)."""
    return files("artifact").joinpath("data").joinpath(name)


def read_fixture(name: str) -> str:
    return fixture_path(name).read_text(encoding="utf-8")


def line_of(text: str, section: str, key: str | None = None) -> int | None:
    """Line number of ``key`` inside ``[section]`` (or of the header when ``key`` is None)."""
    in_section = False
    for n, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if s.startswith("["):
            in_section = s == f"[{section}]"
            if in_section and key is None:
                return n
            continue
        if in_section and key is not None and re.match(rf"^{re.escape(key)}\s*[=:]", s):
            return n
    return None


def parse_ini(text: str) -> configparser.ConfigParser:
    if not text.strip():
        raise ConfigError("configuration is empty", 1)
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc).splitlines()[0], getattr(exc, "lineno", None)) from exc
    return cp


_TERM = re.compile(r"\s*([+-]?)\s*(\d*\.?\d*)\s*\*?\s*([XYZ])")


def parse_target(text: str) -> Observable:
    """``"Z+X"`` or ``"-0.5X + Y"`` as the normalised observable n . sigma."""
    pos, vec = 0, {"X": 0.0, "Y": 0.0, "Z": 0.0}
    s = text.replace(" ", "")
    while pos < len(s):
        m = _TERM.match(s, pos)
        if not m or m.end() == pos:
            raise ValueError(f"cannot parse target {text!r}")
        sign, coeff, axis = m.groups()
        value = float(coeff) if coeff else 1.0
        vec[axis] += -value if sign == "-" else value
        pos = m.end()
    n = np.array([vec["X"], vec["Y"], vec["Z"]])
    norm = np.linalg.norm(n)
    if norm == 0:
        raise ValueError(f"target {text!r} is the zero vector")
    n = n / norm
    return Observable(sum(c * pauli(k).matrix for c, k in zip(n, "XYZ")))


@dataclass(frozen=True)
class ChainEntry:
    party: str
    index: int
    chain: WaveplateChainConfig
    target: Observable
    target_text: str


@dataclass(frozen=True)
class NoiseConfig:
    noise: NoiseParams
    sampling: str = "scored"
    chains: tuple[ChainEntry, ...] = field(default_factory=tuple)


def _floats(raw: str, n: int, what: str) -> tuple[float, ...]:
    vals = tuple(float(v) for v in raw.split(","))
    if len(vals) != n:
        raise ValueError(f"{what} needs {n} values, got {len(vals)}")
    return vals


def load_noise_config(text: str) -> NoiseConfig:
    cp = parse_ini(text)
    if not cp.has_section("noise"):
        raise ConfigError("missing [noise] section")
    sec = cp["noise"]

    def number(key: str, default: float | None = None) -> float | None:
        if key not in sec:
            return default
        try:
            return float(sec[key])
        except ValueError:
            raise ConfigError(f"{key} must be a number, got {sec[key]!r}", line_of(text, "noise", key)) from None

    def weight(idx: int) -> float:
        p, f = number(f"p{idx}"), number(f"fidelity_s{idx}")
        if p is not None and f is not None:
            raise ConfigError(f"give either p{idx} or fidelity_s{idx}, not both", line_of(text, "noise", f"p{idx}"))
        if f is not None:
            return p_from_fidelity(f)
        return 1.0 if p is None else p

    try:
        alice = claire = None
        if "alice_fidelities" in sec:
            alice = tuple(1 - f for f in _floats(sec["alice_fidelities"], 6, "alice_fidelities"))
        if "claire_fidelities" in sec:
            claire = tuple(1 - f for f in _floats(sec["claire_fidelities"], 3, "claire_fidelities"))
        params = NoiseParams(
            weight(1), weight(2), number("visibility", 1.0), number("setting_fidelity", 1.0), alice, claire
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc), line_of(text, "noise")) from exc

    sampling = cp.get("sampling", "settings", fallback="scored").strip()
    if sampling not in ("scored", "experiment"):
        raise ConfigError(f"unknown sampling mode {sampling!r}", line_of(text, "sampling", "settings"))

    chains = []
    for section in cp.sections():
        parts = section.split()
        if parts[0] != "chain":
            continue
        line = line_of(text, section)
        if len(parts) != 3 or parts[1] not in ("alice", "claire") or not parts[2].isdigit():
            raise ConfigError(f"chain section must be [chain alice|claire N], got [{section}]", line)
        try:
            chain = WaveplateChainConfig.parse(cp.get(section, "elements"))
            target_text = cp.get(section, "target")
            target = parse_target(target_text)
        except (configparser.NoOptionError, ValueError) as exc:
            raise ConfigError(f"[{section}]: {exc}", line) from exc
        chains.append(ChainEntry(parts[1], int(parts[2]), chain, target, target_text.strip()))
    return NoiseConfig(params, sampling, tuple(chains))
