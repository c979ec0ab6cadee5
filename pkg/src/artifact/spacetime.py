"""Space-like separation margins between timed events at distant nodes.

Each condition compares the light travel time between two nodes with the
time the later-relevant event could still be running:

    margin = L / c - max_i (t + tau_i)

All lengths are metres, all times nanoseconds.
"""

from __future__ import annotations

import itertools
import json
import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .config import ConfigError, line_of as _line_of, parse_ini

C_M_PER_NS = 0.299792458
DEFAULT_K = 3.0


@dataclass(frozen=True)
class Measured:
    value: float
    sigma: float = 0.0

    def __post_init__(self) -> None:
        if self.sigma < 0:
            raise ValueError("sigma must be non-negative")

    def __str__(self) -> str:
        return f"{self.value:g} +- {self.sigma:g}"


def _pair(a: str, b: str) -> frozenset:
    return frozenset((a, b))


@dataclass(frozen=True)
class SiteGraph:
    nodes: tuple[str, ...]
    distances: dict = field(default_factory=dict)  # frozenset({u, v}) -> Measured
    order: tuple[tuple[str, str], ...] = ()

    def __post_init__(self) -> None:
        for key, d in self.distances.items():
            if len(key) != 2 or not key <= set(self.nodes):
                raise ValueError(f"distance {sorted(key)} references an unknown node")
            if d.value <= 0:
                raise ValueError(f"distance {sorted(key)} must be positive")
        bad = self.triangle_violations()
        if bad:
            raise ValueError("triangle inequality violated beyond 3 sigma: " + "; ".join(bad))

    def distance(self, a: str, b: str) -> Measured:
        try:
            return self.distances[_pair(a, b)]
        except KeyError:
            raise KeyError(f"no distance between {a} and {b}") from None

    def triangle_violations(self, k: float = 3.0) -> list[str]:
        out = []
        for u, v, w in itertools.permutations(self.nodes, 3):
            if u > v:
                continue
            try:
                uv, uw, wv = self.distance(u, v), self.distance(u, w), self.distance(w, v)
            except KeyError:
                continue
            excess = uv.value - uw.value - wv.value
            if excess > k * math.sqrt(uv.sigma**2 + uw.sigma**2 + wv.sigma**2):
                out.append(f"{u}-{v} exceeds path via {w} by {excess:.3g} m")
        return out


@dataclass(frozen=True)
class TimedEvent:
    label: str
    node: str
    tau: Measured
    t_earliest: Measured | None = None

    def __post_init__(self) -> None:
        if self.tau.value < 0:
            raise ValueError(f"event {self.label} has negative duration")


@dataclass(frozen=True)
class SeparationCondition:
    """Events ``first`` and ``second`` must be space-like separated.

    ``delay`` is the start of ``second`` relative to ``first`` (taken from the
    events' ``t_earliest`` when omitted); ``durations`` names the events whose
    durations enter the max (one-sided with one entry, two-sided with two).
    """

    label: str
    first: str
    second: str
    durations: tuple[str, ...]
    delay: Measured | None = None
    distance: tuple[str, str] | None = None
    expected: Measured | None = None

    @property
    def kind(self) -> str:
        return "max" if len(self.durations) > 1 else "one-sided"


@dataclass(frozen=True)
class MarginReport:
    label: str
    margin: float
    sigma: float
    passed: bool
    expected: Measured | None = None

    @property
    def deviation(self) -> float | None:
        return None if self.expected is None else self.margin - self.expected.value

    def to_dict(self) -> dict:
        d = {"label": self.label, "margin_ns": self.margin, "sigma_ns": self.sigma, "pass": self.passed}
        if self.expected is not None:
            d["expected_ns"] = self.expected.value
            d["expected_sigma_ns"] = self.expected.sigma
        return d


def _resolve(cond: SeparationCondition, graph: SiteGraph, events: dict[str, TimedEvent]):
    missing = [e for e in (cond.first, cond.second, *cond.durations) if e not in events]
    if missing:
        raise KeyError(f"condition {cond.label}: unknown event(s) {', '.join(sorted(set(missing)))}")
    nodes = cond.distance or (events[cond.first].node, events[cond.second].node)
    dist = graph.distance(*nodes)
    if cond.delay is not None:
        delay = cond.delay
    else:
        t1, t2 = events[cond.first].t_earliest, events[cond.second].t_earliest
        if t1 is None or t2 is None:
            raise KeyError(f"condition {cond.label}: no delay given and events lack start times")
        delay = Measured(t2.value - t1.value, math.hypot(t1.sigma, t2.sigma))
    return dist, delay, [events[e].tau for e in cond.durations]


def margin(
    cond: SeparationCondition,
    graph: SiteGraph,
    events: dict[str, TimedEvent] | Sequence[TimedEvent],
    k: float = DEFAULT_K,
) -> MarginReport:
    if not isinstance(events, dict):
        events = {e.label: e for e in events}
    dist, delay, taus = _resolve(cond, graph, events)
    if not taus:
        raise ValueError(f"condition {cond.label} names no durations")
    if any(t.value < 0 for t in taus):
        raise ValueError(f"condition {cond.label} has a negative duration")
    light = dist.value / C_M_PER_NS
    reach = [delay.value + t.value for t in taus]
    sigmas = [math.sqrt((dist.sigma / C_M_PER_NS) ** 2 + delay.sigma**2 + t.sigma**2) for t in taus]
    i = max(range(len(reach)), key=lambda j: reach[j])
    sigma = sigmas[i]
    for j in range(len(reach)):
        # near-tied branches: report the more conservative sigma
        if j != i and reach[i] - reach[j] <= max(sigmas[i], sigmas[j]):
            sigma = max(sigma, sigmas[j])
    m = light - reach[i]
    return MarginReport(cond.label, m, sigma, m > k * sigma, cond.expected)


def verify_all(
    graph: SiteGraph,
    events: dict[str, TimedEvent] | Sequence[TimedEvent],
    conditions: Iterable[SeparationCondition],
    k: float = DEFAULT_K,
) -> list[MarginReport]:
    """One report per condition; every unresolvable condition is listed in a single error."""
    if not isinstance(events, dict):
        events = {e.label: e for e in events}
    reports, problems = [], []
    for cond in conditions:
        try:
            reports.append(margin(cond, graph, events, k))
        except (KeyError, ValueError) as exc:
            problems.append(str(exc).strip("'\""))
    if problems:
        raise ConfigError("unresolved conditions:\n  " + "\n  ".join(problems))
    return reports


def all_pass(reports: Sequence[MarginReport]) -> bool:
    return all(r.passed for r in reports)


# --- configuration files -------------------------------------------------

_MEASURED = re.compile(r"^\s*([-+]?\d*\.?\d+(?:[eE][-+]?\d+)?)\s*(?:(?:\+-|±)\s*(\d*\.?\d+(?:[eE][-+]?\d+)?))?\s*$")


def parse_measured(text: str) -> Measured:
    m = _MEASURED.match(text)
    if not m:
        raise ValueError(f"expected 'value +- sigma', got {text!r}")
    return Measured(float(m.group(1)), float(m.group(2) or 0.0))


@dataclass(frozen=True)
class SpacetimeConfig:
    graph: SiteGraph
    events: dict[str, TimedEvent]
    conditions: tuple[SeparationCondition, ...]
    k: float = DEFAULT_K


def load_config(text: str) -> SpacetimeConfig:
    """Parse the INI-style space-time configuration (schema in the README)."""
    cp = parse_ini(text)

    def need(section: str, key: str) -> str:
        if not cp.has_option(section, key):
            raise ConfigError(f"[{section}] is missing '{key}'", _line_of(text, section))
        return cp.get(section, key)

    def measured(section: str, key: str, raw: str) -> Measured:
        try:
            return parse_measured(raw)
        except ValueError as exc:
            raise ConfigError(str(exc), _line_of(text, section, key)) from exc

    for section in ("nodes", "distances", "events"):
        if not cp.has_section(section):
            raise ConfigError(f"missing [{section}] section")
    nodes = tuple(n.strip() for n in need("nodes", "names").split(",") if n.strip())
    if len(set(nodes)) != len(nodes):
        raise ConfigError("duplicate node names", _line_of(text, "nodes", "names"))

    distances, order = {}, []
    for key, raw in cp.items("distances"):
        parts = [p.strip() for p in key.split("-")]
        line = _line_of(text, "distances", key)
        if len(parts) != 2:
            raise ConfigError(f"distance key {key!r} must look like NodeA-NodeB", line)
        for p in parts:
            if p not in nodes:
                raise ConfigError(f"unknown node {p!r} in distance {key!r}", line)
        distances[_pair(*parts)] = measured("distances", key, raw)
        order.append((parts[0], parts[1]))
    try:
        graph = SiteGraph(nodes, distances, tuple(order))
    except ValueError as exc:
        raise ConfigError(str(exc), _line_of(text, "distances")) from exc

    events = {}
    for label, raw in cp.items("events"):
        line = _line_of(text, "events", label)
        fields = [f.strip() for f in raw.split(",")]
        if len(fields) not in (2, 3):
            raise ConfigError(f"event {label!r} must be 'node, tau +- s[, start +- s]'", line)
        if fields[0] not in nodes:
            raise ConfigError(f"event {label!r} at unknown node {fields[0]!r}", line)
        tau = measured("events", label, fields[1])
        if tau.value < 0:
            raise ConfigError(f"event {label!r} has negative duration", line)
        start = measured("events", label, fields[2]) if len(fields) == 3 else None
        events[label] = TimedEvent(label, fields[0], tau, start)

    conditions = []
    for section in cp.sections():
        if not section.startswith("condition "):
            continue
        label = section[len("condition "):].strip()
        pair = [e.strip() for e in need(section, "events").split(",")]
        durations = tuple(e.strip() for e in need(section, "durations").split(",") if e.strip())
        for e in (*pair, *durations):
            if e not in events:
                raise ConfigError(f"condition {label!r} references unknown event {e!r}", _line_of(text, section))
        if len(pair) != 2 or not 1 <= len(durations) <= 2:
            raise ConfigError(f"condition {label!r} needs two events and one or two durations", _line_of(text, section))
        delay = measured(section, "delay", cp.get(section, "delay")) if cp.has_option(section, "delay") else None
        expected = measured(section, "expected", cp.get(section, "expected")) if cp.has_option(section, "expected") else None
        dist_key = None
        if cp.has_option(section, "distance"):
            dist_key = tuple(p.strip() for p in cp.get(section, "distance").split("-"))
            if len(dist_key) != 2 or any(p not in nodes for p in dist_key):
                raise ConfigError(f"condition {label!r} has a bad distance key", _line_of(text, section, "distance"))
        nodes_used = dist_key or (events[pair[0]].node, events[pair[1]].node)
        if _pair(*nodes_used) not in distances:
            raise ConfigError(
                f"condition {label!r} needs the distance {nodes_used[0]}-{nodes_used[1]}", _line_of(text, section)
            )
        conditions.append(SeparationCondition(label, pair[0], pair[1], durations, delay, dist_key, expected))

    k = float(cp.get("settings", "k_sigma")) if cp.has_option("settings", "k_sigma") else DEFAULT_K
    return SpacetimeConfig(graph, events, tuple(conditions), k)


def dump_config(cfg: SpacetimeConfig) -> str:
    """Canonical text form; ``dump_config(load_config(dump_config(c)))`` is a fixed point."""
    lines = ["[settings]", f"k_sigma = {cfg.k:g}", "", "[nodes]", "names = " + ", ".join(cfg.graph.nodes), "", "[distances]"]
    order = list(cfg.graph.order) or [tuple(sorted(k)) for k in cfg.graph.distances]
    for a, b in order:
        lines.append(f"{a}-{b} = {cfg.graph.distance(a, b)}")
    lines += ["", "[events]"]
    for e in cfg.events.values():
        entry = f"{e.label} = {e.node}, {e.tau}"
        if e.t_earliest is not None:
            entry += f", {e.t_earliest}"
        lines.append(entry)
    for c in cfg.conditions:
        lines += ["", f"[condition {c.label}]", f"events = {c.first}, {c.second}", "durations = " + ", ".join(c.durations)]
        if c.delay is not None:
            lines.append(f"delay = {c.delay}")
        if c.distance is not None:
            lines.append(f"distance = {c.distance[0]}-{c.distance[1]}")
        if c.expected is not None:
            lines.append(f"expected = {c.expected}")
    return "\n".join(lines) + "\n"


def format_table(reports: Sequence[MarginReport]) -> str:
    head = f"{'condition':<12} {'margin (ns)':>12} {'sigma':>7} {'expected':>12} {'pass':>5}"
    rows = [head, "-" * len(head)]
    for r in reports:
        exp = f"{r.expected.value:g}+-{r.expected.sigma:g}" if r.expected else "-"
        rows.append(f"{r.label:<12} {r.margin:>12.1f} {r.sigma:>7.1f} {exp:>12} {'yes' if r.passed else 'NO':>5}")
    return "\n".join(rows)


def reports_json(reports: Sequence[MarginReport]) -> str:
    return json.dumps({"all_pass": all_pass(reports), "conditions": [r.to_dict() for r in reports]}, indent=2)
