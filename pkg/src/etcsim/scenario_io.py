"""Scenario file loading: YAML documents with explicit keyed sections.

Every validation failure names the offending section and field, e.g.
``trigger.eta: must lie in (0,1)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

from .attack import AttackChannel, AttackSpec, StepSignal
from .dynamics import GainMatrix, LinearDynamics
from .engine import Scenario
from .graph import build_graph
from .triggering import Mechanism, TriggerConfig


class ScenarioError(ValueError):
    """Parse or validation failure with a section.field-located message."""


@dataclass(frozen=True)
class ScenarioDocument:
    """A parsed scenario plus the file's output preferences."""

    scenario: Scenario
    output_dir: str | None
    plots: bool
    source: str


def parse_scenario(path) -> Scenario:
    """Load and validate a scenario file, returning the Scenario only."""
    return parse_scenario_file(path).scenario


def parse_scenario_file(path) -> ScenarioDocument:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise OSError(f"cannot read scenario file {path}: {exc}") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ScenarioError(f"{path.name}: not valid YAML ({exc})") from exc
    return scenario_from_dict(data, source=str(path))


def scenario_from_dict(data, source: str = "<dict>") -> ScenarioDocument:
    if not isinstance(data, dict):
        raise ScenarioError("document: top level must be a mapping of sections")

    graph_sec = _section(data, "graph")
    n = _field(graph_sec, "graph", "n", int, "must be a positive integer",
               check=lambda v: v >= 1)
    edges_raw = _field(graph_sec, "graph", "edges", list, "must be a list of index pairs")
    try:
        graph = build_graph(n, [tuple(e) for e in edges_raw])
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"graph.edges: {exc}") from exc

    dyn_sec = _section(data, "dynamics")
    dynamics = _build(LinearDynamics, "dynamics",
                      a=_matrix(dyn_sec, "dynamics", "a"),
                      b=_matrix(dyn_sec, "dynamics", "b"))

    gain_sec = _section(data, "gain")
    gain = _build(GainMatrix, "gain", k=_matrix(gain_sec, "gain", "k"))

    trig_sec = _section(data, "trigger")
    mech_raw = _field(trig_sec, "trigger", "mechanism", str,
                      "must be one of cs_etm, s_etm")
    try:
        mechanism = Mechanism(mech_raw.lower())
    except ValueError:
        raise ScenarioError("trigger.mechanism: must be one of cs_etm, s_etm") from None
    eta_raw = trig_sec.get("eta")
    if isinstance(eta_raw, (int, float)) and not isinstance(eta_raw, bool):
        eta = np.full(n, float(eta_raw))
    elif isinstance(eta_raw, list) and len(eta_raw) == n:
        eta = np.asarray(eta_raw, dtype=float)
    else:
        raise ScenarioError(f"trigger.eta: must be a number or a list of {n} numbers")
    if not np.all((eta > 0.0) & (eta < 1.0)):
        raise ScenarioError("trigger.eta: must lie in (0,1)")
    stale_after = trig_sec.get("stale_after")
    if stale_after is not None:
        if not isinstance(stale_after, (int, float)) or isinstance(stale_after, bool) \
                or stale_after <= 0:
            raise ScenarioError("trigger.stale_after: must be a positive number or omitted")
        stale_after = float(stale_after)
    trigger = TriggerConfig(mechanism, eta, stale_after)

    x0_raw = data.get("initial_states")
    if not isinstance(x0_raw, list) or len(x0_raw) != n:
        raise ScenarioError(f"initial_states: must be a list of {n} entries")
    try:
        x0 = np.asarray(x0_raw, dtype=float)
    except (TypeError, ValueError):
        raise ScenarioError("initial_states: entries must be numbers or equal-length lists") from None

    attacks = tuple(
        _parse_attack(entry, idx, n)
        for idx, entry in enumerate(data.get("attacks") or [])
    )

    sim_sec = _section(data, "sim")
    horizon = _field(sim_sec, "sim", "horizon", (int, float),
                     "must be a positive number", check=lambda v: v > 0)
    dt = _field(sim_sec, "sim", "dt", (int, float),
                "must be a positive number", check=lambda v: v > 0)
    seed = _field(sim_sec, "sim", "seed", int, "must be an integer", default=0)

    out_sec = data.get("outputs") or {}
    if not isinstance(out_sec, dict):
        raise ScenarioError("outputs: must be a mapping")
    output_dir = out_sec.get("directory")
    if output_dir is not None and not isinstance(output_dir, str):
        raise ScenarioError("outputs.directory: must be a string")
    plots = bool(out_sec.get("plots", False))

    try:
        scenario = Scenario(
            graph=graph, dynamics=dynamics, gain=gain, trigger=trigger,
            attacks=attacks, x0=x0, horizon=float(horizon), dt=float(dt),
            seed=int(seed),
            allow_unstable_gain=bool(data.get("allow_unstable_gain", False)),
        )
    except ValueError as exc:
        raise ScenarioError(f"scenario: {exc}") from exc
    return ScenarioDocument(scenario, output_dir, plots, source)


_CHANNELS = {c.value: c for c in AttackChannel}


def _parse_attack(entry, idx: int, n: int) -> AttackSpec:
    where = f"attacks[{idx}]"
    if not isinstance(entry, dict):
        raise ScenarioError(f"{where}: must be a mapping")
    channel_raw = entry.get("channel")
    channel = _CHANNELS.get(str(channel_raw).lower())
    if channel is None:
        raise ScenarioError(
            f"{where}.channel: must be one of {', '.join(sorted(_CHANNELS))}"
        )
    agent = entry.get("agent")
    if not isinstance(agent, int) or isinstance(agent, bool) or not 1 <= agent <= n:
        raise ScenarioError(f"{where}.agent: must be an agent index in 1..{n}")
    onset = entry.get("onset", 0.0)
    if not isinstance(onset, (int, float)) or isinstance(onset, bool) or onset < 0:
        raise ScenarioError(f"{where}.onset: must be a nonnegative number")
    signal = None
    if "signal" in entry and entry["signal"] is not None:
        knots = entry["signal"]
        if not isinstance(knots, list) or not all(
            isinstance(p, (list, tuple)) and len(p) == 2 for p in knots
        ):
            raise ScenarioError(f"{where}.signal: must be a list of [time, value] pairs")
        try:
            signal = StepSignal(tuple(p[0] for p in knots), tuple(p[1] for p in knots))
        except ValueError as exc:
            raise ScenarioError(f"{where}.signal: {exc}") from exc
    value = entry.get("value")
    if value is not None and (not isinstance(value, (int, float)) or isinstance(value, bool)):
        raise ScenarioError(f"{where}.value: must be a number")
    theta = entry.get("theta")
    if theta is not None and (not isinstance(theta, (int, float)) or isinstance(theta, bool)):
        raise ScenarioError(f"{where}.theta: must be a number")
    try:
        return AttackSpec(agent=agent, channel=channel, onset=float(onset),
                          value=None if value is None else float(value),
                          signal=signal,
                          theta=None if theta is None else float(theta))
    except ValueError as exc:
        raise ScenarioError(f"{where}: {exc}") from exc


def _section(data, name: str) -> dict:
    section = data.get(name)
    if not isinstance(section, dict):
        raise ScenarioError(f"{name}: required section missing or not a mapping")
    return section


def _field(section, sec_name, name, types, constraint, check=None, default=None):
    if name not in section:
        if default is not None:
            return default
        raise ScenarioError(f"{sec_name}.{name}: required field missing")
    value = section[name]
    if isinstance(value, bool) or not isinstance(value, types):
        raise ScenarioError(f"{sec_name}.{name}: {constraint}")
    if check is not None and not check(value):
        raise ScenarioError(f"{sec_name}.{name}: {constraint}")
    return value


def _matrix(section, sec_name, name):
    raw = section.get(name)
    if not isinstance(raw, list):
        raise ScenarioError(f"{sec_name}.{name}: must be a row-major matrix (list of rows)")
    try:
        return np.asarray(raw, dtype=float)
    except (TypeError, ValueError):
        raise ScenarioError(f"{sec_name}.{name}: rows must be equal-length number lists") from None


def _build(cls, sec_name, **kwargs):
    try:
        return cls(**kwargs)
    except ValueError as exc:
        raise ScenarioError(f"{sec_name}: {exc}") from exc
