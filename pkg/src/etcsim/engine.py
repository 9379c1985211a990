"""Deterministic fixed-step simulation of event-triggered consensus under attack.

Within each step the order is fixed: arm any replay due at this grid point,
filter measurements through active sensor attacks, evaluate trigger
predicates, sample-and-broadcast for fired agents, compute nominal controls,
add actuator attacks, then integrate with the inputs held constant. This
ordering makes "measurement error is zero right after a trigger" exact on
the grid. A run is single-threaded and fully determined by (Scenario, seed);
independent runs may execute concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .attack import (
    AttackChannel,
    DegenerateReplayError,
    ReplayState,
    apply_actuator_attack,
    apply_sensor_attack,
    arm_replay,
)
from .dynamics import (
    GainMatrix,
    LinearDynamics,
    integration_substeps,
    rk4_step,
    verify_gain,
)
from .graph import Graph, is_connected, laplacian_eigenvalues
from .triggering import AgentBuffers, Mechanism, TriggerConfig

# States beyond this magnitude truncate the run with a divergence flag.
DIVERGENCE_LIMIT = 1e12

# Triggering at every step over this many consecutive steps is the
# discrete-time stand-in for Zeno behavior (events cannot be closer than dt).
CONTINUOUS_WINDOW = 100


class AgentFlag(Enum):
    NOMINAL = "nominal"
    NON_TRIGGERING = "non_triggering"
    CONTINUOUS_TRIGGERING = "continuous_triggering"
    DIVERGED = "diverged"


@dataclass(frozen=True, eq=False)
class Scenario:
    """Complete simulation input; validated on construction.

    The graph must be connected and the gain must pass the per-eigenvalue
    stability check unless ``allow_unstable_gain`` is set for adversarial
    studies.
    """

    graph: Graph
    dynamics: LinearDynamics
    gain: GainMatrix
    trigger: TriggerConfig
    attacks: tuple
    x0: np.ndarray
    horizon: float
    dt: float
    seed: int = 0
    allow_unstable_gain: bool = False

    def __post_init__(self):
        object.__setattr__(self, "attacks", tuple(self.attacks))
        n, d = self.graph.n_agents, self.dynamics.state_dim
        x0 = np.asarray(self.x0, dtype=float)
        if x0.ndim == 1:
            x0 = x0[:, np.newaxis]
        if x0.shape != (n, d):
            raise ValueError(f"x0 shape {x0.shape} does not match ({n}, {d})")
        object.__setattr__(self, "x0", x0)
        if self.dt <= 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.horizon < self.dt:
            raise ValueError("horizon must be at least one step")
        if self.trigger.eta.shape != (n,):
            raise ValueError(
                f"trigger thresholds have shape {self.trigger.eta.shape}, expected ({n},)"
            )
        if self.trigger.mechanism is Mechanism.S_ETM and (
            d != 1 or self.dynamics.input_dim != 1
        ):
            raise ValueError("state-based triggering supports scalar agents only")
        if not is_connected(self.graph):
            raise ValueError("communication graph must be connected")
        sensor_seen, actuator_seen = set(), set()
        for spec in self.attacks:
            if spec.agent > n:
                raise ValueError(f"attack targets agent {spec.agent}, only {n} agents")
            book = sensor_seen if spec.is_sensor else actuator_seen
            if spec.agent in book:
                raise ValueError(
                    f"agent {spec.agent} has more than one "
                    f"{'sensor' if spec.is_sensor else 'actuator'} attack"
                )
            book.add(spec.agent)
        if not self.allow_unstable_gain and n >= 2:
            report = verify_gain(self.dynamics, self.gain, laplacian_eigenvalues(self.graph))
            if not report.all_hurwitz:
                raise ValueError(
                    "gain fails the per-eigenvalue stability check; "
                    "set allow_unstable_gain for adversarial studies"
                )

    @property
    def n_steps(self) -> int:
        return int(round(self.horizon / self.dt))

    def with_overrides(self, **kwargs) -> "Scenario":
        return replace(self, **kwargs)


@dataclass(frozen=True)
class ReplayRecord:
    """Attack-log entry for one replay arming attempt."""

    agent: int
    armed_at: float
    theta: float | None = None
    bounds: tuple | None = None
    eavesdropped_norm: float | None = None
    degenerate: bool = False
    note: str = ""


@dataclass(eq=False)
class Trace:
    """Full simulation output on the step grid.

    ``states`` has one row per grid point starting at x0; ``controls``,
    ``trigger_lhs`` and ``trigger_rhs`` have one row per step (the values in
    force on [t_k, t_k + dt)). ``events[i]`` are agent i+1's trigger times,
    strictly increasing with an entry at t = 0.
    """

    times: np.ndarray
    states: np.ndarray
    controls: np.ndarray
    events: tuple
    trigger_lhs: np.ndarray
    trigger_rhs: np.ndarray
    attack_log: tuple
    diverged_at: float | None = None
    flags: dict = field(default_factory=dict)

    @property
    def n_agents(self) -> int:
        return self.states.shape[1]

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    def events_for(self, i: int) -> np.ndarray:
        return self.events[i - 1]


def simulate(scenario: Scenario) -> Trace:
    """Run one scenario to its horizon (or until divergence truncates it)."""
    g = scenario.graph
    dyn = scenario.dynamics
    n, d = g.n_agents, dyn.state_dim
    m = dyn.input_dim
    k_t = scenario.gain.k.T
    eta = scenario.trigger.eta
    combinational = scenario.trigger.mechanism is Mechanism.CS_ETM
    dt = scenario.dt
    steps = scenario.n_steps
    times = np.arange(steps + 1) * dt
    rng = np.random.default_rng(scenario.seed)

    x = scenario.x0.copy()
    buffers = AgentBuffers.initialize(g, x, t0=0.0,
                                      stale_after=scenario.trigger.stale_after)
    events = [[0.0] for _ in range(n)]

    sensor_specs = {s.agent - 1: s for s in scenario.attacks if s.is_sensor}
    actuator_specs = {s.agent - 1: s for s in scenario.attacks if s.is_actuator}
    # A replay arms at the first grid point at or past its onset.
    arm_step = {
        row: int(np.searchsorted(times, spec.onset))
        for row, spec in sensor_specs.items()
        if spec.channel is AttackChannel.SENSOR_REPLAY
    }
    replays: dict[int, ReplayState] = {}
    dead_replays: set[int] = set()
    attack_log: list[ReplayRecord] = []
    degrees = g.degrees

    states = np.empty((steps + 1, n, d))
    states[0] = x
    controls = np.empty((steps, n, m))
    trigger_lhs = np.empty((steps, n))
    trigger_rhs = np.empty((steps, n))
    diverged_at = None
    last = steps

    a_t = np.ascontiguousarray(dyn.a.T)
    b_t = np.ascontiguousarray(dyn.b.T)
    drift_free = not dyn.a.any()  # the classical step collapses to x + B u dt
    pieces, h = integration_substeps(dt)
    scalar = d == 1
    stale_after = scenario.trigger.stale_after
    adjacency_f = g.adjacency
    degrees_f = adjacency_f.sum(axis=1)
    degrees_col = degrees_f[:, np.newaxis]
    fresh_prev = np.ones(n, dtype=bool)
    sensor_items = tuple(sensor_specs.items())

    for k in range(steps):
        t = float(times[k])

        for row, due in arm_step.items():
            if k != due:
                continue
            spec = sensor_specs[row]
            try:
                state = arm_replay(buffers.held_q[row], eta[row], rng, t,
                                   theta=spec.theta)
            except DegenerateReplayError as exc:
                dead_replays.add(row)
                attack_log.append(ReplayRecord(
                    agent=row + 1, armed_at=t, degenerate=True,
                    eavesdropped_norm=0.0,
                    note=f"not armed: {exc}"))
            else:
                replays[row] = state
                note = "" if d == 1 else "vector state: no silencing guarantee"
                attack_log.append(ReplayRecord(
                    agent=row + 1, armed_at=t, theta=state.theta,
                    bounds=state.bounds,
                    eavesdropped_norm=float(np.linalg.norm(state.q_eavesdropped)),
                    note=note))

        if stale_after is not None:
            fresh = (t - buffers.broadcast_times) <= stale_after
            if (fresh != fresh_prev).any():
                adjacency_f = g.adjacency * fresh[np.newaxis, :]
                degrees_f = adjacency_f.sum(axis=1)
                degrees_col = degrees_f[:, np.newaxis]
                fresh_prev = fresh
        q_true = adjacency_f @ buffers.broadcast_states - degrees_col * x
        q_mon = q_true
        if sensor_items:
            q_mon = q_true.copy()
            for row, spec in sensor_items:
                if row in dead_replays:
                    continue  # degenerate replay: agent proceeds unattacked
                state = replays.get(row)
                if state is not None and t >= spec.onset:
                    q_mon[row] = state.q_compromised  # constant replayed feed
                elif spec.channel is AttackChannel.SENSOR_ADDITIVE:
                    q_mon[row] = apply_sensor_attack(
                        q_true[row], spec, None, t, degree=degrees[row])

        if combinational:
            drift = q_mon - buffers.held_q
            if scalar:
                lhs = np.abs(drift[:, 0])
                rhs = eta * np.abs(q_mon[:, 0])
            else:
                lhs = np.sqrt(np.einsum("ij,ij->i", drift, drift))
                rhs = eta * np.sqrt(np.einsum("ij,ij->i", q_mon, q_mon))
        else:
            err = buffers.held_x[:, 0] - x[:, 0]
            rel = q_mon[:, 0]  # relative sum is -q; squared below, sign immaterial
            lhs = err * err
            rhs = eta * rel * rel
        trigger_lhs[k] = lhs
        trigger_rhs[k] = rhs

        rows = np.flatnonzero(lhs >= rhs)
        if rows.size:
            # A 0 >= 0 firing whose samples and broadcast are already current
            # re-announces nothing; keep the event log to real announcements.
            idle = rows[(lhs[rows] == 0.0) & (rhs[rows] == 0.0)]
            if idle.size:
                changed = (x[idle] != buffers.broadcast_states[idle]).any(axis=1)
                keep = np.ones(rows.size, dtype=bool)
                keep[np.searchsorted(rows, idle[~changed])] = False
                rows = rows[keep]
            if rows.size:
                buffers.record_trigger_rows(rows, t, x, q_mon)
                for row in rows:
                    events[row].append(t)

        if combinational:
            u = buffers.held_q @ k_t
        else:
            u = -(degrees_col * buffers.held_x
                  - adjacency_f @ buffers.broadcast_states) @ k_t
        for row, spec in actuator_specs.items():
            u[row] = apply_actuator_attack(u[row], spec, t)
        controls[k] = u

        if drift_free:
            x = x + dt * (u @ b_t)
        else:
            for _ in range(pieces):
                x = rk4_step(a_t, b_t, x, u, h)
        states[k + 1] = x
        # NaN fails the comparison too, so one reduction covers both guards
        if not np.abs(x).max() <= DIVERGENCE_LIMIT:
            diverged_at = float(times[k + 1])
            last = k + 1
            break

    trace = Trace(
        times=times[: last + 1],
        states=states[: last + 1],
        controls=controls[:last],
        events=tuple(np.asarray(e) for e in events),
        trigger_lhs=trigger_lhs[:last],
        trigger_rhs=trigger_rhs[:last],
        attack_log=tuple(attack_log),
        diverged_at=diverged_at,
    )
    trace.flags = classify_agents(trace, scenario.attacks)
    return trace


def detect_non_triggering(trace: Trace, i: int, from_t: float) -> bool:
    """True iff agent i records zero events in the open-left window (from_t, horizon]."""
    evts = trace.events_for(i)
    return not bool(np.any(evts > from_t))


def detect_continuous_triggering(trace: Trace, i: int,
                                 window: int = CONTINUOUS_WINDOW) -> bool:
    """True iff agent i triggered on >= window consecutive grid steps somewhere."""
    if window < 2:
        raise ValueError(f"window must be at least 2 steps, got {window}")
    return longest_trigger_run(trace, i) >= window


def longest_trigger_run(trace: Trace, i: int) -> int:
    """Length (in steps) of agent i's longest run of consecutive-step triggers."""
    evts = trace.events_for(i)
    if evts.size == 0:
        return 0
    idx = np.searchsorted(trace.times, evts)
    gaps = np.diff(idx)
    breaks = np.flatnonzero(gaps != 1)
    # maximal blocks of unit gaps; a block of g unit gaps spans g+1 steps
    bounds = np.concatenate(([-1], breaks, [gaps.size]))
    return int(np.diff(bounds).max())  # (block length + 1) collapses to this


def classify_agents(trace: Trace, attacks, window: int = CONTINUOUS_WINDOW) -> dict:
    """Label each agent with its misbehavior flags (NOMINAL when none apply).

    Non-triggering is judged from the onset of the agent's sensor attack;
    agents without a sensor attack that simply go quiet are not misbehaving,
    and neither is the target of a replay that never armed.
    """
    sensor_onsets = {
        spec.agent: spec.onset for spec in attacks if spec.is_sensor
    }
    for record in trace.attack_log:
        if record.degenerate:
            sensor_onsets.pop(record.agent, None)
    horizon = trace.horizon
    flags = {}
    for i in range(1, trace.n_agents + 1):
        found = set()
        onset = sensor_onsets.get(i)
        if onset is not None and onset <= horizon and detect_non_triggering(trace, i, onset):
            found.add(AgentFlag.NON_TRIGGERING)
        if detect_continuous_triggering(trace, i, window):
            found.add(AgentFlag.CONTINUOUS_TRIGGERING)
        if trace.diverged_at is not None:
            final = trace.states[-1, i - 1]
            if not np.isfinite(final).all() or np.abs(final).max() > DIVERGENCE_LIMIT:
                found.add(AgentFlag.DIVERGED)
        flags[i] = frozenset(found) if found else frozenset({AgentFlag.NOMINAL})
    return flags
