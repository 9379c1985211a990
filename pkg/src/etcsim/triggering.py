"""Event-triggered mechanisms and the broadcast-buffer information model.

Two trigger rules are provided:

* combinational (CS): an agent monitors the drift of its neighborhood
  tracking error q_i = sum_j (xhat_j - x_i) against the held sample taken
  at its own last event, firing when ||q_i(t) - q_i(t_k)|| >= eta*||q_i(t)||;
* state-based (S): a scalar agent monitors the drift of its own state
  against the held sample, firing when e_i^2 >= eta*(sum_j (x_i - xhat_j))^2.

Agents learn neighbor states only from broadcasts made at the neighbor's
own events; every occurrence of a neighbor state in a predicate or control
uses the last-broadcast value xhat_j. A scenario may set a staleness window
after which a silent neighbor's broadcast is dropped from the neighbor sums
(watchdog semantics for silent peers); by default broadcasts never expire.

Buffers are owned by a single simulation loop; snapshots may be shared
read-only.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .dynamics import GainMatrix
from .graph import Graph


class Mechanism(Enum):
    CS_ETM = "cs_etm"
    S_ETM = "s_etm"


@dataclass(frozen=True, eq=False)
class TriggerConfig:
    """Trigger rule selection plus per-agent thresholds in (0, 1)."""

    mechanism: Mechanism
    eta: np.ndarray
    stale_after: float | None = None

    def __post_init__(self):
        eta = np.atleast_1d(np.asarray(self.eta, dtype=float))
        if eta.ndim != 1:
            raise ValueError("eta must be a scalar or a flat per-agent array")
        if not np.all((eta > 0.0) & (eta < 1.0)):
            raise ValueError("every trigger threshold must lie in (0, 1)")
        object.__setattr__(self, "eta", eta)
        if self.stale_after is not None and not self.stale_after > 0.0:
            raise ValueError("stale_after must be positive when set")

    @classmethod
    def uniform(cls, mechanism: Mechanism, n_agents: int, eta: float,
                stale_after: float | None = None) -> "TriggerConfig":
        return cls(mechanism, np.full(n_agents, float(eta)), stale_after)


def _per_agent_states(x) -> np.ndarray:
    """(n, d) state stack; a flat length-n array reads as n scalar agents."""
    x = np.asarray(x, dtype=float)
    return x[:, np.newaxis] if x.ndim == 1 else x


class AgentBuffers:
    """Event-triggered state per agent: broadcasts, held samples, trigger times.

    ``broadcast_states[j]`` is the state agent j announced at its most recent
    event (identical for all observers). ``held_q``/``held_x`` are agent i's
    own samples frozen at its last event.
    """

    def __init__(self, graph: Graph, broadcast_states, broadcast_times,
                 held_q, held_x, last_trigger_time,
                 stale_after: float | None = None):
        self.graph = graph
        self.broadcast_states = broadcast_states
        self.broadcast_times = broadcast_times
        self.held_q = held_q
        self.held_x = held_x
        self.last_trigger_time = last_trigger_time
        self.stale_after = stale_after

    @classmethod
    def initialize(cls, graph: Graph, x0, t0: float = 0.0,
                   stale_after: float | None = None) -> "AgentBuffers":
        """Start-of-run convention: every agent samples and broadcasts at t0."""
        x0 = _per_agent_states(x0)
        if x0.shape[0] != graph.n_agents:
            raise ValueError(
                f"initial states have {x0.shape[0]} rows, expected {graph.n_agents}"
            )
        n = graph.n_agents
        buffers = cls(
            graph,
            broadcast_states=x0.copy(),
            broadcast_times=np.full(n, float(t0)),
            held_q=np.zeros_like(x0),
            held_x=x0.copy(),
            last_trigger_time=np.full(n, float(t0)),
            stale_after=stale_after,
        )
        buffers.held_q = buffers.tracking_errors(x0, t0)
        return buffers

    def fresh_mask(self, t: float | None) -> np.ndarray:
        """Agents whose last broadcast is still usable at time t."""
        if self.stale_after is None or t is None:
            return np.ones(self.graph.n_agents, dtype=bool)
        return (t - self.broadcast_times) <= self.stale_after

    def masked_adjacency(self, t: float | None):
        """Adjacency with stale broadcasters' columns zeroed, plus row degrees."""
        fresh = self.fresh_mask(t)
        if fresh.all():
            adjacency = self.graph.adjacency
        else:
            adjacency = self.graph.adjacency * fresh[np.newaxis, :]
        return adjacency, adjacency.sum(axis=1)

    def tracking_errors(self, x, t: float | None = None) -> np.ndarray:
        """q_i = sum over fresh neighbors j of (xhat_j - x_i), all agents at once."""
        x = _per_agent_states(x)
        adjacency, degrees = self.masked_adjacency(t)
        return adjacency @ self.broadcast_states - degrees[:, np.newaxis] * x

    def neighbor_broadcasts(self, i: int) -> dict:
        """Last-broadcast state of each neighbor of agent i (1-based keys)."""
        return {j: self.broadcast_states[j - 1].copy() for j in self.graph.neighbors(i)}

    def record_trigger_rows(self, rows, t: float, x, q_now) -> None:
        """Sample-and-broadcast for the given 0-based rows (engine fast path)."""
        self.held_q[rows] = q_now[rows]
        self.held_x[rows] = x[rows]
        self.broadcast_states[rows] = x[rows]
        self.broadcast_times[rows] = t
        self.last_trigger_time[rows] = t


def local_tracking_error(buffers: AgentBuffers, i: int, x_i,
                         t: float | None = None) -> np.ndarray:
    """q_i(t) for a single agent: sum of (xhat_j - x_i) over its fresh neighbors."""
    x_i = np.atleast_1d(np.asarray(x_i, dtype=float))
    fresh = buffers.fresh_mask(t)
    total = np.zeros_like(x_i)
    for j in buffers.graph.neighbors(i):
        if fresh[j - 1]:
            total = total + (buffers.broadcast_states[j - 1] - x_i)
    return total


def cs_measurement_error(buffers: AgentBuffers, i: int, q_now) -> np.ndarray:
    """Drift of the tracking error since agent i's last event: q_i(t) - q_i(t_k)."""
    return np.atleast_1d(np.asarray(q_now, dtype=float)) - buffers.held_q[i - 1]


def cs_trigger_check(error, q_now, eta: float) -> bool:
    """Fire when ||error|| >= eta*||q_now|| (non-strict, so 0 >= 0 fires)."""
    error = np.atleast_1d(np.asarray(error, dtype=float))
    q_now = np.atleast_1d(np.asarray(q_now, dtype=float))
    return bool(np.linalg.norm(error) >= eta * np.linalg.norm(q_now))


def cs_control(gain: GainMatrix, buffers: AgentBuffers, i: int) -> np.ndarray:
    """u_i = K q_i(t_k), constant between agent i's own events."""
    return gain.k @ buffers.held_q[i - 1]


def s_measurement_error(held_x, x_now) -> np.ndarray:
    """e_i(t) = x_i(t_k) - x_i(t)."""
    return np.atleast_1d(np.asarray(held_x, dtype=float)) - np.atleast_1d(
        np.asarray(x_now, dtype=float)
    )


def s_trigger_check(buffers: AgentBuffers, i: int, error, x_i, eta: float,
                    t: float | None = None) -> bool:
    """Fire when e_i^2 >= eta*(sum_j (x_i - xhat_j))^2. Scalar states only."""
    error = np.atleast_1d(np.asarray(error, dtype=float))
    x_i = np.atleast_1d(np.asarray(x_i, dtype=float))
    if error.size != 1 or x_i.size != 1:
        raise ValueError("state-based triggering is defined for scalar agents only")
    relative = -local_tracking_error(buffers, i, x_i, t)
    return bool(error[0] ** 2 >= eta * relative[0] ** 2)


def s_control(gain: GainMatrix, buffers: AgentBuffers, i: int,
              t: float | None = None) -> np.ndarray:
    """u_i = -K sum_j (x_i(t_k) - xhat_j), re-evaluated at i's or a neighbor's event."""
    fresh = buffers.fresh_mask(t)
    held = buffers.held_x[i - 1]
    total = np.zeros_like(held)
    for j in buffers.graph.neighbors(i):
        if fresh[j - 1]:
            total = total + (held - buffers.broadcast_states[j - 1])
    return -(gain.k @ total)


def on_trigger(buffers: AgentBuffers, i: int, t: float, x_i, q_now) -> None:
    """Sample-and-broadcast for agent i: freeze q and x, announce the state.

    Immediately afterwards both measurement errors for agent i are exactly
    zero and every neighbor's buffer holds x_i(t).
    """
    x_i = np.atleast_1d(np.asarray(x_i, dtype=float))
    q_now = np.atleast_1d(np.asarray(q_now, dtype=float))
    row = i - 1
    buffers.held_q[row] = q_now
    buffers.held_x[row] = x_i
    buffers.broadcast_states[row] = x_i
    buffers.broadcast_times[row] = t
    buffers.last_trigger_time[row] = t
