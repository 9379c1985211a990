"""Shared builders for the test suite."""

import numpy as np

from etcsim.dynamics import GainMatrix, LinearDynamics
from etcsim.engine import Scenario
from etcsim.graph import build_graph, is_connected
from etcsim.triggering import Mechanism, TriggerConfig


def path_edges(n):
    return [(i, i + 1) for i in range(1, n)]


def random_connected_edges(rng, n, p=0.4):
    """Edge list of a connected Erdos-Renyi draw (rejection sampled)."""
    while True:
        edges = [
            (i + 1, j + 1)
            for i in range(n)
            for j in range(i + 1, n)
            if rng.random() < p
        ]
        if is_connected(build_graph(n, edges)):
            return edges


def scalar_scenario(n, edges, k=1.0, eta=0.01, mechanism=Mechanism.CS_ETM,
                    x0=None, horizon=10.0, dt=1e-3, attacks=(), seed=0,
                    stale_after=None, **kwargs):
    """Single-integrator scenario with uniform thresholds."""
    if x0 is None:
        x0 = np.linspace(1.0, -1.0, n)
    return Scenario(
        graph=build_graph(n, edges),
        dynamics=LinearDynamics.single_integrator(),
        gain=GainMatrix.scalar(k),
        trigger=TriggerConfig.uniform(mechanism, n, eta, stale_after),
        attacks=tuple(attacks),
        x0=np.asarray(x0, dtype=float),
        horizon=horizon,
        dt=dt,
        seed=seed,
        **kwargs,
    )


def event_steps(trace, i):
    """Grid-step indices of agent i's events."""
    return np.searchsorted(trace.times, trace.events_for(i))


def max_consecutive_run(trace, i, after=None):
    """Longest consecutive-step trigger run of agent i, optionally after a time."""
    evts = trace.events_for(i)
    if after is not None:
        evts = evts[evts > after]
    if evts.size == 0:
        return 0
    idx = np.searchsorted(trace.times, evts)
    gaps = np.diff(idx)
    breaks = np.flatnonzero(gaps != 1)
    bounds = np.concatenate(([-1], breaks, [gaps.size]))
    return int(np.diff(bounds).max())
