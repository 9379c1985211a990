"""Post-hoc metrics on traces: disagreement, cluster values, event statistics.

All functions are pure over immutable traces and freely concurrent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .engine import Trace

# Matches visual convergence at the scales the bundled scenarios run at.
CONSENSUS_TOL = 1e-2


def disagreement(states) -> float:
    """Largest pairwise state distance; 0 by convention for a single agent."""
    arr = np.asarray(states, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, np.newaxis]
    if arr.shape[0] <= 1:
        return 0.0
    diff = arr[:, np.newaxis, :] - arr[np.newaxis, :, :]
    return float(np.sqrt((diff * diff).sum(axis=-1)).max())


def disagreement_series(trace: Trace) -> np.ndarray:
    """Disagreement at every grid point of the trace."""
    s = trace.states
    diff = s[:, :, np.newaxis, :] - s[:, np.newaxis, :, :]
    return np.sqrt((diff * diff).sum(axis=-1)).max(axis=(1, 2))


def laplacian_disagreement(states, lap: np.ndarray) -> float:
    """Quadratic-form alternative metric sum_c x_c' L x_c."""
    arr = np.asarray(states, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, np.newaxis]
    return float(np.einsum("ic,ij,jc->", arr, lap, arr))


def settle_time(trace: Trace, tol: float = CONSENSUS_TOL) -> float | None:
    """First time from which disagreement stays below tol, or None."""
    series = disagreement_series(trace)
    below = series < tol
    # suffix-and: the earliest index after which every later value is below tol
    ok = np.logical_and.accumulate(below[::-1])[::-1]
    idx = np.flatnonzero(ok)
    return float(trace.times[idx[0]]) if idx.size else None


@dataclass(frozen=True)
class ClusterSummary:
    members: tuple
    mean: np.ndarray
    intra_disagreement: float
    converged: bool


@dataclass(frozen=True)
class ConsensusReport:
    final_disagreement: float
    clusters: tuple
    converged: bool
    settle_time: float | None
    tolerance: float


def cluster_report(trace: Trace, partition, tol: float = CONSENSUS_TOL) -> ConsensusReport:
    """Per-cluster final means and convergence flags for a disjoint cover.

    The partition must cover every agent exactly once with nonempty blocks.
    """
    n = trace.n_agents
    seen: set = set()
    blocks = []
    for block in partition:
        members = sorted(int(i) for i in block)
        if not members:
            raise ValueError("partition blocks must be nonempty")
        for i in members:
            if not 1 <= i <= n:
                raise ValueError(f"agent index {i} outside 1..{n}")
            if i in seen:
                raise ValueError(f"agent {i} appears in more than one block")
            seen.add(i)
        blocks.append(tuple(members))
    if len(seen) != n:
        raise ValueError("partition does not cover every agent")

    final = trace.states[-1]
    clusters = []
    for members in blocks:
        rows = [i - 1 for i in members]
        intra = disagreement(final[rows])
        clusters.append(ClusterSummary(
            members=members,
            mean=final[rows].mean(axis=0),
            intra_disagreement=intra,
            converged=intra < tol,
        ))
    global_final = disagreement(final)
    return ConsensusReport(
        final_disagreement=global_final,
        clusters=tuple(clusters),
        converged=global_final < tol,
        settle_time=settle_time(trace, tol),
        tolerance=tol,
    )


@dataclass(frozen=True)
class AgentEventStats:
    count: int
    min_gap: float | None
    mean_gap: float | None
    max_gap: float | None


@dataclass(frozen=True)
class EventStats:
    """Inter-event statistics per agent; gaps are undefined below two events."""

    per_agent: dict
    _times: tuple

    def events_after(self, i: int, t: float) -> int:
        return int(np.count_nonzero(self._times[i - 1] > t))


def inter_event_stats(trace: Trace) -> EventStats:
    per_agent = {}
    for i in range(1, trace.n_agents + 1):
        evts = trace.events_for(i)
        if evts.size < 2:
            per_agent[i] = AgentEventStats(int(evts.size), None, None, None)
            continue
        gaps = np.diff(evts)
        per_agent[i] = AgentEventStats(
            count=int(evts.size),
            min_gap=float(gaps.min()),
            mean_gap=float(gaps.mean()),
            max_gap=float(gaps.max()),
        )
    return EventStats(per_agent, trace.events)
