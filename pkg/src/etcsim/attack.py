"""Sensor and actuator attack models for compromised agents.

Sensor attacks intercept the neighborhood tracking error an agent's trigger
monitor sees; actuator attacks add a signal to the applied control. The
replay channel records the value held at the victim's most recent event and
replays it with a bounded random offset chosen so the trigger inequality can
never fire again (the offset interval comes from the closed forms below).
The offset construction is exact for scalar agents; it is exposed for vector
states but carries no silencing guarantee there.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np


class AttackChannel(Enum):
    SENSOR_REPLAY = "sensor_replay"
    SENSOR_ADDITIVE = "sensor_additive"
    ACTUATOR_CONSTANT = "actuator_constant"
    ACTUATOR_SIGNAL = "actuator_signal"


class DegenerateReplayError(ValueError):
    """Replay cannot arm: the eavesdropped sample has zero norm, so the
    admissible offset interval collapses."""


@dataclass(frozen=True)
class StepSignal:
    """Piecewise-constant signal from (time, value) knots; zero before the first."""

    times: tuple
    values: tuple

    def __post_init__(self):
        times = tuple(float(t) for t in self.times)
        values = tuple(float(v) for v in self.values)
        if len(times) != len(values) or not times:
            raise ValueError("signal needs matching, nonempty times and values")
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("signal times must be strictly increasing")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    def __call__(self, t: float) -> float:
        idx = int(np.searchsorted(self.times, t, side="right")) - 1
        return 0.0 if idx < 0 else self.values[idx]


@dataclass(frozen=True)
class AttackSpec:
    """One attack on one agent: channel, onset time, and channel parameters."""

    agent: int
    channel: AttackChannel
    onset: float = 0.0
    value: float | None = None        # actuator_constant
    signal: StepSignal | None = None  # actuator_signal / sensor_additive
    theta: float | None = None        # optional explicit replay offset

    def __post_init__(self):
        if self.agent < 1:
            raise ValueError(f"attack agent index must be >= 1, got {self.agent}")
        if self.onset < 0:
            raise ValueError(f"attack onset must be >= 0, got {self.onset}")
        if self.channel is AttackChannel.ACTUATOR_CONSTANT and self.value is None:
            raise ValueError("actuator_constant attack needs a value")
        if self.channel in (AttackChannel.ACTUATOR_SIGNAL, AttackChannel.SENSOR_ADDITIVE) \
                and self.signal is None:
            raise ValueError(f"{self.channel.value} attack needs a signal")

    @property
    def is_sensor(self) -> bool:
        return self.channel in (AttackChannel.SENSOR_REPLAY, AttackChannel.SENSOR_ADDITIVE)

    @property
    def is_actuator(self) -> bool:
        return not self.is_sensor


def replay_bounds(q_tk_norm: float, q_e_norm: float, eta: float) -> tuple:
    """Offset interval (a, b) that keeps the trigger inequality unsatisfied.

    a = ||q(t_k)||/(1+eta) - ||qE||, b = ||q(t_k)||/(1-eta) - ||qE||;
    a < b whenever ||q(t_k)|| > 0. A zero held norm collapses the interval
    and is rejected.
    """
    if not 0.0 < eta < 1.0:
        raise ValueError(f"threshold must lie in (0, 1), got {eta}")
    if q_tk_norm < 0 or q_e_norm < 0:
        raise ValueError("norms must be nonnegative")
    if q_tk_norm == 0.0:
        raise DegenerateReplayError(
            "held sample has zero norm; replay offset interval is empty"
        )
    a = q_tk_norm / (1.0 + eta) - q_e_norm
    b = q_tk_norm / (1.0 - eta) - q_e_norm
    return float(a), float(b)


def sample_theta(bounds: tuple, rng) -> float:
    """Uniform draw from the open interval (a, b), reproducible for a seeded rng."""
    a, b = float(bounds[0]), float(bounds[1])
    if not a < b:
        raise ValueError(f"bounds must satisfy a < b, got ({a}, {b})")
    u = float(rng.random())
    while u == 0.0:  # keep the draw in the open interval
        u = float(rng.random())
    theta = a + u * (b - a)
    if theta <= a:  # rounding guard near a tiny interval
        theta = float(np.nextafter(a, b))
    return theta


@dataclass(frozen=True)
class ReplayState:
    """Armed replay: eavesdropped sample, drawn offset, and the constant output."""

    q_eavesdropped: np.ndarray
    theta: float
    bounds: tuple
    armed_at: float
    q_compromised: np.ndarray

    def __post_init__(self):
        a, b = self.bounds
        if not a < self.theta < b:
            raise ValueError(
                f"replay offset {self.theta} outside open interval ({a}, {b})"
            )


def arm_replay(q_tk, eta: float, rng, t: float,
               theta: float | None = None) -> ReplayState:
    """Record the held sample at the victim's latest event and draw the offset.

    The eavesdropped value equals the held sample, so both norms in the
    offset interval coincide. For scalar agents the construction is applied
    to the magnitude and the sign restored, which keeps the compromised
    magnitude strictly inside (||q||/(1+eta), ||q||/(1-eta)).
    """
    q_tk = np.atleast_1d(np.asarray(q_tk, dtype=float))
    norm = float(np.linalg.norm(q_tk))
    bounds = replay_bounds(norm, norm, eta)
    if theta is None:
        theta = sample_theta(bounds, rng)
    theta = float(theta)
    if q_tk.size == 1:
        sign = 1.0 if q_tk[0] >= 0.0 else -1.0
        compromised = sign * (np.abs(q_tk) + theta)
    else:
        compromised = q_tk + theta  # offset added to every component
    return ReplayState(q_tk.copy(), theta, bounds, float(t), compromised)


def apply_sensor_attack(q_true, spec: AttackSpec, state: ReplayState | None,
                        t: float, degree: float = 0.0) -> np.ndarray:
    """Tracking error as seen by the victim's monitor at time t.

    Inactive attacks (t < onset) pass the true value through. A replay
    outputs its constant compromised value; the additive channel shifts the
    true value by -degree * injected(t), the falsified own-state reading
    folded through the neighbor sum.
    """
    q_true = np.atleast_1d(np.asarray(q_true, dtype=float))
    if not spec.is_sensor:
        raise ValueError(f"{spec.channel.value} is not a sensor channel")
    if t < spec.onset:
        return q_true
    if spec.channel is AttackChannel.SENSOR_REPLAY:
        if state is None:
            raise ValueError("replay attack active but never armed: nothing eavesdropped")
        return state.q_compromised.copy()
    return q_true - degree * spec.signal(t)


def apply_actuator_attack(u_nominal, spec: AttackSpec, t: float) -> np.ndarray:
    """Applied control u + f(t) once the attack is active, u unchanged before."""
    u = np.atleast_1d(np.asarray(u_nominal, dtype=float))
    if not spec.is_actuator:
        raise ValueError(f"{spec.channel.value} is not an actuator channel")
    if t < spec.onset:
        return u
    if spec.channel is AttackChannel.ACTUATOR_CONSTANT:
        return u + spec.value
    return u + spec.signal(t)
