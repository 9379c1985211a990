import numpy as np
import pytest

from etcsim.attack import (
    AttackChannel,
    AttackSpec,
    DegenerateReplayError,
    StepSignal,
    apply_actuator_attack,
    apply_sensor_attack,
    arm_replay,
    replay_bounds,
    sample_theta,
)
from etcsim.triggering import cs_trigger_check


class FakeRng:
    def __init__(self, values):
        self.values = list(values)

    def random(self):
        return self.values.pop(0)


def test_replay_bounds_closed_forms():
    a, b = replay_bounds(1.0, 1.0, 0.01)
    assert a == pytest.approx(1 / 1.01 - 1, abs=1e-12)
    assert b == pytest.approx(1 / 0.99 - 1, abs=1e-12)

    a, b = replay_bounds(2.0, 0.0, 0.5)
    assert (a, b) == pytest.approx((2 / 1.5, 4.0), abs=1e-12)

    a, b = replay_bounds(1.0, 1.0, 0.99)
    assert a == pytest.approx(1 / 1.99 - 1, abs=1e-12)
    assert b == pytest.approx(1 / 0.01 - 1, abs=1e-9)


def test_replay_bounds_validation():
    with pytest.raises(ValueError, match=r"\(0, 1\)"):
        replay_bounds(1.0, 1.0, 1.5)
    with pytest.raises(ValueError, match="nonnegative"):
        replay_bounds(-1.0, 0.0, 0.5)
    with pytest.raises(DegenerateReplayError):
        replay_bounds(0.0, 0.0, 0.5)


def test_sample_theta_affine_map():
    assert sample_theta((0.0, 1.0), FakeRng([0.5])) == pytest.approx(0.5)
    # a draw of exactly zero is rejected to keep the interval open
    theta = sample_theta((-1.0, 1.0), FakeRng([0.0, 0.25]))
    assert theta == pytest.approx(-0.5)
    assert theta > -1.0
    with pytest.raises(ValueError, match="a < b"):
        sample_theta((1.0, 1.0), FakeRng([0.5]))


def test_sample_theta_uniform_mean():
    rng = np.random.default_rng(123)
    draws = np.array([sample_theta((0.0, 1.0), rng) for _ in range(100_000)])
    assert abs(draws.mean() - 0.5) < 0.01
    assert draws.min() > 0.0 and draws.max() < 1.0


def test_bounds_ordered_and_theta_inside():
    rng = np.random.default_rng(42)
    for _ in range(2000):
        q = rng.uniform(1e-6, 50.0)
        eta = rng.uniform(1e-4, 1.0 - 1e-4)
        a, b = replay_bounds(q, q, eta)
        assert a < b
        theta = sample_theta((a, b), rng)
        assert a < theta < b


def test_arm_replay_scalar_interval():
    rng = np.random.default_rng(0)
    for _ in range(200):
        state = arm_replay([1.0], 0.01, rng, t=5.0)
        qc = state.q_compromised[0]
        assert 1 / 1.01 < qc < 1 / 0.99
        assert state.armed_at == 5.0


def test_arm_replay_negative_scalar_restores_sign():
    rng = np.random.default_rng(1)
    for _ in range(200):
        state = arm_replay([-1.0], 0.01, rng, t=0.0)
        qc = state.q_compromised[0]
        assert qc < 0
        assert 1 / 1.01 < abs(qc) < 1 / 0.99


def test_arm_replay_zero_sample_degenerate():
    with pytest.raises(DegenerateReplayError):
        arm_replay([0.0], 0.1, np.random.default_rng(0), t=0.0)


def test_arm_replay_theta_override():
    state = arm_replay([2.0], 0.5, np.random.default_rng(0), t=1.0, theta=1.5)
    assert state.theta == 1.5
    assert state.q_compromised[0] == pytest.approx(3.5)
    with pytest.raises(ValueError, match="outside"):
        arm_replay([2.0], 0.5, np.random.default_rng(0), t=1.0, theta=100.0)


def test_arm_replay_vector_adds_uniform_offset():
    state = arm_replay([1.0, -2.0], 0.3, np.random.default_rng(5), t=0.0)
    np.testing.assert_allclose(
        state.q_compromised, np.array([1.0, -2.0]) + state.theta)


def test_sensor_attack_inactive_before_onset():
    spec = AttackSpec(agent=1, channel=AttackChannel.SENSOR_REPLAY, onset=5.0)
    state = arm_replay([2.0], 0.01, np.random.default_rng(0), t=5.0)
    np.testing.assert_allclose(
        apply_sensor_attack([7.0], spec, state, t=4.9), [7.0])


def test_sensor_replay_constant_output():
    spec = AttackSpec(agent=1, channel=AttackChannel.SENSOR_REPLAY, onset=5.0)
    state = arm_replay([2.0], 0.01, np.random.default_rng(0), t=5.0, theta=0.005)
    for t in (5.0, 6.3, 9.99):
        np.testing.assert_allclose(
            apply_sensor_attack([123.0], spec, state, t), [2.005])


def test_sensor_replay_unarmed_is_an_error():
    spec = AttackSpec(agent=1, channel=AttackChannel.SENSOR_REPLAY, onset=5.0)
    with pytest.raises(ValueError, match="armed"):
        apply_sensor_attack([1.0], spec, None, t=5.0)


def test_sensor_additive_scales_with_degree():
    spec = AttackSpec(agent=1, channel=AttackChannel.SENSOR_ADDITIVE, onset=0.0,
                      signal=StepSignal((0.0,), (0.5,)))
    np.testing.assert_allclose(
        apply_sensor_attack([1.0], spec, None, t=1.0, degree=2.0), [0.0])


def test_actuator_constant_attack():
    spec = AttackSpec(agent=2, channel=AttackChannel.ACTUATOR_CONSTANT,
                      onset=6.0, value=-1.0)
    assert apply_actuator_attack([0.3], spec, t=7.0) == pytest.approx([-0.7])
    assert apply_actuator_attack([0.3], spec, t=5.0) == pytest.approx([0.3])
    zero = AttackSpec(agent=2, channel=AttackChannel.ACTUATOR_CONSTANT,
                      onset=0.0, value=0.0)
    assert apply_actuator_attack([0.3], zero, t=9.0) == pytest.approx([0.3])


def test_actuator_signal_attack():
    spec = AttackSpec(agent=1, channel=AttackChannel.ACTUATOR_SIGNAL, onset=1.0,
                      signal=StepSignal((1.0, 2.0), (0.5, -0.5)))
    assert apply_actuator_attack([0.0], spec, t=1.5) == pytest.approx([0.5])
    assert apply_actuator_attack([0.0], spec, t=2.5) == pytest.approx([-0.5])


def test_step_signal_semantics():
    sig = StepSignal((1.0, 3.0), (2.0, 4.0))
    assert sig(0.5) == 0.0
    assert sig(1.0) == 2.0
    assert sig(2.999) == 2.0
    assert sig(3.0) == 4.0
    with pytest.raises(ValueError, match="increasing"):
        StepSignal((1.0, 1.0), (2.0, 4.0))
    with pytest.raises(ValueError, match="nonempty"):
        StepSignal((), ())


def test_attack_spec_validation():
    with pytest.raises(ValueError, match="value"):
        AttackSpec(agent=1, channel=AttackChannel.ACTUATOR_CONSTANT)
    with pytest.raises(ValueError, match="signal"):
        AttackSpec(agent=1, channel=AttackChannel.ACTUATOR_SIGNAL)
    with pytest.raises(ValueError, match="onset"):
        AttackSpec(agent=1, channel=AttackChannel.SENSOR_REPLAY, onset=-1.0)


def test_replay_never_violates_the_trigger_condition():
    # the silencing guarantee, checked against the trigger predicate itself
    # over a grid of held samples, thresholds, and offset quantiles
    for held in (0.1, -0.1, 1.0, -1.0, 5.3, -5.3):
        for eta in (0.01, 0.1, 0.3, 0.7, 0.95):
            a, b = replay_bounds(abs(held), abs(held), eta)
            for quantile in (1e-6, 0.25, 0.5, 0.75, 1 - 1e-6):
                theta = a + quantile * (b - a)
                sign = 1.0 if held >= 0 else -1.0
                qc = sign * (abs(held) + theta)
                fired = cs_trigger_check([qc - held], [qc], eta)
                assert not fired, (held, eta, quantile)


def test_channels_are_independent():
    sensor = AttackSpec(agent=1, channel=AttackChannel.SENSOR_REPLAY, onset=0.0)
    actuator = AttackSpec(agent=1, channel=AttackChannel.ACTUATOR_CONSTANT,
                          onset=0.0, value=-1.0)
    state = arm_replay([2.0], 0.1, np.random.default_rng(3), t=0.0)
    q = apply_sensor_attack([5.0], sensor, state, t=1.0)
    u = apply_actuator_attack([0.5], actuator, t=1.0)
    # recomputing either channel with the other removed changes nothing
    np.testing.assert_array_equal(q, apply_sensor_attack([5.0], sensor, state, t=1.0))
    np.testing.assert_array_equal(u, apply_actuator_attack([0.5], actuator, t=1.0))
    with pytest.raises(ValueError, match="not a sensor"):
        apply_sensor_attack([1.0], actuator, None, t=0.0)
    with pytest.raises(ValueError, match="not an actuator"):
        apply_actuator_attack([1.0], sensor, t=0.0)


def test_replay_is_deterministic_per_seed():
    first = arm_replay([1.5], 0.05, np.random.default_rng(77), t=0.0)
    second = arm_replay([1.5], 0.05, np.random.default_rng(77), t=0.0)
    assert first.theta == second.theta
    assert first.bounds == second.bounds
