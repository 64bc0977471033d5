import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from darwinbrain.env import EnvTemplate, apply_motors, forward_kinematics, reset, sense

TPL = EnvTemplate()


def test_forward_kinematics_examples():
    assert forward_kinematics((0.0, 0.0)) == pytest.approx((2.0, 0.0))
    assert forward_kinematics((math.pi / 2, 0.0)) == pytest.approx((0.0, 2.0), abs=1e-12)
    assert forward_kinematics((0.0, math.pi / 2)) == pytest.approx((1.0, 1.0))


def test_velocity_integrates():
    env = reset(TPL, 0)
    out = apply_motors(env, {"elbow_vel": 0.5}, 0.1)
    assert out.theta[1] == pytest.approx(env.theta[1] + 0.05)
    assert out.theta[0] == env.theta[0]


def test_velocity_clamped_to_vmax():
    env = reset(TPL, 0)
    out = apply_motors(env, {"shoulder_vel": 50.0}, 0.1)
    assert out.theta[0] == pytest.approx(0.1)


def test_joint_limits():
    env = reset(TPL, 0)
    env.theta = np.array([TPL.joint_max - 0.01, 0.0])
    out = apply_motors(env, {"shoulder_vel": 1.0}, 0.1)
    assert out.theta[0] == TPL.joint_max
    assert not out.contact


def test_obstruction_stops_at_entry_side():
    tpl = TPL.with_obstruction(True)
    env = reset(tpl, 0)
    env.theta = np.array([0.0, 0.40])
    out = apply_motors(env, {"elbow_vel": 1.0}, 0.1)
    assert out.theta[1] == 0.45 and out.contact
    env.theta = np.array([0.0, 0.65])
    out = apply_motors(env, {"elbow_vel": -1.0}, 0.1)
    assert out.theta[1] == 0.60 and out.contact


def test_bad_dt():
    with pytest.raises(ValueError):
        apply_motors(reset(TPL, 0), {}, 0.0)


def test_reset_is_seeded():
    a, b = reset(TPL, [3, 1]), reset(TPL, [3, 1])
    assert np.array_equal(a.obj, b.obj)
    assert not np.array_equal(a.obj, reset(TPL, [4, 1]).obj)


@given(st.integers(0, 10**6))
def test_objects_are_reachable(seed):
    env = reset(TPL, seed)
    r = float(np.hypot(*env.obj))
    assert 0.1 <= r <= 1.9
    assert 0.0 <= math.atan2(env.obj[1], env.obj[0]) <= math.pi / 2 + 1e-12


@given(st.lists(st.tuples(st.floats(-3, 3), st.floats(-3, 3)), min_size=1, max_size=40),
       st.booleans())
def test_state_stays_valid(cmds, obstructed):
    env = reset(TPL.with_obstruction(obstructed), 0)
    for s, e in cmds:
        env = apply_motors(env, {"shoulder_vel": s, "elbow_vel": e}, 0.1)
        assert np.all(env.theta >= TPL.joint_min) and np.all(env.theta <= TPL.joint_max)
        if obstructed:
            assert not 0.45 < env.theta[1] < 0.60
        hx, hy = forward_kinematics(env.theta)
        assert math.hypot(hx, hy) <= 2.0 + 1e-12
        assert all(math.isfinite(v.as_float()) for v in sense(env).values())


def test_zero_velocity_is_identity():
    env = reset(TPL.with_obstruction(True), 0)
    out = apply_motors(env, {}, 0.1)
    assert np.array_equal(out.theta, env.theta) and not out.contact


def test_custom_limit_clamp():
    tpl = EnvTemplate(joint_max=1.5)
    env = reset(tpl, 0)
    env.theta = np.array([0.0, 1.49])
    out = apply_motors(env, {"elbow_vel": 1.0}, 0.1)
    assert out.theta[1] == 1.5 and not out.contact


def test_contact_only_on_clamp_steps():
    env = reset(TPL.with_obstruction(True), 0)
    env.theta = np.array([0.0, 0.30])
    flags = []
    for _ in range(4):
        env = apply_motors(env, {"elbow_vel": 1.0}, 0.1)
        flags.append(env.contact)
    assert flags == [False, True, True, True]
    env = apply_motors(env, {"elbow_vel": -1.0}, 0.1)
    assert not env.contact
