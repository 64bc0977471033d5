"""Planar two-joint arm with an optional elbow obstruction and a target object.

Kinematic model only: joint velocities are integrated directly, no dynamics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .workmem import Scalar, Signal

JOINTS = ("shoulder", "elbow")
MOTOR_KEYS = ("motor/shoulder_vel", "motor/elbow_vel")
SENSOR_KEYS = (
    "sensor/shoulder_angle", "sensor/elbow_angle",
    "sensor/hand_x", "sensor/hand_y",
    "sensor/obj_x", "sensor/obj_y", "sensor/obj_dist",
    "sensor/contact",
    "sensor/last_shoulder_cmd", "sensor/last_elbow_cmd",
    "sensor/effort",
)


@dataclass(frozen=True)
class EnvTemplate:
    link1: float = 1.0
    link2: float = 1.0
    joint_min: float = -math.pi / 2
    joint_max: float = math.pi
    start_shoulder: float = 0.0
    start_elbow: float = 0.3
    obstruction: tuple | None = None  # (lo, hi) on the elbow
    v_max: float = 1.0
    # object radius is drawn inside the annulus, shrunk by this margin
    reach_margin: float = 0.1
    # every object in this sector is reachable elbow-up within the joint limits
    obj_angle_range: tuple = (0.0, math.pi / 2)

    def with_obstruction(self, on: bool, band=(0.45, 0.60)) -> "EnvTemplate":
        return replace(self, obstruction=tuple(band) if on else None)


@dataclass
class EnvState:
    template: EnvTemplate
    theta: np.ndarray
    obj: np.ndarray
    contact: bool = False
    last_cmd: np.ndarray = field(default_factory=lambda: np.zeros(2))
    effort: float = 0.0

    def copy(self) -> "EnvState":
        return EnvState(self.template, self.theta.copy(), self.obj.copy(),
                        self.contact, self.last_cmd.copy(), self.effort)


def forward_kinematics(theta, link1: float = 1.0, link2: float = 1.0):
    t1, t2 = float(theta[0]), float(theta[1])
    x = link1 * math.cos(t1) + link2 * math.cos(t1 + t2)
    y = link1 * math.sin(t1) + link2 * math.sin(t1 + t2)
    return x, y


def reset(template: EnvTemplate, seed) -> EnvState:
    rng = np.random.default_rng(seed)
    lo = abs(template.link1 - template.link2) + template.reach_margin
    hi = template.link1 + template.link2 - template.reach_margin
    r = rng.uniform(lo, hi)
    a = rng.uniform(*template.obj_angle_range)
    obj = np.array([r * math.cos(a), r * math.sin(a)])
    theta = np.array([template.start_shoulder, template.start_elbow], dtype=float)
    return EnvState(template, theta, obj)


def apply_motors(env: EnvState, commands: dict, dt: float) -> EnvState:
    """Integrate one step of clamped joint velocities.

    An elbow move that would cross into the obstruction band stops at the
    boundary on the side it came from and sets ``contact``.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    t = env.template
    v = np.array([commands.get(f"{j}_vel", 0.0) for j in JOINTS], dtype=float)
    v = np.clip(v, -t.v_max, t.v_max)
    old = env.theta
    new = np.clip(old + v * dt, t.joint_min, t.joint_max)
    contact = False
    if t.obstruction is not None:
        lo, hi = t.obstruction
        e_old, e_new = old[1], new[1]
        if e_old <= lo < e_new:
            new[1], contact = lo, True
        elif e_old >= hi > e_new:
            new[1], contact = hi, True
        elif lo < e_new < hi:
            new[1] = lo if e_new - lo <= hi - e_new else hi
            contact = True
    effort = float(np.sum(np.abs(v)) * dt)
    return EnvState(t, new, env.obj.copy(), contact, v, effort)


def sense(env: EnvState) -> dict:
    t = env.template
    hx, hy = forward_kinematics(env.theta, t.link1, t.link2)
    dist = math.hypot(env.obj[0] - hx, env.obj[1] - hy)
    return {
        "sensor/shoulder_angle": Scalar(env.theta[0]),
        "sensor/elbow_angle": Scalar(env.theta[1]),
        "sensor/hand_x": Scalar(hx),
        "sensor/hand_y": Scalar(hy),
        "sensor/obj_x": Scalar(env.obj[0]),
        "sensor/obj_y": Scalar(env.obj[1]),
        "sensor/obj_dist": Scalar(dist),
        "sensor/contact": Signal(bool(env.contact)),
        "sensor/last_shoulder_cmd": Scalar(env.last_cmd[0]),
        "sensor/last_elbow_cmd": Scalar(env.last_cmd[1]),
        "sensor/effort": Scalar(env.effort),
    }
