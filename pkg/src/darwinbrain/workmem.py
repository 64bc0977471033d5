"""Working memory: the key-value blackboard shared by atoms, games and the body.

Keys are plain strings with a role prefix (``sensor/``, ``motor/``, ``wm/``).
Values are one of three small immutable types: :class:`Signal`,
:class:`Scalar` and :class:`Vec`.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from typing import Any, Iterable, Union

SENSOR = "sensor/"
MOTOR = "motor/"
INTERNAL = "wm/"

ENV_WRITER = "env"


class WorkingMemoryError(Exception):
    pass


class NonFiniteValue(WorkingMemoryError):
    pass


class SensorWriteForbidden(WorkingMemoryError):
    pass


class MotorWriteForbidden(WorkingMemoryError):
    pass


@dataclass(frozen=True)
class Signal:
    on: bool

    def as_float(self) -> float:
        return 1.0 if self.on else 0.0


@dataclass(frozen=True)
class Scalar:
    x: float

    def __post_init__(self):
        object.__setattr__(self, "x", float(self.x))

    def as_float(self) -> float:
        return self.x


@dataclass(frozen=True)
class Vec:
    xs: tuple

    def __post_init__(self):
        xs = tuple(float(v) for v in self.xs)
        if not xs:
            raise ValueError("Vec must hold at least one element")
        object.__setattr__(self, "xs", xs)

    def as_float(self) -> float:
        raise TypeError("Vec cannot be used where a scalar is expected")


Value = Union[Signal, Scalar, Vec]


class _AbsentType:
    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self):
        return "Absent"

    def __bool__(self):
        return False


Absent = _AbsentType()


def is_finite_value(v: Value) -> bool:
    if isinstance(v, Signal):
        return True
    if isinstance(v, Scalar):
        return math.isfinite(v.x)
    return all(math.isfinite(x) for x in v.xs)


def role_of(key: str) -> str:
    """Role class of a key: ``sensor``, ``motor`` or ``internal``."""
    if key.startswith(SENSOR):
        return "sensor"
    if key.startswith(MOTOR):
        return "motor"
    return "internal"


def is_grounding(key: str) -> bool:
    return key.startswith(SENSOR) or key.startswith(MOTOR)


def value_to_json(v: Value) -> Any:
    if isinstance(v, Signal):
        return {"signal": v.on}
    if isinstance(v, Scalar):
        return v.x
    return list(v.xs)


class KeyMinter:
    """Mints fresh ``wm/`` keys from a monotonic counter.

    Every key the minter has seen (registered or minted) is remembered, so a
    freshly minted key never collides with an existing one.
    """

    _suffix = re.compile(r"\.(\d+)$")

    def __init__(self, used: Iterable[str] = ()):
        self.counter = 0
        self.used: set[str] = set()
        self.register(used)

    def register(self, keys: Iterable[str]) -> None:
        for k in keys:
            self.used.add(k)
            m = self._suffix.search(k)
            if m:
                self.counter = max(self.counter, int(m.group(1)) + 1)

    def mint(self, stem: str = "k") -> str:
        stem = stem.split("/", 1)[-1]
        stem = self._suffix.sub("", stem) or "k"
        while True:
            key = f"{INTERNAL}{stem}.{self.counter}"
            self.counter += 1
            if key not in self.used:
                self.used.add(key)
                return key


@dataclass
class WriteEvent:
    step: int
    key: str
    value: Value
    writer: Any


@dataclass
class WorkingMemory:
    """Register map for a single trial.

    ``entries`` maps key to ``(value, last_write_step, writer)``. With
    ``trace=True`` every write is also appended to ``log``.
    """

    entries: dict = field(default_factory=dict)
    step: int = 0
    trace: bool = True
    log: list = field(default_factory=list)
    errors: list = field(default_factory=list)

    def write(self, key: str, v: Value, writer: Any = None) -> None:
        if not key:
            raise KeyError("empty register key")
        if not is_finite_value(v):
            raise NonFiniteValue(f"refusing to write non-finite value to {key}")
        if key.startswith(SENSOR) and writer != ENV_WRITER:
            raise SensorWriteForbidden(f"{writer!r} may not write {key}")
        if key.startswith(MOTOR) and not isinstance(writer, int):
            raise MotorWriteForbidden(f"{writer!r} may not write {key}")
        self.entries[key] = (v, self.step, writer)
        if self.trace:
            self.log.append(WriteEvent(self.step, key, v, writer))

    def read(self, key: str):
        entry = self.entries.get(key)
        return Absent if entry is None else entry[0]

    def writer_of(self, key: str):
        entry = self.entries.get(key)
        return None if entry is None else entry[2]

    def last_write_step(self, key: str):
        entry = self.entries.get(key)
        return None if entry is None else entry[1]

    def __contains__(self, key: str) -> bool:
        return key in self.entries

    def dump_trace(self, fh) -> None:
        """Write the write log as JSON lines: step, key, value, writer."""
        for ev in self.log:
            fh.write(json.dumps({"step": ev.step, "key": ev.key,
                                 "value": value_to_json(ev.value),
                                 "writer": ev.writer}) + "\n")


def sync_sensors(wm: WorkingMemory, env) -> WorkingMemory:
    from .env import sense

    for key, v in sense(env).items():
        wm.write(key, v, ENV_WRITER)
    return wm


def collect_motors(wm: WorkingMemory, motor_keys: Iterable[str]) -> dict:
    """Current motor commands keyed by short name (``elbow_vel``).

    Absent keys command 0.0. A non-scalar value is a coercion error: it is
    recorded in ``wm.errors`` and 0.0 is substituted.
    """
    out = {}
    for key in motor_keys:
        v = wm.read(key)
        name = key[len(MOTOR):]
        if v is Absent:
            out[name] = 0.0
        elif isinstance(v, Scalar):
            out[name] = v.x
        else:
            wm.errors.append(("motor_coercion", wm.step, key))
            out[name] = 0.0
    return out
