"""Actor atoms, their transfer-function kinds, and game atoms.

An actor atom is the tuple (inputs, state, transfer, outputs, fitness records).
Transfer behaviour lives in a small registry of :class:`Kind` objects, each
declaring its arity, how its state is (re)initialised, how it steps, and its
specific mutation operator.
"""

from __future__ import annotations

import copy
import json
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from . import nets
from .workmem import (
    MOTOR, SENSOR, INTERNAL, Absent, Scalar, Signal, Vec, WorkingMemory,
)


class ArityMismatch(Exception):
    """Inputs do not have the type or shape the transfer function needs."""


class WindowTooShort(ValueError):
    pass


class InvalidAtom(ValueError):
    pass


class LibraryParseError(ValueError):
    def __init__(self, lineno: int, msg: str):
        super().__init__(f"line {lineno}: {msg}")
        self.lineno = lineno


# ---------------------------------------------------------------------------
# atoms


@dataclass
class ActorAtom:
    id: int
    kind: str
    params: list
    inputs: list
    outputs: list
    activation_rule: str = "present"
    reflex: bool = False
    state: dict = field(default_factory=dict, repr=False)
    fitness_records: dict = field(default_factory=dict, repr=False)
    activation_count: int = 0

    @property
    def spec(self) -> "Kind":
        return KINDS[self.kind]

    def clone(self, new_id: int | None = None) -> "ActorAtom":
        """Deep copy keeping learned state but dropping fitness bookkeeping."""
        a = ActorAtom(
            self.id if new_id is None else new_id, self.kind, list(self.params),
            list(self.inputs), list(self.outputs), self.activation_rule, False,
        )
        a.state = copy.deepcopy(self.state)
        return a

    def is_initiator(self) -> bool:
        """Reads only grounding registers, so may start a trial."""
        return all(k.startswith(SENSOR) or k.startswith(MOTOR) for k in self.inputs)


GAME_TRANSFORMS = (
    "AccumulateValue", "MaximizeIsIdentity", "NegateForMinimize",
    "VarianceOverTrial", "DistanceBetweenKeys", "ChainOutput",
)


@dataclass
class GameAtom:
    """Fitness-defining observer.

    Each entry of ``inputs`` is a slot; a slot may list alternative keys
    separated by ``|`` (added when an observed actor atom is replicated), and
    reads the first alternative that is present.
    """

    id: int
    transform: str
    inputs: list
    params: list = field(default_factory=list)
    output_key: str | None = None
    innate: bool = False
    fitness: float = 0.0
    association: set = field(default_factory=set)
    assessed: bool = False

    def keys(self) -> list:
        return [k for slot in self.inputs for k in slot.split("|")]

    def weight(self, i: int) -> float:
        return float(self.params[i]) if i < len(self.params) else 1.0

    def clone(self, new_id: int) -> "GameAtom":
        return GameAtom(new_id, self.transform, list(self.inputs), list(self.params),
                        self.output_key, False)


# ---------------------------------------------------------------------------
# activation rules
#   always | present | signal:KEY | gt:KEY:THRESHOLD


def rule_key(rule: str) -> str | None:
    if rule.startswith("signal:"):
        return rule[len("signal:"):]
    if rule.startswith("gt:"):
        return rule[len("gt:"):].rsplit(":", 1)[0]
    return None


def rename_rule(rule: str, mapping: dict) -> str:
    key = rule_key(rule)
    if key is None or key not in mapping:
        return rule
    if rule.startswith("signal:"):
        return "signal:" + mapping[key]
    thresh = rule.rsplit(":", 1)[1]
    return f"gt:{mapping[key]}:{thresh}"


def validate_rule(rule: str) -> None:
    if rule in ("always", "present"):
        return
    if rule.startswith("signal:") and len(rule) > 7:
        return
    if rule.startswith("gt:"):
        parts = rule[3:].rsplit(":", 1)
        if len(parts) == 2 and parts[0]:
            float(parts[1])
            return
    raise InvalidAtom(f"bad activation rule {rule!r}")


def check_activation(atom: ActorAtom, wm: WorkingMemory) -> bool:
    rule = atom.activation_rule
    if rule == "always":
        return True
    if rule == "present":
        return all(wm.read(k) is not Absent for k in atom.inputs)
    if rule.startswith("signal:"):
        v = wm.read(rule_key(rule))
        return isinstance(v, Signal) and v.on
    if rule.startswith("gt:"):
        key = rule_key(rule)
        v = wm.read(key)
        if v is Absent or isinstance(v, Vec):
            return False
        return v.as_float() > float(rule.rsplit(":", 1)[1])
    return False


# ---------------------------------------------------------------------------
# helpers


def _scalar(v) -> float:
    if isinstance(v, (Scalar, Signal)):
        return v.as_float()
    raise ArityMismatch(f"expected a scalar input, got {v!r}")


def _flat(v) -> np.ndarray:
    if isinstance(v, Vec):
        return np.asarray(v.xs)
    return np.array([_scalar(v)])


def _gauss(params, start: int, rng, sigma: float) -> list:
    p = np.asarray(params, dtype=float).copy()
    if start < len(p):
        p[start:] += rng.normal(0.0, sigma, size=len(p) - start)
    return [float(x) for x in p]


# ---------------------------------------------------------------------------
# transfer kinds


class Kind:
    name = ""
    in_arity = (1, None)   # (min, max); None = unbounded
    out_arity = (1, None)
    persistent = False     # learned state survives across trials in a generation

    def state_size(self, params) -> int:
        return 0

    def valid(self, params, n_in: int, n_out: int) -> bool:
        lo, hi = self.in_arity
        if n_in < lo or (hi is not None and n_in > hi):
            return False
        lo, hi = self.out_arity
        return not (n_out < lo or (hi is not None and n_out > hi))

    def init_state(self, atom: ActorAtom) -> dict:
        return {}

    def reset_trial(self, atom: ActorAtom) -> None:
        atom.state.update(self.init_state(atom) if not self.persistent else {})

    def step(self, atom: ActorAtom, xs: list, rng) -> list:
        raise NotImplementedError

    def mutate(self, params, rng, sigma: float) -> list:
        return list(params)


class ForwardModelKind(Kind):
    """Predicts the current value of input 0 from its previous value and
    input 1 (the command issued since), then trains on the observed value.

    params: [hidden, lr, scale, model weights...], where ``scale`` is the
    typical per-step change of input 0. Outputs: prediction, and optionally
    the observed value.
    """

    name = "ForwardModel"
    in_arity = (2, 2)
    out_arity = (1, 2)
    persistent = True

    @staticmethod
    def default_params(rng, hidden: int = 8, lr: float = 0.05, scale: float = 0.1) -> list:
        W1 = rng.normal(0.0, 1.0, size=(hidden, 2))
        b1 = rng.normal(0.0, 0.1, size=hidden)
        return [float(hidden), float(lr), float(scale)] + nets.mlp_pack(
            (W1, b1, np.zeros(hidden), np.zeros(1)))

    def state_size(self, params) -> int:
        return nets.ResidualModel.size(2, int(params[0])) + 1

    def valid(self, params, n_in, n_out):
        if not super().valid(params, n_in, n_out) or len(params) < 3:
            return False
        h = int(params[0])
        return (h >= 1 and params[1] > 0 and params[2] > 0
                and len(params) == 3 + nets.ResidualModel.size(2, h))

    def init_state(self, atom):
        h = int(atom.params[0])
        return {"model": nets.ResidualModel(2, h, atom.params[3:], float(atom.params[1]),
                                            float(atom.params[2])),
                "prev": None}

    def reset_trial(self, atom):
        if "model" not in atom.state:
            atom.state.update(self.init_state(atom))
        atom.state["prev"] = None

    def step(self, atom, xs, rng):
        angle, cmd = _scalar(xs[0]), _scalar(xs[1])
        prev = atom.state.get("prev")
        if prev is None:
            pred = angle
        else:
            pred = atom.state["model"].train([prev, cmd], angle)
        atom.state["prev"] = angle
        out = [Scalar(pred)]
        if len(atom.outputs) == 2:
            out.append(Scalar(angle))
        return out

    def mutate(self, params, rng, sigma):
        return _gauss(params, 3, rng, sigma)


class SquaredErrorKind(Kind):
    """params: [mode]; mode 0 = (actual - predicted)^2, 1 = actual - predicted.
    Inputs are (predicted, actual)."""

    name = "SquaredError"
    in_arity = (2, 2)
    out_arity = (1, 1)

    def valid(self, params, n_in, n_out):
        return super().valid(params, n_in, n_out) and len(params) == 1 and params[0] in (0.0, 1.0)

    def step(self, atom, xs, rng):
        p, a = _flat(xs[0]), _flat(xs[1])
        if p.shape != a.shape:
            raise ArityMismatch("predicted and actual differ in length")
        d = a - p
        if atom.params[0] == 0.0:
            return [Scalar(float(np.sum(d * d)))]
        return [Scalar(float(np.sum(d)))]

    def mutate(self, params, rng, sigma):
        return [1.0 - params[0]]


@dataclass
class SHCState:
    current: np.ndarray
    best: np.ndarray
    best_reward: float | None
    sigma: float
    p_w: float


def hill_climb_step(state: SHCState, reward: float, rng):
    """One stochastic hill-climbing update for the parameters last emitted.

    Improvement keeps the current parameters as the new best. Every step then
    explores from the best, except that with probability ``p_w`` a worse
    current set is retained as is.
    """
    if state.best_reward is None or reward > state.best_reward:
        state.best = state.current.copy()
        state.best_reward = reward
        new = state.best + rng.normal(0.0, 1.0, size=state.best.shape) * state.sigma
    elif state.p_w > 0 and rng.random() < state.p_w:
        new = state.current.copy()
    else:
        new = state.best + rng.normal(0.0, 1.0, size=state.best.shape) * state.sigma
    state.current = new
    return state, new.copy()


class HillClimberKind(Kind):
    """Treats its single input as reward (times ``sign``) and emits a
    parameter vector, one output per parameter.

    params: [sigma, p_w, sign, initial params...].
    """

    name = "StochasticHillClimber"
    in_arity = (1, 1)
    out_arity = (1, None)
    persistent = True

    def state_size(self, params) -> int:
        return 2 * (len(params) - 3) + 1

    def valid(self, params, n_in, n_out):
        return (super().valid(params, n_in, n_out) and len(params) == 3 + n_out
                and params[0] >= 0 and 0 <= params[1] <= 1 and params[2] in (1.0, -1.0))

    def init_state(self, atom):
        p = atom.params
        init = np.asarray(p[3:], dtype=float)
        return {"shc": SHCState(init.copy(), init.copy(), None, float(p[0]), float(p[1])),
                "started": False}

    def reset_trial(self, atom):
        if "shc" not in atom.state:
            atom.state.update(self.init_state(atom))
        # the reward record is relative to one trial's situation
        atom.state["shc"].best_reward = None
        atom.state["started"] = False

    def step(self, atom, xs, rng):
        st = atom.state["shc"]
        if not atom.state["started"]:
            atom.state["started"] = True
            emit = st.current.copy()
        else:
            reward = atom.params[2] * _scalar(xs[0])
            _, emit = hill_climb_step(st, reward, rng)
        return [Scalar(x) for x in emit]

    def mutate(self, params, rng, sigma):
        p = list(params)
        which = int(rng.integers(4))
        if which == 0:
            p[0] = float(abs(p[0] * math.exp(rng.normal(0.0, 0.2))))
        elif which == 1:
            p[1] = float(np.clip(p[1] + rng.normal(0.0, 0.05), 0.0, 1.0))
        elif which == 2:
            p[2] = -p[2]
        else:
            p = p[:3] + _gauss(p[3:], 0, rng, sigma)
        return p


class MotorWriterKind(Kind):
    """params: [gain, mode]. Mode 0 writes gain * input as velocity; mode 1
    reads n targets then n current angles and writes gain * (target - angle)."""

    name = "MotorWriter"

    def valid(self, params, n_in, n_out):
        if not super().valid(params, n_in, n_out) or len(params) != 2:
            return False
        if params[1] == 0.0:
            return n_in == n_out
        return params[1] == 1.0 and n_in == 2 * n_out

    def step(self, atom, xs, rng):
        gain, mode = atom.params
        vals = [_scalar(v) for v in xs]
        n = len(atom.outputs)
        if mode == 0.0:
            return [Scalar(gain * v) for v in vals]
        return [Scalar(gain * (vals[i] - vals[n + i])) for i in range(n)]

    def mutate(self, params, rng, sigma):
        return [float(params[0] + rng.normal(0.0, sigma)), params[1]]


class NetKind(Kind):
    """Feed-forward tanh network. params: [n_in, n_out, hidden, weights...];
    hidden = 0 gives a linear map."""

    name = "FeedForwardNet"

    def valid(self, params, n_in, n_out):
        if not super().valid(params, n_in, n_out) or len(params) < 3:
            return False
        ni, no, h = int(params[0]), int(params[1]), int(params[2])
        return ni == n_in and no == n_out and h >= 0 and len(params) == 3 + nets.mlp_size(ni, no, h)

    def step(self, atom, xs, rng):
        ni, no, h = (int(v) for v in atom.params[:3])
        x = [_scalar(v) for v in xs]
        w = nets.mlp_unpack(atom.params[3:], ni, no, h)
        return [Scalar(v) for v in nets.mlp_forward(w, x, h)]

    def mutate(self, params, rng, sigma):
        return _gauss(params, 3, rng, sigma)


class InverseModelKind(NetKind):
    """Net mapping a desired sensory state to motor targets (pre-trained)."""

    name = "InverseModel"


def mutual_info(motor, sensor, bins: int = 8, motor_range=None, sensor_range=None,
                window: int | None = None) -> float:
    """Plug-in mutual information (bits) from an equal-width ``bins x bins``
    joint histogram over the declared ranges (data range if omitted)."""
    m = np.asarray(motor, dtype=float)
    s = np.asarray(sensor, dtype=float)
    need = window if window is not None else 1
    if len(m) < need or len(s) < need or len(m) == 0:
        raise WindowTooShort(f"need {need} samples, got {min(len(m), len(s))}")
    if len(m) != len(s):
        raise ValueError("motor and sensor windows differ in length")
    if bins < 2:
        raise ValueError("need at least two bins")
    im = _bin_index(m, bins, motor_range)
    js = _bin_index(s, bins, sensor_range)
    joint = np.zeros((bins, bins))
    np.add.at(joint, (im, js), 1.0)
    p = joint / len(m)
    pm = p.sum(axis=1, keepdims=True)
    ps = p.sum(axis=0, keepdims=True)
    nz = p > 0
    mi = float(np.sum(p[nz] * np.log2(p[nz] / (pm @ ps)[nz])))
    return float(min(max(mi, 0.0), math.log2(bins)))


def _bin_index(x, bins, rng_):
    lo, hi = (float(np.min(x)), float(np.max(x))) if rng_ is None else rng_
    if hi <= lo:
        return np.zeros(len(x), dtype=int)
    idx = np.floor((x - lo) / (hi - lo) * bins).astype(int)
    return np.clip(idx, 0, bins - 1)


class MutualInfoKind(Kind):
    """Windows (motor, sensor) pairs and emits their mutual information.

    params: [window, bins, motor_lo, motor_hi, sensor_lo, sensor_hi].
    """

    name = "MutualInfo"
    in_arity = (2, 2)
    out_arity = (1, 1)

    def state_size(self, params) -> int:
        return 2 * int(params[0])

    def valid(self, params, n_in, n_out):
        return (super().valid(params, n_in, n_out) and len(params) == 6
                and params[0] >= 2 and params[1] >= 2
                and params[3] > params[2] and params[5] > params[4])

    def init_state(self, atom):
        w = int(atom.params[0])
        return {"m": deque(maxlen=w), "s": deque(maxlen=w)}

    def step(self, atom, xs, rng):
        w, b = int(atom.params[0]), int(atom.params[1])
        atom.state["m"].append(_scalar(xs[0]))
        atom.state["s"].append(_scalar(xs[1]))
        if len(atom.state["m"]) < w:
            return [Scalar(0.0)]
        p = atom.params
        return [Scalar(mutual_info(atom.state["m"], atom.state["s"], b,
                                   (p[2], p[3]), (p[4], p[5]), window=w))]

    def mutate(self, params, rng, sigma):
        p = list(params)
        p[1] = float(np.clip(p[1] + rng.choice([-1.0, 1.0]), 2, 32))
        return p


class AccumulatorKind(Kind):
    """Leaky running sum of all inputs. params: [leak]."""

    name = "Accumulator"

    def valid(self, params, n_in, n_out):
        return super().valid(params, n_in, n_out) and len(params) == 1 and 0 <= params[0] <= 1

    def init_state(self, atom):
        return {"total": 0.0}

    def step(self, atom, xs, rng):
        total = atom.params[0] * atom.state.get("total", 0.0)
        total += float(sum(np.sum(_flat(v)) for v in xs))
        atom.state["total"] = total
        return [Scalar(total) for _ in atom.outputs]

    def mutate(self, params, rng, sigma):
        return [float(np.clip(params[0] + rng.normal(0.0, sigma), 0.0, 1.0))]


class TerminatorKind(Kind):
    """Ends the trial when it activates; writes an on-signal to its outputs."""

    name = "Terminator"

    def valid(self, params, n_in, n_out):
        return super().valid(params, n_in, n_out) and len(params) == 0

    def step(self, atom, xs, rng):
        return [Signal(True) for _ in atom.outputs]


KINDS: dict[str, Kind] = {
    k.name: k for k in (
        ForwardModelKind(), SquaredErrorKind(), HillClimberKind(), MotorWriterKind(),
        InverseModelKind(), NetKind(), MutualInfoKind(), AccumulatorKind(), TerminatorKind(),
    )
}


def reset_generation(atom: ActorAtom) -> None:
    atom.state = atom.spec.init_state(atom)


def reset_trial(atom: ActorAtom) -> None:
    atom.spec.reset_trial(atom)


def read_inputs(atom: ActorAtom, wm: WorkingMemory) -> list:
    xs = []
    for k in atom.inputs:
        v = wm.read(k)
        if v is Absent:
            if k.startswith(MOTOR):
                v = Scalar(0.0)
            else:
                raise ArityMismatch(f"input {k} is absent")
        xs.append(v)
    return xs


def step_atom(atom: ActorAtom, wm: WorkingMemory, rng):
    """Step an activated atom. Returns ``(state, writes)``.

    Raises :class:`ArityMismatch` when inputs do not fit the transfer
    function; the caller logs it and carries on.
    """
    if not atom.state:
        atom.state = atom.spec.init_state(atom)
    xs = read_inputs(atom, wm)
    out = atom.spec.step(atom, xs, rng)
    if len(out) != len(atom.outputs):
        raise ArityMismatch(f"{atom.kind} produced {len(out)} values for {len(atom.outputs)} outputs")
    return atom.state, list(zip(atom.outputs, out))


def validate_actor(atom: ActorAtom) -> None:
    if atom.kind not in KINDS:
        raise InvalidAtom(f"atom {atom.id}: unknown kind {atom.kind!r}")
    if not atom.inputs or not atom.outputs:
        raise InvalidAtom(f"atom {atom.id}: inputs and outputs must be non-empty")
    for k in atom.inputs + atom.outputs:
        if not isinstance(k, str) or not k.startswith((SENSOR, MOTOR, INTERNAL)) or "|" in k:
            raise InvalidAtom(f"atom {atom.id}: malformed key {k!r}")
    if any(k.startswith(SENSOR) for k in atom.outputs):
        raise InvalidAtom(f"atom {atom.id}: actors may not write sensor keys")
    if not all(math.isfinite(float(p)) for p in atom.params):
        raise InvalidAtom(f"atom {atom.id}: non-finite parameter")
    if not atom.spec.valid(atom.params, len(atom.inputs), len(atom.outputs)):
        raise InvalidAtom(f"atom {atom.id}: {atom.kind} does not accept "
                          f"{len(atom.inputs)} inputs / {len(atom.outputs)} outputs with these params")
    validate_rule(atom.activation_rule)


def validate_game(g: GameAtom) -> None:
    if g.transform not in GAME_TRANSFORMS:
        raise InvalidAtom(f"game {g.id}: unknown transform {g.transform!r}")
    if not g.inputs:
        raise InvalidAtom(f"game {g.id}: no inputs")
    if g.transform == "ChainOutput":
        if not g.output_key or not g.output_key.startswith(INTERNAL):
            raise InvalidAtom(f"game {g.id}: chain games need a wm/ output key")
    elif g.output_key is not None:
        raise InvalidAtom(f"game {g.id}: terminal games may not declare an output key")
    if g.transform == "DistanceBetweenKeys" and len(g.inputs) % 2:
        raise InvalidAtom(f"game {g.id}: distance games need an even number of inputs")
    if not all(math.isfinite(float(p)) for p in g.params):
        raise InvalidAtom(f"game {g.id}: non-finite parameter")


# ---------------------------------------------------------------------------
# games


def _slot_value(wm: WorkingMemory, slot: str) -> float:
    for k in slot.split("|"):
        v = wm.read(k)
        if v is not Absent:
            return float(np.sum(_flat(v)))
    return 0.0


def game_observe(game: GameAtom, wm: WorkingMemory, step: int, trial_state: dict | None = None):
    """Observe working memory for one step.

    Returns ``(increment, chained_write)``: terminal games give a fitness
    increment and no write; chain games give 0.0 and a ``(key, value)`` pair.
    Absent inputs read as 0.
    """
    t = game.transform
    vals = [_slot_value(wm, s) for s in game.inputs]
    if t in ("AccumulateValue", "MaximizeIsIdentity"):
        return sum(game.weight(i) * v for i, v in enumerate(vals)), None
    if t == "NegateForMinimize":
        return -sum(game.weight(i) * v for i, v in enumerate(vals)), None
    if t == "ChainOutput":
        s = sum(game.weight(i) * v for i, v in enumerate(vals))
        return 0.0, (game.output_key, Scalar(s))
    if t == "DistanceBetweenKeys":
        half = len(vals) // 2
        a, b = np.array(vals[:half]), np.array(vals[half:])
        return -game.weight(0) * float(np.linalg.norm(a - b)), None
    if t == "VarianceOverTrial":
        # running sum of squared deviations (Welford), per slot
        st = trial_state if trial_state is not None else {}
        inc = 0.0
        for i, x in enumerate(vals):
            n, mean = st.get(i, (0, 0.0))
            n += 1
            delta = x - mean
            mean += delta / n
            st[i] = (n, mean)
            inc += game.weight(i) * delta * (x - mean)
        return inc, None
    raise InvalidAtom(f"unknown transform {t}")


def flip_polarity(game: GameAtom) -> None:
    if game.transform in ("AccumulateValue", "MaximizeIsIdentity"):
        game.transform = "NegateForMinimize"
    elif game.transform == "NegateForMinimize":
        game.transform = "MaximizeIsIdentity"
    else:
        n = max(len(game.params), 1 if game.transform == "DistanceBetweenKeys" else len(game.inputs))
        game.params = [-game.weight(i) for i in range(n)]


# ---------------------------------------------------------------------------
# serialization: one JSON object per line


def actor_record(a: ActorAtom) -> dict:
    return {"type": "actor", "id": a.id, "kind": a.kind, "params": [float(p) for p in a.params],
            "inputs": list(a.inputs), "outputs": list(a.outputs),
            "activation_rule": a.activation_rule, "reflex": bool(a.reflex)}


def game_record(g: GameAtom) -> dict:
    return {"type": "game", "id": g.id, "transform": g.transform,
            "params": [float(p) for p in g.params], "inputs": list(g.inputs),
            "output_key": g.output_key, "innate": bool(g.innate)}


def dumps(rec: dict) -> str:
    return json.dumps(rec, separators=(",", ":"))


def actor_from_record(rec: dict) -> ActorAtom:
    a = ActorAtom(int(rec["id"]), rec["kind"], [float(p) for p in rec["params"]],
                  list(rec["inputs"]), list(rec["outputs"]),
                  rec.get("activation_rule", "present"), bool(rec.get("reflex", False)))
    validate_actor(a)
    return a


def game_from_record(rec: dict) -> GameAtom:
    g = GameAtom(int(rec["id"]), rec["transform"], list(rec["inputs"]),
                 [float(p) for p in rec.get("params", [])], rec.get("output_key"),
                 bool(rec.get("innate", False)))
    validate_game(g)
    return g


@dataclass
class Library:
    meta: dict = field(default_factory=dict)
    actors: list = field(default_factory=list)
    games: list = field(default_factory=list)
    extras: list = field(default_factory=list)


def library_lines(lib: Library) -> list:
    lines = []
    if lib.meta:
        lines.append(dumps({"type": "meta", **lib.meta}))
    lines += [dumps(actor_record(a)) for a in lib.actors]
    lines += [dumps(game_record(g)) for g in lib.games]
    lines += [dumps(e) for e in lib.extras]
    return lines


def dump_library(lib: Library) -> str:
    return "".join(line + "\n" for line in library_lines(lib))


def parse_library(text: str) -> Library:
    lib = Library()
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise LibraryParseError(lineno, f"invalid JSON ({exc.msg} at column {exc.colno})") from None
        if not isinstance(rec, dict) or "type" not in rec:
            raise LibraryParseError(lineno, "record must be an object with a 'type' field")
        try:
            kind = rec["type"]
            if kind == "meta":
                lib.meta = {k: v for k, v in rec.items() if k != "type"}
            elif kind == "actor":
                lib.actors.append(actor_from_record(rec))
            elif kind == "game":
                lib.games.append(game_from_record(rec))
            else:
                lib.extras.append(rec)
        except (KeyError, TypeError, ValueError) as exc:
            raise LibraryParseError(lineno, f"bad {rec.get('type')} record: {exc}") from None
    return lib


def read_library(path) -> Library:
    with open(path) as fh:
        return parse_library(fh.read())


def write_library(path, lib: Library) -> None:
    with open(path, "w") as fh:
        fh.write(dump_library(lib))

