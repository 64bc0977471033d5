"""Shipped initial populations: hand-built molecules with their innate games.

Each scenario is a JSONL atom library under ``data/``; the ``meta`` record
holds the body setup and any config overrides. ``scripts/build_scenarios.py``
regenerates the files from the builders below.
"""

from __future__ import annotations

import math
from importlib import resources

import numpy as np

from . import nets
from .atoms import (
    ActorAtom, ForwardModelKind, GameAtom, InvalidAtom, Library, LibraryParseError,
    dump_library, parse_library,
)
from .config import Config
from .env import EnvTemplate, forward_kinematics
from .evolution import duplicate_molecule_M, mutate_specific
from .molecules import static_molecule
from .population import Population

SCENARIOS = ("resistance", "reaching_two_path", "mi_observer", "minimal")

ANGLES = ["sensor/shoulder_angle", "sensor/elbow_angle"]
BOTH_MOTORS = ["motor/shoulder_vel", "motor/elbow_vel"]

# exploration step of the resistance hill climber, in velocity units; larger
# steps make a minimizing variant's own jitter more surprising than the
# maximizer's pushing
RESISTANCE_SIGMA = 0.05


class UnknownScenario(KeyError):
    def __str__(self):
        return f"unknown scenario {self.args[0]!r}; expected one of {', '.join(SCENARIOS)}"


class ValidationFailure(ValueError):
    pass


# ---------------------------------------------------------------------------
# builders


def build_resistance(cfg: Config, rng) -> Library:
    """Forward model -> prediction error -> hill climber -> elbow motor.

    The hill climber emits the elbow velocity and is rewarded by the forward
    model's squared prediction error, so it seeks commands whose outcome is
    surprising, such as pushing against an obstruction.
    """
    fm = ActorAtom(0, "ForwardModel", ForwardModelKind.default_params(
        rng, cfg.fm_hidden, cfg.fm_lr, cfg.dt * cfg.v_max),
                   ["sensor/elbow_angle", "motor/elbow_vel"], ["wm/pred_elbow", "wm/obs_elbow"],
                   "always", True)
    se = ActorAtom(1, "SquaredError", [0.0], ["wm/pred_elbow", "wm/obs_elbow"], ["wm/pred_err"],
                   "present", True)
    shc = ActorAtom(2, "StochasticHillClimber", [RESISTANCE_SIGMA, cfg.shc_p_w, 1.0, 0.0],
                    ["wm/pred_err"], ["wm/explore_cmd"], "present", True)
    mw = ActorAtom(3, "MotorWriter", [1.0, 0.0], ["wm/explore_cmd"], ["motor/elbow_vel"],
                   "present", True)
    game = GameAtom(0, "AccumulateValue", ["wm/pred_err"], innate=True)
    meta = {"scenario": "resistance",
            "env": {"obstruction": [cfg.obstruction_lo, cfg.obstruction_hi],
                    "start_shoulder": 0.0, "start_elbow": 0.3},
            "config": {}}
    return Library(meta, [fm, se, shc, mw], [game])


def ik_samples(n: int, rng, template: EnvTemplate | None = None):
    """Object positions with their elbow-up joint solutions."""
    t = template or EnvTemplate()
    lo = abs(t.link1 - t.link2) + t.reach_margin
    hi = t.link1 + t.link2 - t.reach_margin
    r = rng.uniform(lo, hi, size=n)
    a = rng.uniform(*t.obj_angle_range, size=n)
    x, y = r * np.cos(a), r * np.sin(a)
    c = (r * r - t.link1 ** 2 - t.link2 ** 2) / (2 * t.link1 * t.link2)
    elbow = np.arccos(np.clip(c, -1.0, 1.0))
    shoulder = a - np.arctan2(t.link2 * np.sin(elbow), t.link1 + t.link2 * np.cos(elbow))
    return np.column_stack([x, y]), np.column_stack([shoulder, elbow])


def inverse_model_params(rng, hidden: int = 64, n: int = 4000, trained: bool = True) -> list:
    if trained:
        X, Y = ik_samples(n, rng)
        w = nets.fit_random_features(X, Y, hidden, rng)
    else:
        W1 = rng.normal(0.0, 1.5, size=(hidden, 2))
        b1 = rng.uniform(-math.pi, math.pi, size=hidden)
        W2 = rng.normal(0.0, 0.1, size=(2, hidden))
        w = nets.mlp_pack((W1, b1, W2, np.zeros(2)))
    return [2.0, 2.0, float(hidden)] + w


def build_reaching(cfg: Config, rng, trained: bool = True) -> Library:
    """A sensing atom feeding two competing reaching branches.

    Branch A maps the object position through an inverse model to joint
    targets; branch B hill-climbs joint targets on the object distance.
    Both drive the arm through position servos.
    """
    ident = [1, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0]
    sense = ActorAtom(0, "FeedForwardNet", [3.0, 3.0, 0.0] + [float(v) for v in ident],
                      ["sensor/obj_x", "sensor/obj_y", "sensor/obj_dist"],
                      ["wm/goal_x", "wm/goal_y", "wm/goal_dist"], "always", True)
    im = ActorAtom(1, "InverseModel", inverse_model_params(rng, trained=trained),
                   ["wm/goal_x", "wm/goal_y"], ["wm/ik_shoulder", "wm/ik_elbow"], "present", True)
    servo_a = ActorAtom(2, "MotorWriter", [1.0 / cfg.dt, 1.0],
                        ["wm/ik_shoulder", "wm/ik_elbow"] + ANGLES, list(BOTH_MOTORS),
                        "present", True)
    shc = ActorAtom(3, "StochasticHillClimber", [0.05, 0.0, -1.0, 0.0, 0.3],
                    ["wm/goal_dist"], ["wm/shc_shoulder", "wm/shc_elbow"], "present", True)
    servo_b = ActorAtom(4, "MotorWriter", [1.0 / cfg.dt, 1.0],
                        ["wm/shc_shoulder", "wm/shc_elbow"] + ANGLES, list(BOTH_MOTORS),
                        "present", True)
    game = GameAtom(0, "DistanceBetweenKeys",
                    ["sensor/hand_x", "sensor/hand_y", "sensor/obj_x", "sensor/obj_y"], innate=True)
    meta = {"scenario": "reaching_two_path",
            "env": {"obstruction": None, "start_shoulder": 0.0, "start_elbow": 0.3},
            "config": {}, "inverse_model": "trained" if trained else "untrained"}
    return Library(meta, [sense, im, servo_a, shc, servo_b], [game])


def build_mi_observer(cfg: Config, rng) -> Library:
    """A babbling elbow plus an observer scoring command/angle mutual information.

    The observer molecule writes only its score; it drives no motor.
    """
    babble = ActorAtom(0, "StochasticHillClimber", [0.3, 0.05, 1.0, 0.0], ["sensor/effort"],
                       ["wm/babble"], "always", True)
    mw = ActorAtom(1, "MotorWriter", [1.0, 0.0], ["wm/babble"], ["motor/elbow_vel"], "present", True)
    mi = ActorAtom(2, "MutualInfo", [50.0, float(cfg.mi_bins), -1.0, 1.0, -math.pi / 2, math.pi],
                   ["sensor/last_elbow_cmd", "sensor/elbow_angle"], ["wm/mi"], "always", True)
    game = GameAtom(0, "AccumulateValue", ["wm/mi"], innate=True)
    meta = {"scenario": "mi_observer",
            "env": {"obstruction": None, "start_shoulder": 0.0, "start_elbow": 0.3},
            "config": {}}
    return Library(meta, [babble, mw, mi], [game])


def build_minimal(cfg: Config, rng) -> Library:
    """Linear elbow controller with an exploration game and an effort game."""
    drive = ActorAtom(0, "FeedForwardNet", [1.0, 1.0, 0.0, -1.0, 0.5], ["sensor/elbow_angle"],
                      ["wm/drive"], "always", True)
    mw = ActorAtom(1, "MotorWriter", [1.0, 0.0], ["wm/drive"], ["motor/elbow_vel"], "present", True)
    games = [GameAtom(0, "VarianceOverTrial", ["sensor/elbow_angle"], innate=True),
             GameAtom(1, "NegateForMinimize", ["sensor/effort"])]
    meta = {"scenario": "minimal",
            "env": {"obstruction": None, "start_shoulder": 0.0, "start_elbow": 0.3},
            "config": {}}
    return Library(meta, [drive, mw], games)


BUILDERS = {
    "resistance": build_resistance,
    "reaching_two_path": build_reaching,
    "mi_observer": build_mi_observer,
    "minimal": build_minimal,
}


def build_all(seed: int = 0) -> dict:
    """Scenario name -> serialized library text (deterministic in ``seed``)."""
    cfg = Config()
    out = {}
    for i, name in enumerate(SCENARIOS):
        rng = np.random.default_rng([seed, i])
        out[name] = dump_library(BUILDERS[name](cfg, rng))
    out["reaching_two_path_untrained"] = dump_library(
        build_reaching(cfg, np.random.default_rng([seed, 1]), trained=False))
    return out


# ---------------------------------------------------------------------------
# loading


def scenario_text(name: str, untrained_inverse: bool = False) -> str:
    if name not in SCENARIOS:
        raise UnknownScenario(name)
    fname = name + ("_untrained" if untrained_inverse and name == "reaching_two_path" else "")
    return resources.files("darwinbrain").joinpath("data", fname + ".jsonl").read_text()


def template_from(meta: dict, cfg: Config) -> EnvTemplate:
    env = meta.get("env", {})
    obs = env.get("obstruction")
    return EnvTemplate(link1=cfg.link1, link2=cfg.link2, joint_min=cfg.joint_min,
                       joint_max=cfg.joint_max, v_max=cfg.v_max,
                       start_shoulder=float(env.get("start_shoulder", 0.0)),
                       start_elbow=float(env.get("start_elbow", 0.3)),
                       obstruction=tuple(obs) if obs else None)


def validate_population(pop: Population) -> None:
    if not any(a.reflex and a.is_initiator() for a in pop.atoms.values()):
        raise ValidationFailure("no reflex initiator in the population")


def load_scenario(name: str, cfg: Config | None = None, untrained_inverse: bool = False):
    """Returns ``(population, env template, library meta)``."""
    cfg = cfg or Config()
    text = scenario_text(name, untrained_inverse)
    try:
        lib = parse_library(text)
        pop = Population.from_library(lib)
    except (LibraryParseError, InvalidAtom, ValueError) as exc:
        raise ValidationFailure(f"scenario {name}: {exc}") from exc
    validate_population(pop)
    return pop, template_from(lib.meta, cfg), lib.meta


def seed_population(pop: Population, cfg: Config, rng) -> Population:
    """Pad with parameter-varied copies of the reflex molecules until the
    population holds ``cfg.population_size`` molecules."""
    roots = [a.id for a in sorted(pop.atoms.values(), key=lambda a: a.id)
             if a.reflex and a.is_initiator()]
    i = 0
    while len(pop.initiators()) < cfg.population_size:
        mol = static_molecule(roots[i % len(roots)], pop.atoms)
        new_ids, _, _ = duplicate_molecule_M(mol.atom_ids, pop, games="extend")
        for aid in new_ids:
            mutate_specific(pop.atoms[aid], rng, cfg.specific_sigma)
        i += 1
    return pop


# ---------------------------------------------------------------------------
# hand-built variants


def resistance_mutants(pop: Population, rng=None) -> dict:
    """The four one-step variants of the resistance molecule.

    1. forward model watches the shoulder instead of the elbow
    2. prediction error becomes a signed difference
    3. hill climber minimises instead of maximises
    4. motor writer drives the shoulder instead of the elbow
    """
    out = {}
    edits = {
        1: (0, lambda a: a.inputs.__setitem__(0, "sensor/shoulder_angle")),
        2: (1, lambda a: a.params.__setitem__(0, 1.0)),
        3: (2, lambda a: a.params.__setitem__(2, -a.params[2])),
        4: (3, lambda a: a.outputs.__setitem__(0, "motor/shoulder_vel")),
    }
    for n, (aid, edit) in edits.items():
        p = pop.copy()
        edit(p.atoms[aid])
        p.atoms[aid].state = {}
        out[n] = p
    return out


def displacement_variants() -> dict:
    """Hand-displacement games and their five variants, as game molecules."""
    disp = ["sensor/hand_x", "sensor/hand_y"]

    def g(t, ins, params=()):
        return GameAtom(0, t, list(ins), list(params))

    return {
        "maximize_displacement": [g("VarianceOverTrial", disp)],
        "minimize_displacement": [g("VarianceOverTrial", disp, [-1.0, -1.0])],
        "displacement_near_object": [g("VarianceOverTrial", disp),
                                     g("NegateForMinimize", ["sensor/obj_dist"])],
        "displacement_minus_effort": [g("VarianceOverTrial", disp),
                                      g("NegateForMinimize", ["sensor/effort"])],
        "object_relative_displacement": [g("VarianceOverTrial", ["sensor/obj_dist"])],
        "elbow_displacement": [g("VarianceOverTrial", ["sensor/elbow_angle"])],
    }


def hand_reach_error(theta, obj, template: EnvTemplate | None = None) -> float:
    t = template or EnvTemplate()
    hx, hy = forward_kinematics(theta, t.link1, t.link2)
    return math.hypot(obj[0] - hx, obj[1] - hy)
