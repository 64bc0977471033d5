"""Reusable experiment drivers for the scenario behaviours.

Each function runs one seeded experiment and returns plain numbers, so the
same code backs the test suite and the scripts in ``scripts/``.
"""

from __future__ import annotations

import numpy as np

from .atoms import (
    ActorAtom, GameAtom, flip_polarity, reset_generation, validate_actor, validate_game,
)
from .config import Config
from .engine import (
    actor_fitness, assess_fitness, run_trial, sample_paths, sync_path_weights, update_paths,
)
from .env import reset
from .evolution import crossover, duplicate_molecule_M, evolve_games, replicate_atom_A
from .molecules import static_molecule
from .population import Population
from .loop import run
from .scenarios import SCENARIOS, load_scenario, resistance_mutants, seed_population


def _fresh(pop):
    for a in pop.atoms.values():
        reset_generation(a)
    return pop


def sensor_series(rec, key: str) -> np.ndarray:
    return np.array([ev.value.as_float() for ev in rec.log if ev.key == key])


def boundary_fraction(seed: int, obstruction: bool = True, steps: int = 500,
                      width: float = 0.05, cfg: Config | None = None) -> float:
    """Fraction of steps the elbow spends within ``width`` of either edge of
    the obstruction band during one resistance-molecule trial."""
    cfg = cfg or Config()
    pop, tmpl, _ = load_scenario("resistance", cfg)
    tmpl = tmpl.with_obstruction(obstruction, (cfg.obstruction_lo, cfg.obstruction_hi))
    _fresh(pop)
    rec = run_trial(0, pop.atoms, pop.games, reset(tmpl, [seed]), steps, cfg.dt,
                    np.random.default_rng(seed), trace=True)
    el = sensor_series(rec, "sensor/elbow_angle")
    near = (np.abs(el - cfg.obstruction_lo) <= width) | (np.abs(el - cfg.obstruction_hi) <= width)
    return float(near.mean())


REACH_BRANCHES = {"inverse": 1, "hill_climb": 3}


def reach_steps(branch: str, seed: int, steps: int = 500, threshold: float = 0.1,
                untrained: bool = False, cfg: Config | None = None):
    """Steps until the hand is within ``threshold`` of the object when only
    ``branch`` of the reaching molecule may run; None if never."""
    cfg = cfg or Config()
    pop, tmpl, _ = load_scenario("reaching_two_path", cfg, untrained_inverse=untrained)
    _fresh(pop)
    other = [v for k, v in REACH_BRANCHES.items() if k != branch]
    rec = run_trial(0, pop.atoms, pop.games, reset(tmpl, [seed]), steps, cfg.dt,
                    np.random.default_rng(seed), suppressed=other, trace=True)
    d = sensor_series(rec, "sensor/obj_dist")
    hit = np.nonzero(d < threshold)[0]
    return int(hit[0]) if len(hit) else None


def path_competition(seed: int, trials: int = 200, untrained: bool = False,
                     cfg: Config | None = None) -> dict:
    """Run the reaching molecule repeatedly, sampling one branch per trial
    and updating the branch weights. Returns the final choice probabilities
    keyed by branch name."""
    cfg = cfg or Config()
    pop, tmpl, _ = load_scenario("reaching_two_path", cfg, untrained_inverse=untrained)
    _fresh(pop)
    weights, baselines = {}, {}
    for k in range(trials):
        rng = np.random.default_rng([seed, k])
        bps = sync_path_weights(pop.atoms, weights)
        choices, suppressed = sample_paths(bps, weights, rng)
        rec = run_trial(0, pop.atoms, pop.games, reset(tmpl, [seed, k, 1]), cfg.t_steps, cfg.dt,
                        rng, suppressed)
        rec.branch_choices = choices
        update_paths(rec, weights, baselines, cfg.oja_eta, cfg.baseline_rate)
    w = weights[0]
    total = sum(w.values())
    return {name: w[aid] / total for name, aid in REACH_BRANCHES.items()}


def mutant_scores(seed: int, polarity_flip: bool = False, cfg: Config | None = None) -> dict:
    """Fitness of the resistance molecule (key 0) and its four one-step
    variants on the innate game, from one seeded assessment each."""
    cfg = cfg or Config()
    pop, tmpl, _ = load_scenario("resistance", cfg)
    if polarity_flip:
        flip_polarity(pop.games[0])
    variants = {0: pop, **resistance_mutants(pop)}
    out = {}
    for n, p in variants.items():
        a = assess_fitness(p, tmpl, cfg, seed=seed)
        out[n] = actor_fitness(0, a.matrix)
    return out


def constant_population(values, games) -> Population:
    """One two-atom molecule per value: a constant net feeding a zero-gain
    motor writer. Molecule ``i`` writes ``wm/c{i}``."""
    atoms = []
    for i, v in enumerate(values):
        atoms.append(ActorAtom(2 * i, "FeedForwardNet", [1.0, 1.0, 0.0, 0.0, float(v)],
                               ["sensor/elbow_angle"], [f"wm/c{i}"], "always"))
        atoms.append(ActorAtom(2 * i + 1, "MotorWriter", [0.0, 0.0], [f"wm/c{i}"],
                               ["motor/elbow_vel"]))
    return Population.from_atoms(atoms, games)


def game_selection(seed: int, generations: int = 30, n_games: int = 10, n_molecules: int = 16,
                   cfg: Config | None = None, stop_at: float | None = None):
    """Game tournaments between a game the actors score differently on and
    copies of one they all score identically on.

    The game population starts as one varying game and ``n_games - 1``
    constant games; actors are held fixed. Returns ``(spread, freqs)`` where
    ``spread`` is the sample variance of the actors' components on the
    varying game at generation 0 and ``freqs[g]`` is the fraction of games
    observing exactly the varying game's key set after generation ``g``.
    """
    cfg = cfg or Config(t_steps=5)
    rng = np.random.default_rng([int(seed), 3])
    values = rng.normal(0.0, 1.0, n_molecules)
    vary = [f"wm/c{i}" for i in range(n_molecules)]
    games = [GameAtom(0, "AccumulateValue", ["|".join(vary)])]
    games += [GameAtom(i, "AccumulateValue", ["sensor/elbow_angle"]) for i in range(1, n_games)]
    pop = constant_population(values, games)
    tmpl = load_scenario("minimal", cfg)[1]
    spread, freqs = None, []
    for gen in range(generations):
        a = assess_fitness(pop, tmpl, cfg, seed, gen)
        if gen == 0:
            spread = float(np.var([a.matrix.F(m, 0) for m in sorted(pop.molecules)], ddof=1))
        evolve_games(pop, cfg, rng, n_games)
        freqs.append(sum(set(g.keys()) == set(vary) for g in pop.games.values()) / len(pop.games))
        if stop_at is not None and freqs[-1] >= stop_at:
            break
    return spread, freqs


def _all_keys(pop) -> set:
    keys = {k for a in pop.atoms.values() for k in a.inputs + a.outputs}
    keys |= {k for g in pop.games.values() for k in g.keys() + ([g.output_key] if g.output_key else [])}
    return keys


def _shared_writes(pop) -> int:
    seen, dup = set(), 0
    for a in pop.atoms.values():
        for k in a.outputs:
            if k.startswith("wm/"):
                dup += k in seen
                seen.add(k)
    return dup


def _violations(pop) -> int:
    bad = 0
    for aid, a in pop.atoms.items():
        try:
            validate_actor(a)
            bad += a.id != aid
        except ValueError:
            bad += 1
    for gid, g in pop.games.items():
        try:
            validate_game(g)
            bad += g.id != gid
        except ValueError:
            bad += 1
    return bad


def _isomorphic(pop, tmpl, init, new_ids, mapping, cfg, seed) -> bool:
    parent = static_molecule(init, pop.atoms).atom_ids
    idmap = dict(zip(parent, new_ids))
    logs = []
    for start in (init, idmap[init]):
        for a in pop.atoms.values():
            reset_generation(a)
        rec = run_trial(start, pop.atoms, pop.games, reset(tmpl, [seed]), 30, cfg.dt,
                        np.random.default_rng(seed), trace=True)
        logs.append([(e.step, e.key, e.value, e.writer) for e in rec.log if isinstance(e.writer, int)])
    renamed = [(s, mapping.get(k, k), v, idmap.get(w)) for s, k, v, w in logs[0]]
    return bool(logs[0]) and renamed == logs[1]


def remap_fuzz(seed: int, ops: int = 10_000, iso_checks: int = 100, reset_every: int = 100,
               max_atoms: int = 80, cfg: Config | None = None) -> dict:
    """Random Type A replications, crossovers and Type M duplications on
    random seeded populations.

    After each operation the population is validated and the keys the
    operation introduced are checked against every key in use before it.
    The first ``iso_checks`` duplications also run parent and copy from the
    same trial seed and compare their write logs under the renaming.
    """
    cfg = cfg or Config()
    rng = np.random.default_rng([int(seed), 8])
    out = {"ops": 0, "violations": 0, "collisions": 0, "iso_checked": 0, "iso_failed": 0,
           "by_kind": {"A": 0, "crossover": 0, "M": 0}}
    pop = tmpl = None
    for i in range(ops):
        if i % reset_every == 0:
            pop, tmpl, _ = load_scenario(SCENARIOS[int(rng.integers(len(SCENARIOS)))], cfg)
            seed_population(pop, cfg, rng)
        before = _all_keys(pop)
        shared = _shared_writes(pop)
        ids = sorted(pop.atoms)
        op = int(rng.integers(3))
        if op == 2 and len(pop.atoms) >= max_atoms:
            op = 0
        if op == 0:
            off = replicate_atom_A(pop.atoms[ids[int(rng.integers(len(ids)))]], pop, rng)
            fresh = [k for k in off.outputs if k.startswith("wm/")]
            out["by_kind"]["A"] += 1
        elif op == 1:
            p1, p2 = (pop.atoms[ids[int(j)]] for j in rng.integers(len(ids), size=2))
            off = crossover(p1, p2, pop.new_atom_id(), pop.minter)
            try:
                validate_actor(off)
            except ValueError:
                out["violations"] += 1
                continue
            pop.add_atom(off)
            fresh = [k for k in off.outputs if k.startswith("wm/")]
            out["by_kind"]["crossover"] += 1
        else:
            inits = pop.initiators()
            init = inits[int(rng.integers(len(inits)))]
            mode = ("copy", "extend", "none")[int(rng.integers(3))]
            new_ids, _, mapping = duplicate_molecule_M(
                static_molecule(init, pop.atoms).atom_ids, pop, games=mode)
            fresh = list(mapping.values())
            out["collisions"] += len(fresh) - len(set(fresh))
            out["by_kind"]["M"] += 1
            if out["iso_checked"] < iso_checks:
                out["iso_checked"] += 1
                out["iso_failed"] += not _isomorphic(pop, tmpl, init, new_ids, mapping, cfg,
                                                     int(rng.integers(2**31)))
        out["collisions"] += len(set(fresh) & before) + (_shared_writes(pop) - shared)
        out["violations"] += _violations(pop)
        out["ops"] += 1
    return out


LTM_RUN = dict(t_steps=10, k_min=3, theta_fix=0.75, g_fix=5)


def ltm_diversity_pair(seed: int, scale: float = 0.5, post: int = 50, cap: int = 200,
                       scenario: str = "minimal", cfg: Config | None = None,
                       fixed_lambda: float | None = None) -> dict:
    """Two runs from the same seed, with and without the similarity penalty.

    Both runs are identical until the first transfer to the store. Returns
    the diversity ``post`` generations after each run's first fixation
    (None if the run never fixates within ``cap`` generations), the penalty
    coefficient used, and whether the stored serializations at run end equal
    those captured when each entry was stored. ``fixed_lambda`` replaces the
    scaled coefficient of the penalty run.
    """
    base = cfg or Config(**LTM_RUN)
    out = {}
    for name, sc in (("penalty", scale), ("control", 0.0)):
        res = run(base.updated(ltm_lambda_scale=sc), scenario, seed=seed, generations=cap,
                  post_fixation=post, lam=fixed_lambda if sc else None)
        ff = res.first_fixation
        reached = ff is not None and res.stats[-1].generation == ff + post
        out[name] = {"first_fixation": ff, "lambda": res.store.lam,
                     "diversity": res.stats[-1].diversity if reached else None,
                     "stored_intact": [list(e.records) for e in res.store.entries] == res.stored_records,
                     "stored": len(res.store)}
    return out
