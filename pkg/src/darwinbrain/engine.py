"""Trial execution and the fitness assessment loop.

A trial starts from one initiator atom. Each step the body is sensed into a
fresh working memory, triggered atoms step in ascending id order, games
observe, and motor registers drive the arm. An atom is triggered once it is
the initiator or one of its ``wm/`` inputs has been written by an atom during
the trial; it then steps whenever its activation rule holds. Motor registers
are shared by the whole body, so writing one does not recruit other atoms.
"""

from __future__ import annotations

import copy
import json
import logging
import os
from collections import Counter, defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .atoms import (
    ArityMismatch, check_activation, game_observe, reset_generation, reset_trial, step_atom,
)
from .config import Config
from .env import MOTOR_KEYS, EnvTemplate, apply_motors, reset
from .evolution import AllZeroWeights, branch_probabilities, path_compete_update
from .molecules import extract_molecule, merge_molecules
from .workmem import (
    INTERNAL, MOTOR, SENSOR, WorkingMemory, WorkingMemoryError, collect_motors, sync_sensors,
    value_to_json,
)

log = logging.getLogger(__name__)


class NoInitiator(Exception):
    pass


class UnstableEntries(Exception):
    pass


@dataclass
class TrialRecord:
    initiator: int
    steps: int = 0
    log: list = field(default_factory=list)
    components: dict = field(default_factory=dict)   # game id -> component this trial
    activated: set = field(default_factory=set)
    edges: set = field(default_factory=set)
    associated: set = field(default_factory=set)
    miswirings: list = field(default_factory=list)
    terminated: bool = False
    branch_choices: dict = field(default_factory=dict)
    trial_index: int = 0
    final_env: object = None

    @property
    def reward(self) -> float:
        """Mean per-step score over the terminal games associated with the trial."""
        if not self.steps:
            return 0.0
        return sum(self.components[g] for g in self.associated) / self.steps


@dataclass
class FitnessMatrix:
    """Sampled F(a, g): component sum and sample count per (molecule, game)."""

    k_min: int = 5
    entries: dict = field(default_factory=dict)
    chain_games: set = field(default_factory=set)
    ltm_molecules: set = field(default_factory=set)

    def add(self, a: int, g: int, component: float) -> None:
        s, n = self.entries.get((a, g), (0.0, 0))
        self.entries[(a, g)] = (s + component, n + 1)

    def merge(self, other: "FitnessMatrix") -> None:
        for key, (s, n) in other.entries.items():
            s0, n0 = self.entries.get(key, (0.0, 0))
            self.entries[key] = (s0 + s, n0 + n)

    def F(self, a: int, g: int) -> float:
        s, n = self.entries[(a, g)]
        return s / n

    def samples(self, a: int, g: int) -> int:
        return self.entries.get((a, g), (0.0, 0))[1]

    def stable(self, a: int, g: int) -> bool:
        return self.samples(a, g) >= self.k_min

    def association(self) -> dict:
        out = defaultdict(set)
        for a, g in self.entries:
            out[g].add(a)
        return dict(out)

    def games_of(self, a: int) -> list:
        return sorted(g for (aa, g) in self.entries if aa == a)

    def molecules(self) -> list:
        return sorted({a for a, _ in self.entries})


def welford_variance(values) -> float:
    n, mean, m2 = 0, 0.0, 0.0
    for x in values:
        n += 1
        d = x - mean
        mean += d / n
        m2 += d * (x - mean)
    return m2 / (n - 1) if n > 1 else 0.0


def actor_fitness(a: int, F: FitnessMatrix, strict: bool = True) -> float:
    """Sum of F(a, g) over the terminal games associated with molecule ``a``.

    Entries below ``k_min`` samples raise :class:`UnstableEntries`, or are
    skipped when ``strict`` is false.
    """
    total = 0.0
    for g in F.games_of(a):
        if g in F.chain_games:
            continue
        if not F.stable(a, g):
            if not strict:
                continue
            raise UnstableEntries(f"F({a},{g}) has {F.samples(a, g)} < {F.k_min} samples")
        total += F.F(a, g)
    return total


def game_fitness(g: int, F: FitnessMatrix) -> float:
    """Sample variance of F(a, g) over the stable associated molecules."""
    vals = [F.F(a, g) for a in sorted(F.association().get(g, ())) if F.stable(a, g)]
    return welford_variance(vals) if len(vals) >= 2 else 0.0


def select_initiator(atoms, exclude=()) -> "ActorAtom":
    """Least-activated atom reading only grounding registers; ties to lowest id."""
    items = atoms.values() if isinstance(atoms, dict) else atoms
    eligible = [a for a in items if a.is_initiator() and a.id not in exclude]
    if not eligible:
        raise NoInitiator("no atom reads only sensor/motor registers")
    return min(eligible, key=lambda a: (a.activation_count, a.id))


def associated_games(written: set, games: dict) -> set:
    """Games observing a key the molecule wrote; games reading sensors are
    associated with any molecule that drives a motor. Chain outputs of
    associated games propagate the association downstream."""
    written = set(written)
    drives_body = any(k.startswith(MOTOR) for k in written)
    out = set()
    changed = True
    while changed:
        changed = False
        for gid in sorted(games):
            if gid in out:
                continue
            g = games[gid]
            keys = g.keys()
            if written.intersection(keys) or (drives_body and any(k.startswith(SENSOR) for k in keys)):
                out.add(gid)
                changed = True
                if g.output_key:
                    written.add(g.output_key)
    return out


def run_trial(initiator: int, atoms: dict, games: dict, env, t_steps: int, dt: float, rng,
              suppressed=(), trace: bool = False) -> TrialRecord:
    wm = WorkingMemory(trace=trace)
    rec = TrialRecord(initiator)
    order = sorted(atoms)
    for aid in order:
        reset_trial(atoms[aid])
    triggered = {initiator}
    written = set()
    gstate = {gid: {} for gid in games}
    comps = {gid: 0.0 for gid in games}
    suppressed = set(suppressed)
    for step in range(t_steps):
        wm.step = step
        sync_sensors(wm, env)
        stop = False
        for aid in order:
            if aid in suppressed:
                continue
            a = atoms[aid]
            if aid not in triggered:
                if not any(k in written for k in a.inputs if k.startswith(INTERNAL)):
                    continue
                triggered.add(aid)
            if not check_activation(a, wm):
                continue
            try:
                _, writes = step_atom(a, wm, rng)
            except ArityMismatch as exc:
                rec.miswirings.append((step, aid, str(exc)))
                continue
            for k in a.inputs:
                w = wm.writer_of(k)
                if isinstance(w, int) and w != aid:
                    rec.edges.add((w, k, aid))
            for k, v in writes:
                try:
                    wm.write(k, v, aid)
                except WorkingMemoryError as exc:
                    rec.miswirings.append((step, aid, str(exc)))
                    continue
                written.add(k)
            rec.activated.add(aid)
            if a.kind == "Terminator":
                stop = True
        for gid in sorted(games):
            inc, cw = game_observe(games[gid], wm, step, gstate[gid])
            comps[gid] += inc
            if cw is not None:
                try:
                    wm.write(cw[0], cw[1], f"game:{gid}")
                except WorkingMemoryError as exc:
                    rec.miswirings.append((step, f"game:{gid}", str(exc)))
        rec.steps = step + 1
        if stop:
            rec.terminated = True
            break
        env = apply_motors(env, collect_motors(wm, MOTOR_KEYS), dt)
    for e in wm.errors:
        rec.miswirings.append((e[1], "motor", e[2]))
    mol_written = {k for aid in rec.activated for k in atoms[aid].outputs}
    assoc = associated_games(mol_written, games)
    rec.associated = {g for g in assoc if games[g].transform != "ChainOutput"}
    rec.components = {g: comps[g] for g in assoc}
    rec.log = wm.log
    rec.final_env = env
    return rec


# ---------------------------------------------------------------------------
# path competition


def branch_points(atoms: dict) -> dict:
    """Atoms whose internal outputs are read by two or more other atoms."""
    readers = defaultdict(set)
    for a in atoms.values():
        for k in a.inputs:
            if k.startswith(INTERNAL):
                readers[k].add(a.id)
    out = {}
    for a in atoms.values():
        rs = set()
        for k in a.outputs:
            if k.startswith(INTERNAL):
                rs |= readers.get(k, set())
        rs.discard(a.id)
        if len(rs) >= 2:
            out[a.id] = sorted(rs)
    return out


def sync_path_weights(atoms: dict, weights: dict) -> dict:
    """Bring stored weights in line with the current branch structure.

    New competitors start at 1/k.
    """
    bps = branch_points(atoms)
    for bid in list(weights):
        if bid not in bps:
            del weights[bid]
    for bid, readers in bps.items():
        w = weights.setdefault(bid, {})
        for r in list(w):
            if r not in readers:
                del w[r]
        for r in readers:
            w.setdefault(r, 1.0 / len(readers))
    return bps


def sample_paths(bps: dict, weights: dict, rng):
    choices, suppressed = {}, set()
    for bid in sorted(bps):
        readers = bps[bid]
        try:
            p = branch_probabilities(weights[bid], readers)
        except AllZeroWeights:
            weights[bid] = {r: 1.0 / len(readers) for r in readers}
            p = branch_probabilities(weights[bid], readers)
        pick = readers[int(rng.choice(len(readers), p=p))]
        choices[bid] = pick
        suppressed.update(r for r in readers if r != pick)
    for pick in choices.values():
        suppressed.discard(pick)
    return choices, suppressed


def update_paths(rec: TrialRecord, weights: dict, baselines: dict, eta: float, rate: float) -> None:
    """Oja-style update of the branch taken, with reward measured against the
    mean of the running reward averages of every branch tried so far."""
    for bid, pick in rec.branch_choices.items():
        if bid not in rec.activated:
            continue
        R = rec.reward
        avg = baselines.setdefault(bid, {})
        avg.setdefault(pick, R)
        base = sum(avg.values()) / len(avg)
        weights[bid] = path_compete_update(weights[bid], {pick: R - base}, eta)
        avg[pick] += rate * (R - avg[pick])


# ---------------------------------------------------------------------------
# assessment


def trial_seed(seed: int, generation: int, initiator: int, k: int) -> list:
    return [int(seed), int(generation), int(initiator), int(k)]


@dataclass
class JobResult:
    initiator: int
    records: list
    states: dict
    counts: Counter
    fitness_records: dict
    path_weights: dict
    path_baselines: dict
    matrix: FitnessMatrix


def _run_job(args) -> JobResult:
    (initiator, atoms, games, weights, baselines, ltm_atoms, template, cfg,
     seed, generation, trace) = args
    all_atoms = dict(atoms)
    all_atoms.update(ltm_atoms)
    matrix = FitnessMatrix(cfg.k_min)
    records = []
    counts = Counter()
    frec = defaultdict(lambda: defaultdict(list))
    first_state = {}
    k = 0
    per_game = Counter()
    while True:
        rng = np.random.default_rng(trial_seed(seed, generation, initiator, k))
        env = reset(template, trial_seed(seed, generation, initiator, k) + [1])
        bps = sync_path_weights(atoms, weights)
        choices, suppressed = sample_paths(bps, weights, rng)
        rec = run_trial(initiator, all_atoms, games, env, cfg.t_steps, cfg.dt, rng,
                        suppressed, trace)
        rec.branch_choices = choices
        rec.trial_index = k
        update_paths(rec, weights, baselines, cfg.oja_eta, cfg.baseline_rate)
        for g, c in rec.components.items():
            matrix.add(initiator, g, c)
            per_game[g] += 1
        for aid in rec.activated:
            if aid in atoms:
                counts[aid] += 1
                for g, c in rec.components.items():
                    frec[aid][g].append(c)
        if not trace:
            rec.log = []
        rec.final_env = None
        records.append(rec)
        k += 1
        if k >= cfg.k_min and all(n >= cfg.k_min for n in per_game.values()):
            break
        if k >= cfg.k_min * cfg.max_trial_factor:
            break
    stepped = set().union(*(r.activated for r in records)) if records else set()
    states = {aid: atoms[aid].state for aid in stepped if aid in atoms}
    return JobResult(initiator, records, states, counts,
                     {a: dict(v) for a, v in frec.items()},
                     {b: w for b, w in weights.items() if b in stepped},
                     {b: v for b, v in baselines.items() if b in stepped},
                     matrix)


@dataclass
class Assessment:
    matrix: FitnessMatrix
    records: list
    molecules: dict


def assess_fitness(pop, template: EnvTemplate, cfg: Config, seed: int = 0, generation: int = 0,
                   ltm=None, jobs: int = 1, trace_dir=None) -> Assessment:
    """Run every initiator's molecule until each (molecule, game) entry it
    produces has ``k_min`` samples, then merge results in initiator order.

    Each initiator's trials run in sequence on a private copy of the
    population, so results do not depend on ``jobs``.
    """
    for a in pop.atoms.values():
        reset_generation(a)
        a.activation_count = 0
        a.fitness_records = {}
    ltm_atoms = ltm.executable_atoms() if ltm is not None else {}
    initiators = []
    remaining = dict(pop.atoms)
    while True:
        try:
            a = select_initiator(remaining, exclude=set(initiators))
        except NoInitiator:
            break
        initiators.append(a.id)
    ltm_inits = sorted(a.id for a in ltm_atoms.values() if a.is_initiator())
    trace = trace_dir is not None
    tasks = []
    for init in sorted(initiators) + ltm_inits:
        tasks.append((init, pop.atoms, pop.games, pop.path_weights, pop.path_baselines,
                      ltm_atoms, template, cfg, seed, generation, trace))
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_run_job, tasks))
    else:
        results = [_run_job(copy.deepcopy(t)) for t in tasks]
    return _merge(pop, results, cfg, set(ltm_inits), trace_dir, generation)


def _merge(pop, results, cfg, ltm_inits, trace_dir, generation) -> Assessment:
    matrix = FitnessMatrix(cfg.k_min)
    matrix.chain_games = {g for g, ga in pop.games.items() if ga.transform == "ChainOutput"}
    matrix.ltm_molecules = set(ltm_inits)
    records, molecules = [], {}
    claimed_state, claimed_path = set(), set()
    for res in sorted(results, key=lambda r: r.initiator):
        matrix.merge(res.matrix)
        records.extend(res.records)
        molecules[res.initiator] = merge_molecules(
            extract_molecule(r, strict=False) for r in res.records)
        for aid, st in res.states.items():
            if aid in pop.atoms and aid not in claimed_state:
                pop.atoms[aid].state = st
                claimed_state.add(aid)
        for aid, n in res.counts.items():
            pop.atoms[aid].activation_count += n
        for aid, recs in res.fitness_records.items():
            fr = pop.atoms[aid].fitness_records
            for g, vals in recs.items():
                fr.setdefault(g, []).extend(vals)
        for bid, w in res.path_weights.items():
            if bid not in claimed_path:
                pop.path_weights[bid] = w
                if bid in res.path_baselines:
                    pop.path_baselines[bid] = res.path_baselines[bid]
                claimed_path.add(bid)
        if trace_dir is not None:
            os.makedirs(trace_dir, exist_ok=True)
            for r in res.records:
                name = f"gen{generation:04d}_init{r.initiator}_trial{r.trial_index}.jsonl"
                with open(os.path.join(trace_dir, name), "w") as fh:
                    for ev in r.log:
                        fh.write(json.dumps({"step": ev.step, "key": ev.key,
                                             "value": value_to_json(ev.value),
                                             "writer": ev.writer}) + "\n")
                r.log = []
    pop.molecules = {i: m for i, m in molecules.items() if i not in ltm_inits}
    assoc = matrix.association()
    for gid, g in pop.games.items():
        g.fitness = game_fitness(gid, matrix)
        g.association = set(assoc.get(gid, ()))
        g.assessed = True
    return Assessment(matrix, records, molecules)
