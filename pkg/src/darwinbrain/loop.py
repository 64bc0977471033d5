"""The generational loop: assess, select actors, evolve games, archive fixations."""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .atoms import Library, write_library
from .config import Config
from .engine import actor_fitness, assess_fitness
from .evolution import evolve_games, select_and_replace
from .ltm import (
    LongTermStore, auto_lambda, detect_fixation, diversity,
    signature_frequencies, similarity_penalty, transfer_to_ltm,
)
from .molecules import Molecule, signature
from .scenarios import load_scenario, seed_population

METRICS_HEADER = ["generation", "entity", "id", "fitness", "samples"]


@dataclass
class GenerationStats:
    generation: int
    molecules: int
    games: int
    ltm_size: int
    diversity: float
    fitness: dict = field(default_factory=dict)


@dataclass
class RunResult:
    metrics: list
    stats: list
    store: LongTermStore
    first_fixation: int | None = None
    stored_records: list = field(default_factory=list)   # serializations captured at transfer
    population: object = None


def molecule_signatures(pop) -> dict:
    kinds = pop.kinds()
    out = {}
    for mid, m in pop.molecules.items():
        if mid not in pop.atoms:
            continue
        present = Molecule(m.id, tuple(a for a in m.atom_ids if a in kinds),
                           frozenset(e for e in m.edges if e[0] in kinds and e[2] in kinds),
                           m.initiator)
        out[mid] = signature(present, kinds)
    return out


def metrics_rows(generation: int, assessment, fitness: dict, pop) -> list:
    trials = {}
    for r in assessment.records:
        trials[r.initiator] = trials.get(r.initiator, 0) + 1
    rows = [[generation, "actor_molecule", m, repr(float(fitness[m])), trials.get(m, 0)]
            for m in sorted(fitness)]
    F = assessment.matrix
    assoc = F.association()
    for gid in sorted(pop.games):
        n = sum(1 for a in assoc.get(gid, ()) if F.stable(a, gid))
        rows.append([generation, "game", gid, repr(float(pop.games[gid].fitness)), n])
    return rows


def snapshot_library(pop, generation: int, fitness: dict, scenario: str) -> Library:
    lib = pop.to_library({"generation": generation, "scenario": scenario})
    for mid in sorted(pop.molecules):
        if mid in pop.atoms:
            lib.extras.append({"type": "molecule", "initiator": mid,
                               "fitness": float(fitness.get(mid, 0.0)),
                               "atom_ids": [a for a in pop.molecules[mid].atom_ids if a in pop.atoms]})
    return lib


def run(cfg: Config, scenario: str, seed: int = 0, generations: int = 10, out: str | None = None,
        snapshot_every: int = 0, trace: bool = False, jobs: int = 1,
        store: LongTermStore | None = None, post_fixation: int | None = None,
        lam: float | None = None) -> RunResult:
    """Evolve ``scenario`` for ``generations`` generations after generation 0.

    With ``post_fixation`` set, the run ends early once that many
    generations have passed since the first transfer to the store. ``lam``
    fixes the penalty coefficient instead of scaling it from generation 0.
    """
    pop, template, _ = load_scenario(scenario, cfg)
    rng = np.random.default_rng([int(seed), 0xE7])
    seed_population(pop, cfg, rng)
    game_target = cfg.game_population_size or len(pop.games)
    store = store.rebase(pop) if store is not None else LongTermStore()
    lam_set = bool(store.entries) or lam is not None
    if lam is not None:
        store.lam = float(lam)
    history, stats, metrics = [], [], []
    first_fix = None
    stored_at_transfer = []
    if out:
        os.makedirs(out, exist_ok=True)
        with open(os.path.join(out, "manifest.json"), "w") as fh:
            json.dump({"scenario": scenario, "seed": int(seed), "generations": int(generations),
                       "config": cfg.as_dict(), "version": __version__}, fh, indent=2, sort_keys=True)
            fh.write("\n")
    for gen in range(generations + 1):
        trace_dir = os.path.join(out, "traces") if (trace and out) else None
        a = assess_fitness(pop, template, cfg, seed, gen, ltm=store if store.entries else None,
                           jobs=jobs, trace_dir=trace_dir)
        fitness = {m: actor_fitness(m, a.matrix, strict=False) for m in sorted(pop.molecules)}
        if not lam_set:
            store.lam = auto_lambda(fitness.values(), cfg.ltm_lambda_scale)
            lam_set = True
        metrics.extend(metrics_rows(gen, a, fitness, pop))
        sigs = molecule_signatures(pop)
        stats.append(GenerationStats(gen, len(sigs), len(pop.games), len(store),
                                     diversity(sigs[m] for m in sorted(sigs)), dict(fitness)))
        history.append(signature_frequencies(pop))
        if out and snapshot_every and gen % snapshot_every == 0:
            os.makedirs(os.path.join(out, "snapshots"), exist_ok=True)
            write_library(os.path.join(out, "snapshots", f"gen_{gen:04d}.jsonl"),
                          snapshot_library(pop, gen, fitness, scenario))
        if gen == generations or (post_fixation is not None and first_fix is not None
                                   and gen >= first_fix + post_fixation):
            break
        select_and_replace(pop, fitness, cfg, rng,
                           penalty=lambda m, f: similarity_penalty(store, f, sigs[m]))
        evolve_games(pop, cfg, rng, game_target)
        for key in detect_fixation(history, cfg.theta_fix, cfg.g_fix):
            if any(e.signature.key == key for e in store.entries):
                continue
            try:
                entry = transfer_to_ltm(store, pop, key, gen, cfg, rng)
            except KeyError:
                continue
            stored_at_transfer.append(list(entry.records))
            if first_fix is None:
                first_fix = gen
    if out:
        with open(os.path.join(out, "metrics.csv"), "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(METRICS_HEADER)
            w.writerows(metrics)
        with open(os.path.join(out, "population.csv"), "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["generation", "molecules", "games", "ltm_size", "diversity"])
            for s in stats:
                w.writerow([s.generation, s.molecules, s.games, s.ltm_size, repr(s.diversity)])
        write_library(os.path.join(out, "ltm.jsonl"), store.to_library())
    return RunResult(metrics, stats, store, first_fix, stored_at_transfer, pop)
