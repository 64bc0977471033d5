"""Variation and selection for the actor and game populations."""

from __future__ import annotations

import re

import numpy as np

from .atoms import (
    KINDS, ActorAtom, GameAtom, flip_polarity, rename_rule, rule_key, validate_actor,
)
from .env import MOTOR_KEYS, SENSOR_KEYS
from .workmem import INTERNAL


class AllZeroWeights(ValueError):
    pass


# ---------------------------------------------------------------------------
# path competition


def branch_probabilities(weights: dict, readers) -> np.ndarray:
    w = np.array([max(float(weights.get(r, 0.0)), 0.0) for r in readers])
    total = w.sum()
    if not total > 0:
        raise AllZeroWeights("all path weights are zero")
    return w / total


def path_compete_update(weights: dict, rewards: dict, eta: float) -> dict:
    """Oja-style update ``w <- w + eta * r * (1 - r * w)``, clamped at zero.

    Branches missing from ``rewards`` are left unchanged. If every weight
    ends at zero the branch point is reset to uniform weights.
    """
    out = dict(weights)
    for b, r in rewards.items():
        w = out[b]
        out[b] = max(0.0, w + eta * r * (1.0 - r * w))
    if not any(v > 0 for v in out.values()):
        out = {b: 1.0 / len(out) for b in out}
    return out


# ---------------------------------------------------------------------------
# key helpers

_SUFFIX = re.compile(r"\.\d+$")


def key_stem(key: str) -> str:
    return _SUFFIX.sub("", key.split("/", 1)[1])


def fresh_key(key: str, minter) -> str:
    return minter.mint(key_stem(key))


def input_pool(pop) -> list:
    return list(SENSOR_KEYS) + pop.written_wm_keys()


# ---------------------------------------------------------------------------
# actor mutation

GENERIC_CLASSES = ("in_rewire", "in_add", "in_drop", "out_rewire", "out_add", "out_drop")


def _try_generic(atom: ActorAtom, cls: str, pop, rng) -> bool:
    spec = KINDS[atom.kind]
    ins, outs = list(atom.inputs), list(atom.outputs)
    rule = atom.activation_rule
    pool = input_pool(pop)
    if cls.startswith("in_"):
        if cls == "in_rewire":
            i = int(rng.integers(len(ins)))
            new = pool[int(rng.integers(len(pool)))]
            if new == ins[i]:
                return False
            rule = rename_rule(rule, {ins[i]: new})
            ins[i] = new
        elif cls == "in_add":
            ins.append(pool[int(rng.integers(len(pool)))])
        else:
            if len(ins) < 2:
                return False
            i = int(rng.integers(len(ins)))
            if rule_key(rule) == ins[i]:
                rule = "present"
            del ins[i]
    else:
        opts = list(MOTOR_KEYS) + ["wm/"]
        pick = opts[int(rng.integers(len(opts)))]
        if pick == "wm/":
            first = atom.outputs[0]
            new = pop.minter.mint(key_stem(first) if first.startswith(INTERNAL) else atom.kind.lower())
        else:
            new = pick
        if cls == "out_rewire":
            i = int(rng.integers(len(outs)))
            if new == outs[i]:
                return False
            outs[i] = new
        elif cls == "out_add":
            if new in outs:
                return False
            outs.append(new)
        else:
            if len(outs) < 2:
                return False
            del outs[int(rng.integers(len(outs)))]
    if not spec.valid(atom.params, len(ins), len(outs)):
        return False
    atom.inputs, atom.outputs, atom.activation_rule = ins, outs, rule
    return True


def mutate_generic(atom: ActorAtom, pop, rng) -> ActorAtom:
    """Change the identity or number of inputs or outputs.

    Classes that would break the kind's arity are redrawn; if none applies
    the atom is returned unchanged.
    """
    for cls_i in rng.permutation(len(GENERIC_CLASSES)):
        for _ in range(4):
            if _try_generic(atom, GENERIC_CLASSES[cls_i], pop, rng):
                pop.minter.register(atom.outputs)
                return atom
    return atom


def mutate_specific(atom: ActorAtom, rng, sigma: float = 0.05) -> ActorAtom:
    atom.params = [float(p) for p in KINDS[atom.kind].mutate(atom.params, rng, sigma)]
    atom.state = {}
    return atom


def replicate_atom_A(atom: ActorAtom, pop, rng, sigma: float = 0.05, mode: str | None = None,
                     observe: bool = True) -> ActorAtom:
    """Copy an atom beside its parent and mutate the copy.

    The copy reads the same inputs as the parent and writes freshly minted
    ``wm/`` keys (motor outputs are kept). Games observing a parent output
    also observe the copy's output. ``mode`` is ``generic``, ``specific`` or
    ``both``; drawn at random when omitted.
    """
    off = atom.clone(pop.new_atom_id())
    mapping = {k: fresh_key(k, pop.minter) for k in atom.outputs if k.startswith(INTERNAL)}
    off.outputs = [mapping.get(k, k) for k in atom.outputs]
    if mode is None:
        mode = ("generic", "specific", "both")[int(rng.integers(3))]
    if mode in ("generic", "both"):
        mutate_generic(off, pop, rng)
    if mode in ("specific", "both"):
        mutate_specific(off, rng, sigma)
    validate_actor(off)
    pop.add_atom(off)
    if observe:
        add_observers(pop, {k: v for k, v in mapping.items() if v in off.outputs})
    return off


def add_observers(pop, mapping: dict) -> None:
    """Extend game slots reading a parent key with the offspring key."""
    for g in pop.games.values():
        slots = []
        for slot in g.inputs:
            alts = slot.split("|")
            for k in list(alts):
                if k in mapping and mapping[k] not in alts:
                    alts.append(mapping[k])
            slots.append("|".join(alts))
        g.inputs = slots


def crossover(p1: ActorAtom, p2: ActorAtom, new_id: int, minter) -> ActorAtom:
    """Transfer function from ``p1``, inputs from ``p2`` fitted to ``p1``'s arity."""
    n = len(p1.inputs)
    ins = list(p2.inputs[:n]) + list(p1.inputs[len(p2.inputs):n])
    off = p1.clone(new_id)
    off.inputs = ins
    off.outputs = [fresh_key(k, minter) if k.startswith(INTERNAL) else k for k in p1.outputs]
    key = rule_key(off.activation_rule)
    if key is not None and key not in ins:
        off.activation_rule = "present"
    off.state = {}
    return off


def duplicate_molecule_M(atom_ids, pop, games: str = "copy"):
    """Copy a molecule to a disconnected location.

    Every ``wm/`` key written by the molecule is renamed consistently; sensor
    and motor keys are shared. ``games`` selects how observers follow:
    ``copy`` makes a remapped copy of each observing game, ``extend`` adds
    the new keys as slot alternatives, ``none`` leaves games alone.

    Returns ``(new atom ids, new game ids, key mapping)``.
    """
    atom_ids = sorted(atom_ids)
    mapping = {}
    for aid in atom_ids:
        for k in pop.atoms[aid].outputs:
            if k.startswith(INTERNAL) and k not in mapping:
                mapping[k] = fresh_key(k, pop.minter)
    new_ids = []
    for aid in atom_ids:
        a = pop.atoms[aid]
        c = a.clone(pop.new_atom_id())
        c.inputs = [mapping.get(k, k) for k in a.inputs]
        c.outputs = [mapping.get(k, k) for k in a.outputs]
        c.activation_rule = rename_rule(a.activation_rule, mapping)
        pop.add_atom(c)
        new_ids.append(c.id)
    for bid, w in list(pop.path_weights.items()):
        if bid in atom_ids:
            idmap = dict(zip(atom_ids, new_ids))
            pop.path_weights[idmap[bid]] = {idmap.get(r, r): v for r, v in w.items()}
    new_games = []
    if games == "copy":
        for gid in sorted(pop.games):
            g = pop.games[gid]
            if not mapping.keys() & set(g.keys()):
                continue
            c = g.clone(pop.new_game_id())
            c.inputs = [_remap_slot(s, mapping) for s in g.inputs]
            if c.output_key:
                c.output_key = fresh_key(c.output_key, pop.minter)
            pop.add_game(c)
            new_games.append(c.id)
    elif games == "extend":
        add_observers(pop, mapping)
    return new_ids, new_games, mapping


def _remap_slot(slot: str, mapping: dict) -> str:
    alts = slot.split("|")
    mapped = [mapping[k] for k in alts if k in mapping]
    return "|".join(mapped) if mapped else slot


# ---------------------------------------------------------------------------
# game mutation


def mutate_game(game: GameAtom, pop, rng, sigma: float = 0.05) -> GameAtom:
    """Polarity flip, weight perturbation or observed-key rewire."""
    which = int(rng.integers(3))
    if which == 0:
        flip_polarity(game)
    elif which == 1:
        n = max(len(game.params), len(game.inputs))
        game.params = [game.weight(i) + float(rng.normal(0.0, sigma)) for i in range(n)]
    else:
        pool = input_pool(pop) + list(MOTOR_KEYS)
        i = int(rng.integers(len(game.inputs)))
        game.inputs = list(game.inputs)
        game.inputs[i] = pool[int(rng.integers(len(pool)))]
    game.fitness, game.association, game.assessed = 0.0, set(), False
    return game


def prune_dead_alternatives(pop) -> None:
    """Drop slot alternatives nobody writes any more (the first is kept)."""
    live = pop.written_keys() | {g.output_key for g in pop.games.values() if g.output_key}
    for g in pop.games.values():
        slots = []
        for slot in g.inputs:
            alts = slot.split("|")
            keep = [k for k in alts if k in live or not k.startswith(INTERNAL)]
            slots.append("|".join(keep or alts[:1]))
        g.inputs = slots


# ---------------------------------------------------------------------------
# selection


def molecule_atoms(pop) -> dict:
    """Initiator id -> atoms of its last assessed molecule still in the population."""
    return {m: [a for a in mol.atom_ids if a in pop.atoms]
            for m, mol in pop.molecules.items() if m in pop.atoms}


def _beats(fa: float, a: int, fb: float, b: int) -> bool:
    return (fa, -a) > (fb, -b)


def _remove_molecule(pop, atoms, keep) -> None:
    for aid in atoms:
        if aid in pop.atoms and not pop.atoms[aid].reflex and aid not in keep:
            pop.remove_atom(aid)


def _shared(mols: dict, alive, exclude: int) -> set:
    return {a for m in alive if m != exclude for a in mols.get(m, ())}


def make_offspring(pop, atom_ids, cfg, rng) -> int:
    """Structural copy of a molecule varied by Type A events and crossover.

    Returns the new initiator id.
    """
    atom_ids = sorted(atom_ids)
    new_ids, _, _ = duplicate_molecule_M(atom_ids, pop, games="extend")
    init = next(i for i in new_ids if pop.atoms[i].is_initiator())
    for aid in list(new_ids):
        a = pop.atoms[aid]
        if rng.random() < cfg.rate_a:
            if aid != init and len(new_ids) < cfg.max_atoms_per_molecule:
                off = replicate_atom_A(a, pop, rng, cfg.specific_sigma)
                if off.is_initiator():
                    # a second initiator would be a new molecule, not a variant
                    pop.remove_atom(off.id)
                    mutate_specific(a, rng, cfg.specific_sigma)
                else:
                    new_ids.append(off.id)
            else:
                mutate_specific(a, rng, cfg.specific_sigma)
        if aid != init and rng.random() < cfg.crossover_rate:
            others = sorted(b for b in pop.atoms if b != aid)
            p2 = pop.atoms[others[int(rng.integers(len(others)))]]
            x = crossover(a, p2, aid, pop.minter)
            if not x.is_initiator():
                a.inputs, a.activation_rule = x.inputs, x.activation_rule
    return init


def select_and_replace(pop, fitness: dict, cfg, rng, penalty=None) -> dict:
    """Binary tournaments between molecules, then Type M duplications.

    ``fitness`` maps initiator id to actor fitness; ``penalty(id, f)``, when
    given, returns the LTM-penalized value used for comparisons. A losing
    molecule loses its non-reflex atoms; if that removes its initiator the
    winner is copied (with variation) into the freed slot, so the number of
    molecules is conserved.
    """
    mols = molecule_atoms(pop)
    ids = sorted(m for m in mols if m in fitness)
    f = {m: fitness[m] for m in ids}
    if penalty is not None:
        f = {m: penalty(m, v) for m, v in f.items()}
    report = {"tournaments": [], "offspring": [], "duplications": []}
    if len(ids) < 2:
        return report
    gone = set()
    for _ in range(len(ids) // 2):
        alive = [m for m in ids if m not in gone]
        if len(alive) < 2:
            break
        i, j = rng.choice(len(alive), size=2, replace=False)
        a, b = alive[int(i)], alive[int(j)]
        win, lose = (a, b) if _beats(f[a], a, f[b], b) else (b, a)
        report["tournaments"].append((win, lose))
        _remove_molecule(pop, mols[lose], _shared(mols, alive, lose))
        if lose not in pop.atoms:
            gone.add(lose)
            parent = [x for x in mols[win] if x in pop.atoms]
            report["offspring"].append(make_offspring(pop, parent, cfg, rng))
    for m in ids:
        if m in gone or rng.random() >= cfg.rate_m:
            continue
        alive = [x for x in ids if x not in gone]
        victims = [x for x in alive if x != m and not pop.atoms[x].reflex]
        if not victims:
            continue
        worst = min(victims, key=lambda x: (f[x], -x))
        parent = [x for x in mols[m] if x in pop.atoms]
        new_ids, new_games, _ = duplicate_molecule_M(parent, pop, games="copy")
        _remove_molecule(pop, mols[worst], _shared(mols, alive, worst))
        gone.add(worst)
        report["duplications"].append((m, new_ids, new_games))
    return report


def evolve_games(pop, cfg, rng, target_size: int) -> dict:
    """Tournaments over assessed games, then trim to ``target_size``.

    A losing innate game is kept and gets no replacement. Trimming culls the
    worst assessed non-innate games first, then the newest unassessed ones.
    """
    ids = sorted(g for g, ga in pop.games.items() if ga.assessed)
    report = {"tournaments": [], "offspring": [], "culled": []}
    for _ in range(len(ids) // 2):
        alive = [g for g in ids if g in pop.games]
        if len(alive) < 2:
            break
        i, j = rng.choice(len(alive), size=2, replace=False)
        a, b = pop.games[alive[int(i)]], pop.games[alive[int(j)]]
        win, lose = (a, b) if _beats(a.fitness, a.id, b.fitness, b.id) else (b, a)
        report["tournaments"].append((win.id, lose.id))
        if lose.innate:
            continue
        del pop.games[lose.id]
        child = win.clone(pop.new_game_id())
        if rng.random() < cfg.game_rate_a:
            mutate_game(child, pop, rng, cfg.specific_sigma)
        pop.add_game(child)
        report["offspring"].append(child.id)
    while len(pop.games) > target_size:
        cand = [g for g in pop.games.values() if not g.innate]
        if not cand:
            break
        assessed = [g for g in cand if g.assessed]
        if assessed:
            victim = min(assessed, key=lambda g: (g.fitness, -g.id))
        else:
            victim = max(cand, key=lambda g: g.id)
        del pop.games[victim.id]
        report["culled"].append(victim.id)
    prune_dead_alternatives(pop)
    return report
