"""Long-term memory of fixated molecules and the similarity penalty it imposes."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import combinations
from types import SimpleNamespace

import numpy as np

from .atoms import Library, actor_from_record, actor_record, dumps, parse_library, rename_rule
from .evolution import fresh_key, make_offspring, molecule_atoms
from .molecules import Molecule, MoleculeSignature, signature, similarity
from .workmem import INTERNAL


class DuplicateEntry(ValueError):
    pass


@dataclass(frozen=True)
class LTMEntry:
    molecule: Molecule
    signature: MoleculeSignature
    records: tuple          # serialized atoms, never modified after storage
    origin_generation: int


@dataclass
class LongTermStore:
    lam: float = 0.0
    entries: list = field(default_factory=list)

    def __len__(self):
        return len(self.entries)

    def max_similarity(self, sig: MoleculeSignature) -> float:
        return max((similarity(sig, e.signature) for e in self.entries), default=0.0)

    def executable_atoms(self) -> dict:
        """Fresh working copies of every stored atom, keyed by id."""
        out = {}
        for e in self.entries:
            for line in e.records:
                a = actor_from_record(json.loads(line))
                out[a.id] = a
        return out

    def add(self, mol: Molecule, atoms: dict, generation: int) -> LTMEntry:
        kinds = {i: atoms[i].kind for i in mol.atom_ids}
        sig = signature(mol, kinds)
        if any(similarity(sig, e.signature) >= 1.0 for e in self.entries):
            raise DuplicateEntry("an identical molecule is already stored")
        recs = tuple(dumps(actor_record(atoms[i])) for i in mol.atom_ids)
        entry = LTMEntry(mol, sig, recs, int(generation))
        self.entries.append(entry)
        return entry

    def rebase(self, pop) -> "LongTermStore":
        """Copy of the store with atom ids and internal keys drawn from
        ``pop``'s counters, so a store saved by one run can join another."""
        out = LongTermStore(self.lam)
        for e in self.entries:
            atoms = {a.id: a for a in (actor_from_record(json.loads(r)) for r in e.records)}
            view = SimpleNamespace(atoms=atoms, minter=pop.minter, new_atom_id=pop.new_atom_id)
            mol, fresh = _frozen_copy(e.molecule, view)
            out.entries.append(LTMEntry(mol, e.signature,
                                        tuple(dumps(actor_record(fresh[i])) for i in mol.atom_ids),
                                        e.origin_generation))
        return out

    def to_library(self) -> Library:
        lib = Library(meta={"lambda": self.lam, "entries": len(self.entries)})
        for e in self.entries:
            lib.extras.append({"type": "ltm_entry", "origin_generation": e.origin_generation,
                               "initiator": e.molecule.initiator,
                               "atom_ids": list(e.molecule.atom_ids)})
            lib.actors.extend(actor_from_record(json.loads(r)) for r in e.records)
        return lib

    @classmethod
    def from_library(cls, lib: Library) -> "LongTermStore":
        store = cls(lam=float(lib.meta.get("lambda", 0.0)))
        atoms = {a.id: a for a in lib.actors}
        for ex in lib.extras:
            if ex.get("type") != "ltm_entry":
                continue
            ids = tuple(ex["atom_ids"])
            edges = frozenset((w, k, r) for w in ids for r in ids if w != r
                              for k in set(atoms[w].outputs) & set(atoms[r].inputs))
            mol = Molecule(ex["initiator"], ids, edges, ex["initiator"])
            store.entries.append(LTMEntry(
                mol, signature(mol, {i: atoms[i].kind for i in ids}),
                tuple(dumps(actor_record(atoms[i])) for i in ids), int(ex["origin_generation"])))
        return store


def similarity_penalty(store: LongTermStore, f: float, sig: MoleculeSignature) -> float:
    """``f - lambda * max similarity`` to the stored molecules."""
    if not store.entries:
        return f
    return f - store.lam * store.max_similarity(sig)


def auto_lambda(fitness_values, scale: float = 0.5) -> float:
    """Penalty coefficient scaled to the spread of an initial fitness sample."""
    v = np.asarray(list(fitness_values), dtype=float)
    sd = float(np.std(v)) if len(v) > 1 else 0.0
    return scale * (sd if sd > 0 else 1.0)


def signature_frequencies(pop) -> dict:
    kinds = pop.kinds()
    mols = [m for i, m in pop.molecules.items() if i in pop.atoms]
    if not mols:
        return {}
    counts = {}
    for m in mols:
        present = Molecule(m.id, tuple(a for a in m.atom_ids if a in kinds),
                           frozenset(e for e in m.edges if e[0] in kinds and e[2] in kinds),
                           m.initiator)
        key = signature(present, kinds).key
        counts[key] = counts.get(key, 0) + 1
    return {k: c / len(mols) for k, c in counts.items()}


def detect_fixation(history, theta_fix: float = 0.9, g_fix: int = 10) -> list:
    """Signature keys at frequency >= ``theta_fix`` in each of the last
    ``g_fix`` generations. ``history`` is a list of {signature key: frequency}."""
    if len(history) < g_fix:
        return []
    recent = history[-g_fix:]
    return sorted(k for k in recent[-1]
                  if all(h.get(k, 0.0) >= theta_fix for h in recent))


def diversity(signatures) -> float:
    """Mean pairwise dissimilarity ``1 - similarity``."""
    sigs = list(signatures)
    if len(sigs) < 2:
        return 0.0
    return float(np.mean([1.0 - similarity(a, b) for a, b in combinations(sigs, 2)]))


def population_signatures(pop) -> list:
    kinds = pop.kinds()
    out = []
    for mid in sorted(pop.molecules):
        if mid not in pop.atoms:
            continue
        m = pop.molecules[mid]
        m = Molecule(m.id, tuple(a for a in m.atom_ids if a in kinds),
                     frozenset(e for e in m.edges if e[0] in kinds and e[2] in kinds), m.initiator)
        out.append(signature(m, kinds))
    return out


def _frozen_copy(mol: Molecule, pop) -> tuple:
    """Copy of the molecule's atoms under fresh ids and internal keys."""
    ids = [a for a in mol.atom_ids if a in pop.atoms]
    keymap, idmap, atoms = {}, {}, {}
    for aid in ids:
        for k in pop.atoms[aid].outputs:
            if k.startswith(INTERNAL) and k not in keymap:
                keymap[k] = fresh_key(k, pop.minter)
    for aid in ids:
        idmap[aid] = pop.new_atom_id()
    for aid in ids:
        src = pop.atoms[aid]
        c = src.clone(idmap[aid])
        c.inputs = [keymap.get(k, k) for k in src.inputs]
        c.outputs = [keymap.get(k, k) for k in src.outputs]
        c.activation_rule = rename_rule(src.activation_rule, keymap)
        c.state = {}
        atoms[c.id] = c
    edges = frozenset((idmap[w], keymap.get(k, k), idmap[r]) for w, k, r in mol.edges
                      if w in idmap and r in idmap)
    new = Molecule(idmap[mol.initiator], tuple(sorted(idmap.values())), edges,
                   idmap[mol.initiator])
    return new, atoms


def transfer_to_ltm(store: LongTermStore, pop, sig_key, generation: int, cfg, rng):
    """Freeze one molecule with signature ``sig_key`` into the store, free
    the population slots held by that signature and refill them with
    varied copies of surviving molecules. Returns the new entry."""
    kinds = pop.kinds()
    mols = molecule_atoms(pop)
    matching = []
    for mid in sorted(mols):
        m = pop.molecules[mid]
        present = Molecule(m.id, tuple(mols[mid]),
                           frozenset(e for e in m.edges if e[0] in kinds and e[2] in kinds),
                           m.initiator)
        if signature(present, kinds).key == sig_key:
            matching.append(present)
    if not matching:
        raise KeyError("no molecule with this signature in the population")
    frozen, atoms = _frozen_copy(matching[0], pop)
    entry = store.add(frozen, atoms, generation)
    size = len(mols)
    keep = {a for mid, ids in mols.items() if mid not in {m.id for m in matching} for a in ids}
    for m in matching:
        for aid in m.atom_ids:
            if aid in pop.atoms and not pop.atoms[aid].reflex and aid not in keep:
                pop.remove_atom(aid)
    survivors = [mid for mid in sorted(mols) if mid in pop.atoms]
    if not survivors:
        return entry
    alive = len(survivors)
    while alive < size:
        parent = survivors[int(rng.integers(len(survivors)))]
        make_offspring(pop, [a for a in mols[parent] if a in pop.atoms], cfg, rng)
        alive += 1
    return entry


def read_store(path) -> LongTermStore:
    with open(path) as fh:
        return LongTermStore.from_library(parse_library(fh.read()))
