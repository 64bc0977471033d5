"""Molecules: graphs of atoms linked through working-memory registers."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

from .workmem import INTERNAL, role_of


class EmptyTrial(Exception):
    def __init__(self, molecule: "Molecule"):
        super().__init__(f"initiator {molecule.initiator} never activated")
        self.molecule = molecule


@dataclass(frozen=True)
class Molecule:
    id: int
    atom_ids: tuple
    edges: frozenset   # (writer id, key, reader id)
    initiator: int

    def __len__(self):
        return len(self.atom_ids)

    def internal_keys(self) -> set:
        return {k for _, k, _ in self.edges if role_of(k) == "internal"}


@dataclass(frozen=True)
class MoleculeSignature:
    edge_labels: tuple   # sorted (writer kind, key role, reader kind), with repeats
    kind_counts: tuple   # sorted (kind, count)

    @property
    def key(self) -> tuple:
        return (self.edge_labels, self.kind_counts)


def extract_molecule(record, strict: bool = True) -> Molecule:
    """Molecule realised by one trial: the atoms that activated, and the
    (writer, key, reader) events observed during the trial."""
    init = record.initiator
    if init not in record.activated:
        mol = Molecule(init, (init,), frozenset(), init)
        if strict:
            raise EmptyTrial(mol)
        return mol
    return Molecule(init, tuple(sorted(record.activated)), frozenset(record.edges), init)


def merge_molecules(mols) -> Molecule:
    mols = list(mols)
    ids = set()
    edges = set()
    for m in mols:
        ids.update(m.atom_ids)
        edges.update(m.edges)
    return Molecule(mols[0].id, tuple(sorted(ids)), frozenset(edges), mols[0].initiator)


def static_molecule(initiator: int, atoms: dict) -> Molecule:
    """Molecule reachable from ``initiator`` through ``wm/`` register linkage.

    Mirrors trial triggering, where only internal writes recruit atoms; edges
    among the reached atoms include motor links. Used where no trial has been
    run (snapshots, LTM dumps).
    """
    reached = {initiator}
    frontier = [initiator]
    while frontier:
        w = atoms[frontier.pop()]
        written = {k for k in w.outputs if k.startswith(INTERNAL)}
        for a in atoms.values():
            if a.id not in reached and written.intersection(a.inputs):
                reached.add(a.id)
                frontier.append(a.id)
    edges = set()
    for w in reached:
        for r in reached:
            if w == r:
                continue
            for k in set(atoms[w].outputs).intersection(atoms[r].inputs):
                edges.add((w, k, r))
    return Molecule(initiator, tuple(sorted(reached)), frozenset(edges), initiator)


def signature(mol: Molecule, kinds: dict) -> MoleculeSignature:
    """``kinds`` maps atom id to kind name."""
    labels = sorted((kinds[w], role_of(k), kinds[r]) for w, k, r in mol.edges)
    counts = Counter(kinds[a] for a in mol.atom_ids)
    return MoleculeSignature(tuple(labels), tuple(sorted(counts.items())))


def _jaccard(a: Counter, b: Counter) -> float:
    union = sum((a | b).values())
    if union == 0:
        return 1.0
    return sum((a & b).values()) / union


def similarity(a: MoleculeSignature, b: MoleculeSignature) -> float:
    """Multiset Jaccard index of edge labels; kind counts when both are edge-free."""
    if not a.edge_labels and not b.edge_labels:
        return _jaccard(Counter(dict(a.kind_counts)), Counter(dict(b.kind_counts)))
    return _jaccard(Counter(a.edge_labels), Counter(b.edge_labels))
