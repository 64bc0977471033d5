import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from darwinbrain.atoms import KINDS, reset_generation
from darwinbrain.config import Config
from darwinbrain.engine import run_trial
from darwinbrain.env import reset
from darwinbrain.evolution import duplicate_molecule_M
from darwinbrain.molecules import (
    EmptyTrial, Molecule, MoleculeSignature, extract_molecule, signature, similarity,
    static_molecule,
)
from darwinbrain.scenarios import load_scenario

from builders import chain_pop, const


def resistance_trial(steps=20, seed=0):
    cfg = Config()
    pop, tmpl, _ = load_scenario("resistance", cfg)
    for a in pop.atoms.values():
        reset_generation(a)
    rec = run_trial(0, pop.atoms, pop.games, reset(tmpl, [seed]), steps, cfg.dt,
                    np.random.default_rng(seed))
    return pop, rec


def test_resistance_trial_molecule():
    pop, rec = resistance_trial()
    mol = extract_molecule(rec)
    assert mol.atom_ids == (0, 1, 2, 3)
    links = {(w, r) for w, _, r in mol.edges}
    assert links == {(0, 1), (1, 2), (2, 3), (3, 0)}
    assert (3, "motor/elbow_vel", 0) in mol.edges
    kinds = {a: pop.atoms[a].kind for a in mol.atom_ids}
    for w, k, r in mol.edges:
        assert k in pop.atoms[w].outputs and k in pop.atoms[r].inputs
    assert dict(signature(mol, kinds).kind_counts) == {
        "ForwardModel": 1, "SquaredError": 1, "StochasticHillClimber": 1, "MotorWriter": 1}


def test_silent_atom_excluded():
    pop = chain_pop((0.1,))
    pop.add_atom(const(9, 0.0, "wm/never", src="wm/c0", rule="gt:wm/c0:5"))
    for a in pop.atoms.values():
        reset_generation(a)
    rec = run_trial(0, pop.atoms, pop.games, reset(load_scenario("minimal")[1], 0), 10, 0.1,
                    np.random.default_rng(0))
    assert 9 not in extract_molecule(rec).atom_ids
    assert static_molecule(0, pop.atoms).atom_ids == (0, 1, 9)


def test_empty_trial():
    pop = chain_pop((0.1,))
    pop.atoms[0].activation_rule = "gt:sensor/elbow_angle:100"
    rec = run_trial(0, pop.atoms, pop.games, reset(load_scenario("minimal")[1], 0), 5, 0.1,
                    np.random.default_rng(0))
    with pytest.raises(EmptyTrial) as err:
        extract_molecule(rec)
    assert err.value.molecule.atom_ids == (0,) and not err.value.molecule.edges
    assert extract_molecule(rec, strict=False).edges == frozenset()


def test_disconnected_copy_is_separate_molecule():
    pop = chain_pop((0.1,))
    new_ids, _, _ = duplicate_molecule_M([0, 1], pop, games="none")
    tmpl = load_scenario("minimal")[1]
    mols = []
    for init in (0, new_ids[0]):
        for a in pop.atoms.values():
            reset_generation(a)
        rec = run_trial(init, pop.atoms, pop.games, reset(tmpl, 0), 5, 0.1, np.random.default_rng(0))
        mols.append(extract_molecule(rec))
    assert set(mols[0].atom_ids).isdisjoint(mols[1].atom_ids)
    kinds = {a.id: a.kind for a in pop.atoms.values()}
    assert similarity(signature(mols[0], kinds), signature(mols[1], kinds)) == 1.0


def test_extract_is_deterministic():
    assert extract_molecule(resistance_trial()[1]) == extract_molecule(resistance_trial()[1])


def sig(*labels, kinds=(("A", 1),)):
    return MoleculeSignature(tuple(sorted(labels)), tuple(kinds))


def test_similarity_examples():
    e1, e2, e3 = ("A", "internal", "B"), ("B", "motor", "C"), ("C", "sensor", "A")
    assert similarity(sig(e1, e2), sig(e1, e2)) == 1.0
    assert similarity(sig(e1, e2), sig(e2, e3)) == pytest.approx(1 / 3)
    assert similarity(sig(e1), sig(e2)) == 0.0
    assert similarity(sig(e1, e1), sig(e1)) == pytest.approx(0.5)


@pytest.mark.parametrize("ka,kb", list(itertools.product(sorted(KINDS), repeat=2)))
def test_singleton_fallback(ka, kb):
    a = signature(Molecule(0, (0,), frozenset(), 0), {0: ka})
    b = signature(Molecule(1, (1,), frozenset(), 1), {1: kb})
    assert similarity(a, b) == (1.0 if ka == kb else 0.0)


kinds_st = st.sampled_from(sorted(KINDS))
labels_st = st.lists(st.tuples(kinds_st, st.sampled_from(["sensor", "motor", "internal"]), kinds_st),
                     max_size=6)
counts_st = st.dictionaries(kinds_st, st.integers(1, 3), min_size=1, max_size=3)


def mk(labels, counts):
    return MoleculeSignature(tuple(sorted(labels)), tuple(sorted(counts.items())))


@given(labels_st, counts_st, labels_st, counts_st)
def test_similarity_is_symmetric_bounded_reflexive(la, ca, lb, cb):
    a, b = mk(la, ca), mk(lb, cb)
    s = similarity(a, b)
    assert 0.0 <= s <= 1.0
    assert s == similarity(b, a)
    assert similarity(a, a) == 1.0


@given(st.permutations(range(4)), st.integers(0, 50))
def test_signature_invariant_under_renaming(perm, offset):
    pop, rec = resistance_trial(10)
    mol = extract_molecule(rec)
    kinds = {a: pop.atoms[a].kind for a in mol.atom_ids}
    ids = {a: 100 + p for a, p in zip(mol.atom_ids, perm)}
    keys = {k: f"wm/r{offset}_{i}" for i, k in enumerate(sorted(mol.internal_keys()))}
    renamed = Molecule(7, tuple(ids.values()),
                       frozenset((ids[w], keys.get(k, k), ids[r]) for w, k, r in mol.edges), ids[0])
    rkinds = {ids[a]: kinds[a] for a in kinds}
    assert signature(renamed, rkinds) == signature(mol, kinds)
