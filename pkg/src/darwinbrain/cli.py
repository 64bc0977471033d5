"""Command line entry point: ``run``, ``fisher-check`` and ``inspect``."""

from __future__ import annotations

import argparse
import os
import sys
import time

from .atoms import LibraryParseError, read_library
from .config import Config, ConfigError, load_config
from .fisher import fisher_check
from .loop import run
from .ltm import read_store
from .molecules import Molecule, signature, similarity, static_molecule
from .scenarios import SCENARIOS, UnknownScenario, ValidationFailure

DEVIATION_THRESHOLD = 0.25


def _positive(text: str) -> int:
    v = int(text)
    if v < 2:
        raise argparse.ArgumentTypeError("must be at least 2")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="darwinbrain", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="evolve a scenario population")
    r.add_argument("--scenario", default="minimal", help=f"one of {', '.join(SCENARIOS)}")
    r.add_argument("--config", help="key = value config file")
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--generations", type=int, default=10)
    r.add_argument("--out", default="run_out")
    r.add_argument("--snapshot-every", type=int, default=0, metavar="N")
    r.add_argument("--trace-trials", action="store_true", help="write per-trial memory traces")
    r.add_argument("--jobs", type=int, default=1, help="worker processes for assessment")
    r.add_argument("--ltm", help="long-term store from an earlier run to start from")

    f = sub.add_parser("fisher-check", help="selection-gain check on a synthetic population")
    f.add_argument("--pop-size", type=_positive, default=64)
    f.add_argument("--loci", type=int, default=8)
    f.add_argument("--replicates", type=int, default=200)
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--epistatic", action="store_true", help="product instead of sum fitness")
    f.add_argument("--uniform", action="store_true", help="all genomes identical")

    i = sub.add_parser("inspect", help="list the molecules in a snapshot")
    i.add_argument("snapshot")
    i.add_argument("--ltm", help="long-term store to score similarity against "
                                 "(default: ltm.jsonl next to the snapshot directory)")
    return p


def cmd_run(args) -> int:
    cfg = load_config(args.config) if args.config else Config()
    t0 = time.perf_counter()
    res = run(cfg, args.scenario, seed=args.seed, generations=args.generations, out=args.out,
              snapshot_every=args.snapshot_every, trace=args.trace_trials, jobs=args.jobs,
              store=read_store(args.ltm) if args.ltm else None)
    last = res.stats[-1]
    print(f"{args.scenario}: {len(res.stats)} generations in {time.perf_counter() - t0:.1f}s, "
          f"{last.molecules} molecules, {last.games} games, {last.ltm_size} stored, "
          f"diversity {last.diversity:.3f}")
    print(f"wrote {os.path.join(args.out, 'metrics.csv')}")
    return 0


def cmd_fisher(args) -> int:
    rep = fisher_check(args.pop_size, args.loci, args.replicates, args.seed,
                       epistatic=args.epistatic, uniform_genomes=args.uniform)
    print("fitness:", "product of loci" if args.epistatic else "sum of loci")
    for line in rep.lines():
        print(line)
    deviates = rep.aggregate_error > DEVIATION_THRESHOLD
    print("systematic deviation from Var(f)/mean(f):", "YES" if deviates else "no")
    return 0


def _topology(mol: Molecule) -> str:
    """``chain`` if the wm/ edges form one simple path through every atom."""
    if len(mol.atom_ids) == 1:
        return "single atom"
    links = {(w, r) for w, k, r in mol.edges if k.startswith("wm/")}
    outs, ins = {}, {}
    for w, r in links:
        outs.setdefault(w, set()).add(r)
        ins.setdefault(r, set()).add(w)
    if any(len(v) > 1 for v in outs.values()):
        return "branched"
    if any(len(v) > 1 for v in ins.values()):
        return "converging"
    heads = [a for a in mol.atom_ids if a not in ins]
    if len(heads) == 1 and len(links) == len(mol.atom_ids) - 1:
        return "chain"
    return "graph"


def _snapshot_molecules(lib, atoms):
    listed = [ex for ex in lib.extras if ex.get("type") == "molecule"]
    if listed:
        out = []
        for ex in listed:
            ids = tuple(a for a in ex["atom_ids"] if a in atoms)
            edges = frozenset((w, k, r) for w in ids for r in ids if w != r
                              for k in set(atoms[w].outputs) & set(atoms[r].inputs))
            out.append((Molecule(ex["initiator"], ids, edges, ex["initiator"]), ex.get("fitness")))
        return out
    inits = sorted(a.id for a in atoms.values() if a.is_initiator())
    return [(static_molecule(i, atoms), None) for i in inits]


def cmd_inspect(args) -> int:
    try:
        lib = read_library(args.snapshot)
    except LibraryParseError as exc:
        print(f"error: {args.snapshot}: {exc}", file=sys.stderr)
        return 2
    atoms = {a.id: a for a in lib.actors}
    ltm_path = args.ltm or os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(args.snapshot))),
                                        "ltm.jsonl")
    store = read_store(ltm_path) if os.path.exists(ltm_path) else None
    mols = _snapshot_molecules(lib, atoms)
    head = f"{len(mols)} molecules"
    if "generation" in lib.meta:
        head += f" (generation {lib.meta['generation']})"
    print(head)
    kinds = {a.id: a.kind for a in atoms.values()}
    for mol, fit in mols:
        sig = signature(mol, kinds)
        print(f"molecule {mol.initiator}: {len(mol.atom_ids)} atoms, {_topology(mol)} topology"
              + (f", fitness {fit:.6g}" if fit is not None else ""))
        for aid in mol.atom_ids:
            a = atoms[aid]
            print(f"  atom {aid} {a.kind}: {', '.join(a.inputs) or '-'} -> {', '.join(a.outputs)}")
        for w, k, r in sorted(mol.edges):
            print(f"  edge {w} -[{k}]-> {r}")
        print(f"  signature kinds {dict(sig.kind_counts)}")
        if store is not None and store.entries:
            sims = [similarity(sig, e.signature) for e in store.entries]
            print("  ltm similarity " + " ".join(f"{s:.3f}" for s in sims))
    print(f"{len(lib.games)} games")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {"run": cmd_run, "fisher-check": cmd_fisher, "inspect": cmd_inspect}
    try:
        return handlers[args.command](args)
    except (LibraryParseError, ConfigError, UnknownScenario, ValidationFailure, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
