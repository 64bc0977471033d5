"""Run the seeded scenario experiments and print their summary statistics.

    python3 scripts/run_experiments.py                 # all of them
    python3 scripts/run_experiments.py boundary paths  # a subset
"""

import argparse
import time

import numpy as np

from darwinbrain.experiments import (
    boundary_fraction, game_selection, mutant_scores, path_competition, reach_steps, remap_fuzz,
)


def boundary(seeds):
    on = [boundary_fraction(s, True) for s in range(seeds)]
    off = [boundary_fraction(s, False) for s in range(seeds)]
    print(f"boundary fraction: obstruction {np.mean(on):.3f}, none {np.mean(off):.3f}")


def reaching(seeds):
    for branch in ("hill_climb", "inverse"):
        steps = [reach_steps(branch, s) for s in range(seeds)]
        hits = [x for x in steps if x is not None]
        print(f"reaching via {branch}: {len(hits)}/{seeds} within 500 steps, "
              f"median {np.median(hits) if hits else float('nan'):.0f} steps among hits")


def paths(seeds):
    for untrained, branch in ((False, "inverse"), (True, "hill_climb")):
        p = [path_competition(s, untrained=untrained)[branch] for s in range(seeds)]
        label = "untrained" if untrained else "pre-trained"
        print(f"path competition ({label} inverse model): P({branch}) > 0.9 in "
              f"{sum(x > 0.9 for x in p)}/{seeds}, median {np.median(p):.3f}")


def mutants(seeds):
    for flip in (False, True):
        runs = [mutant_scores(s, polarity_flip=flip) for s in range(seeds)]
        med = {n: float(np.median([r[n] for r in runs])) for n in range(5)}
        label = "flipped game" if flip else "innate game"
        print(f"mutant medians on the {label}: " + ", ".join(f"{n}: {v:.5f}" for n, v in med.items()))


def games(seeds):
    first = []
    for s in range(seeds):
        _, f = game_selection(s, stop_at=0.9)
        first.append(len(f) if f[-1] >= 0.9 else None)
    ok = [g for g in first if g is not None]
    print(f"varying game at 90%: {len(ok)}/{seeds} runs, generations {ok}")


def fuzz(seeds):
    print("remap fuzz:", remap_fuzz(0, ops=10_000, iso_checks=100))


EXPERIMENTS = {"boundary": (boundary, 20), "reaching": (reaching, 50), "paths": (paths, 20),
               "mutants": (mutants, 20), "games": (games, 20), "fuzz": (fuzz, 1)}


def main():
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("names", nargs="*", help=f"any of {', '.join(EXPERIMENTS)}")
    p.add_argument("--seeds", type=int, help="override the number of seeds")
    args = p.parse_args()
    unknown = [n for n in args.names if n not in EXPERIMENTS]
    if unknown:
        p.error(f"unknown experiment {', '.join(unknown)}")
    for name in args.names or EXPERIMENTS:
        fn, n = EXPERIMENTS[name]
        t0 = time.perf_counter()
        fn(args.seeds or n)
        print(f"  ({time.perf_counter() - t0:.1f}s)")


if __name__ == "__main__":
    main()
