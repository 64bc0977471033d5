"""Paired runs with and without the long-term-store similarity penalty.

    python3 scripts/ltm_diversity.py --pairs 10
    python3 scripts/ltm_diversity.py --pairs 10 --fixed-lambda 0.5
"""

import argparse

from darwinbrain.experiments import ltm_diversity_pair


def main():
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--pairs", type=int, default=10)
    p.add_argument("--scale", type=float, default=0.5)
    p.add_argument("--post", type=int, default=50)
    p.add_argument("--fixed-lambda", type=float)
    args = p.parse_args()
    wins = 0
    for seed in range(args.pairs):
        r = ltm_diversity_pair(seed, args.scale, args.post, fixed_lambda=args.fixed_lambda)
        pen, ctl = r["penalty"], r["control"]
        won = pen["diversity"] is not None and ctl["diversity"] is not None \
            and pen["diversity"] > ctl["diversity"]
        wins += won
        print(f"seed {seed}: fixation at {pen['first_fixation']}, lambda {pen['lambda']:.4g}, "
              f"diversity {pen['diversity']} vs {ctl['diversity']}, "
              f"stored intact {pen['stored_intact'] and ctl['stored_intact']}")
    print(f"penalty more diverse in {wins}/{args.pairs} pairs")


if __name__ == "__main__":
    main()
