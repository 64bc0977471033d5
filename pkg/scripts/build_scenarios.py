"""Regenerate the shipped scenario libraries under src/darwinbrain/data."""

import argparse
from pathlib import Path

from darwinbrain.scenarios import build_all


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default=str(Path(__file__).resolve().parents[1] / "src/darwinbrain/data"))
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name, text in build_all(args.seed).items():
        (out / f"{name}.jsonl").write_text(text)
        print(f"wrote {out / name}.jsonl ({len(text.splitlines())} records)")


if __name__ == "__main__":
    main()
