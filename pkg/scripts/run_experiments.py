"""Run registered experiments and write each into ``<out>/<name>/``.

Usage::

    python3 scripts/run_experiments.py                 # every experiment
    python3 scripts/run_experiments.py geomag poisson2d --out results --seed 3
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from anchorex.experiments import EXPERIMENTS, run_experiment, write_run


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description="Run anchorex experiments.")
    ap.add_argument("names", nargs="*", help=f"any of {', '.join(sorted(EXPERIMENTS))} (default: all)")
    ap.add_argument("--out", type=Path, default=Path("results"))
    ap.add_argument("--seed", type=int, default=None)
    args = ap.parse_args(argv)
    unknown = sorted(set(args.names) - set(EXPERIMENTS))
    if unknown:
        ap.error(f"unknown experiment(s): {', '.join(unknown)}")
    names = args.names or sorted(EXPERIMENTS)
    cfg = {} if args.seed is None else {"seed": args.seed}
    for name in names:
        # bound_sweep has no seed; everything else accepts one
        rep = run_experiment(name, {} if name == "bound_sweep" else cfg)
        write_run(rep, args.out / name)
        print(f"{name:18s} {rep.runtime_s:7.2f} s  -> {args.out / name}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
