"""Histogram of search iterations per planning step, heuristic on and off.

    python3 scripts/iteration_histogram.py --scenario complex --reps 3
"""

import argparse
from collections import Counter
from dataclasses import replace

from hasplan.planner import PlannerConfig
from hasplan.sim import load_scenario, run_flight


def histogram(scene, cfg, seeds) -> Counter:
    hist = Counter()
    for seed in seeds:
        hist.update(s.iterations for s in run_flight(scene, cfg, seed=seed).steps if s.iterations > 0)
    return hist


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--scenario", default="complex")
    ap.add_argument("--reps", type=int, default=3)
    ap.add_argument("--width", type=int, default=50, help="bar width in characters")
    args = ap.parse_args()

    scene = load_scenario(args.scenario)
    cfg = PlannerConfig()
    for label, c in (("heuristic", cfg), ("fixed init", replace(cfg, heuristic=False))):
        hist = histogram(scene, c, range(args.reps))
        total = sum(hist.values())
        print(f"{label}: {total} searched steps")
        for k in range(1, max(hist) + 1):
            share = hist[k] / total
            print(f"  {k:>2} {hist[k]:>6} {share:6.1%} {'#' * round(share * args.width)}")


if __name__ == "__main__":
    main()
