"""Baseline vs fixed-initialisation vs no-sparsify on the complex scenario.

    python3 scripts/reproduce_table2.py --reps 10 --out runs/table2
"""

import argparse
from pathlib import Path

from hasplan.cli import RunSpec, cmd_run, compare_dirs, read_kv

CONDITIONS = {
    "baseline": {},
    "cond1_fixed_init": {"heuristic": False},
    "cond2_no_sparsify": {"sparsify": False},
}
ROWS = ("success_rate", "pl_mean", "mean_iterations", "frac_iter_le3", "mean_pcl5", "penetrations")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--scenario", default="complex")
    ap.add_argument("--reps", type=int, default=10)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out", type=Path, default=Path("runs/table2"))
    args = ap.parse_args()

    for name, flags in CONDITIONS.items():
        cmd_run(RunSpec(args.scenario, seed=args.seed, reps=args.reps, out=args.out / name, jobs=args.jobs, **flags))

    agg = {name: read_kv(args.out / name / "aggregate.txt") for name in CONDITIONS}
    timing = {name: read_kv(args.out / name / "aggregate_timing.txt") for name in CONDITIONS}
    print()
    print(f"{'metric':<18}" + "".join(f"{n:>20}" for n in CONDITIONS))
    for key in ROWS:
        print(f"{key:<18}" + "".join(f"{float(agg[n][key]):>20.4f}" for n in CONDITIONS))
    for key in ("total_ms_mean", "search_ms_mean", "solve_ms_mean"):
        print(f"{key:<18}" + "".join(f"{float(timing[n].get(key, 'nan')):>20.3f}" for n in CONDITIONS))
    # sanity check that the directories are comparable
    compare_dirs(args.out / "baseline", args.out / "cond1_fixed_init")


if __name__ == "__main__":
    main()
