"""Command line: seeded flight batches with file exports, and ablation comparison.

Output layout of ``hasplan run --out DIR``::

    DIR/config.txt              resolved planner config (key=value)
    DIR/scenario.scn            the scenario as flown
    DIR/run_000/trajectory.txt  sampled positions, one "x y z" line each
    DIR/run_000/metrics.txt     key=value, deterministic
    DIR/run_000/steps.txt       per-step diagnostics, deterministic
    DIR/run_000/timing.txt      wall-clock phase timings
    DIR/run_000/clouds/         last-step cloud snapshots (--dump-clouds)
    DIR/aggregate.txt           batch summary, deterministic
    DIR/aggregate_timing.txt    batch wall-clock summary

Exit codes: 0 success, 1 internal error, 2 bad input, 3 safety rejection.
"""

from __future__ import annotations

import argparse
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .cloudpipe import write_cloud
from .planner.config import ConfigError, PlannerConfig, SafetyRejected, load_config
from .sim.flight import RunRecord, run_flight
from .sim.metrics import compute_metrics
from .sim.world import Scenario, ScenarioError, load_scenario

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_BAD_INPUT = 2
EXIT_SAFETY = 3

COMPARE_KEYS = ("success_rate", "pl_mean", "pl_std", "mean_iterations", "frac_iter_le3",
                "mean_pcl3", "mean_pcl4", "mean_pcl5", "penetrations")


@dataclass
class RunSpec:
    scenario: str
    config: str | None = None
    seed: int = 0
    reps: int = 1
    out: Path = Path("runs")
    heuristic: bool = True
    sparsify: bool = True
    params: dict = field(default_factory=dict)
    jobs: int = 1
    dump_clouds: bool = False

    def __post_init__(self) -> None:
        if self.reps < 1:
            raise ValueError("reps must be >= 1")
        if self.jobs < 1:
            raise ValueError("jobs must be >= 1")
        self.out = Path(self.out)

    def resolve_config(self) -> PlannerConfig:
        cfg = load_config(self.config) if self.config else PlannerConfig()
        cfg = cfg.with_overrides(self.params)
        if not self.heuristic:
            cfg = replace(cfg, heuristic=False)
        if not self.sparsify:
            cfg = replace(cfg, sparsify=False)
        return cfg.validate()


def format_value(v) -> str:
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_kv(path: Path, items: dict) -> None:
    path.write_text("".join(f"{k}={format_value(v)}\n" for k, v in items.items()))


def read_kv(path: Path) -> dict[str, str]:
    out = {}
    for lineno, line in enumerate(path.read_text().splitlines(), 1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        if "=" not in s:
            raise ValueError(f"{path}:{lineno}: expected key=value")
        k, v = s.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def _steps_table(record: RunRecord) -> str:
    head = "step kind iterations checked n_pcl3 n_pcl4 n_pcl5 d_min v_max used_last backups\n"
    rows = []
    for i, s in enumerate(record.steps):
        backups = ",".join(s.backups) or "-"
        rows.append(f"{i} {s.kind} {s.iterations} {s.checked} {s.n_pcl3} {s.n_pcl4} {s.n_pcl5} "
                    f"{format_value(s.d_min)} {format_value(s.v_max)} {int(s.used_last)} {backups}\n")
    return head + "".join(rows)


def export_run(record: RunRecord, scene: Scenario, run_dir: Path) -> tuple[dict, dict]:
    """Write one flight's files into ``run_dir``; return its ``(metrics, timing)``."""
    run_dir.mkdir(parents=True, exist_ok=True)
    metrics, timing = compute_metrics(record, scene)
    header = [f"scenario {record.scenario} seed {record.seed} status {record.status}",
              f"{len(record.positions)} samples every {record.times[1] - record.times[0]:g} s"
              if len(record.times) > 1 else "1 sample"]
    write_cloud(run_dir / "trajectory.txt", record.trajectory, header)
    write_kv(run_dir / "metrics.txt", metrics)
    (run_dir / "steps.txt").write_text(_steps_table(record))
    write_kv(run_dir / "timing.txt", timing)
    if record.snapshots:
        cdir = run_dir / "clouds"
        cdir.mkdir(exist_ok=True)
        for name, pts in sorted(record.snapshots.items()):
            write_cloud(cdir / f"{name}.txt", pts, [f"{name} at the last planning step, earth frame"])
    return metrics, timing


def _fly_one(args) -> tuple[int, dict, dict]:
    scene, cfg, seed, run_dir, dump = args
    record = run_flight(scene, cfg, seed=seed, keep_clouds=dump)
    metrics, timing = export_run(record, scene, run_dir)
    return seed, metrics, timing


def aggregate(metrics: list[dict], timings: list[dict]) -> tuple[dict, dict]:
    pl = np.array([m["pl_factor"] for m in metrics], dtype=float)
    agg = {
        "scenario": metrics[0]["scenario"],
        "runs": len(metrics),
        "successes": sum(m["success"] for m in metrics),
        "success_rate": float(np.mean([m["success"] for m in metrics])),
        "pl_mean": float(pl.mean()),
        "pl_std": float(pl.std()),
        "penetrations": sum(m["penetrations"] for m in metrics),
        "min_clearance": float(min(m["min_clearance"] for m in metrics)),
    }
    # step-weighted means over the whole batch
    for key, weight in (("mean_iterations", "steps_searched"), ("frac_iter_le3", "steps_searched"),
                        ("mean_pcl3", "steps"), ("mean_pcl4", "steps"), ("mean_pcl5", "steps")):
        w = np.array([m[weight] for m in metrics], dtype=float)
        vals = np.array([m[key] for m in metrics], dtype=float)
        agg[key] = float((vals * w).sum() / w.sum()) if w.sum() else 0.0
    for key in ("backup_T1", "backup_T2", "backup_T3"):
        agg[key] = sum(m[key] for m in metrics)
    timing = {}
    for key in ("total_ms_mean", "search_ms_mean", "solve_ms_mean", "filter_ms_mean", "total_ms_p95"):
        vals = [t[key] for t in timings if key in t]
        if vals:
            timing[key] = float(np.mean(vals))
    return agg, timing


def cmd_run(spec: RunSpec) -> int:
    scene = load_scenario(spec.scenario)
    cfg = spec.resolve_config()
    spec.out.mkdir(parents=True, exist_ok=True)
    (spec.out / "config.txt").write_text(cfg.to_text())
    (spec.out / "scenario.scn").write_text(scene.to_text())

    jobs = [(scene, cfg, spec.seed + i, spec.out / f"run_{i:03d}", spec.dump_clouds) for i in range(spec.reps)]
    if spec.jobs > 1 and spec.reps > 1:
        with ProcessPoolExecutor(max_workers=spec.jobs) as pool:
            results = list(pool.map(_fly_one, jobs))
    else:
        results = [_fly_one(j) for j in jobs]

    metrics = [m for _, m, _ in results]
    timings = [t for _, _, t in results]
    agg, agg_timing = aggregate(metrics, timings)
    write_kv(spec.out / "aggregate.txt", agg)
    write_kv(spec.out / "aggregate_timing.txt", agg_timing)
    for seed, m, t in results:
        print(f"seed {seed}: {m['status']} steps={m['steps']} pl={m['pl_factor']:.3f} "
              f"iters={m['mean_iterations']:.2f} step_ms={t.get('total_ms_mean', math.nan):.2f}")
    print(f"{agg['scenario']}: success {agg['successes']}/{agg['runs']}, "
          f"PL {agg['pl_mean']:.3f} +/- {agg['pl_std']:.3f}, penetrations {agg['penetrations']}")
    return EXIT_OK


def compare_dirs(base: Path, abl: Path) -> list[tuple[str, float, float]]:
    """Rows ``(metric, baseline, ablation)`` from two ``run`` output directories."""
    rows = []
    base_agg, abl_agg = read_kv(base / "aggregate.txt"), read_kv(abl / "aggregate.txt")
    if base_agg.get("scenario") != abl_agg.get("scenario"):
        raise ValueError(f"scenario mismatch: {base_agg.get('scenario')} vs {abl_agg.get('scenario')}")
    for key in COMPARE_KEYS:
        if key not in base_agg or key not in abl_agg:
            raise ValueError(f"metric {key!r} missing from an aggregate file")
        rows.append((key, float(base_agg[key]), float(abl_agg[key])))
    bt, at = base / "aggregate_timing.txt", abl / "aggregate_timing.txt"
    if bt.is_file() and at.is_file():
        b, a = read_kv(bt), read_kv(at)
        for key in sorted(set(b) & set(a)):
            rows.append((key, float(b[key]), float(a[key])))
    return rows


def format_table(rows) -> str:
    lines = [f"{'metric':<18} {'baseline':>12} {'ablation':>12} {'delta':>12} {'ratio':>8}"]
    for key, b, a in rows:
        ratio = a / b if b else math.nan
        lines.append(f"{key:<18} {b:>12.4f} {a:>12.4f} {a - b:>12.4f} {ratio:>8.3f}")
    return "\n".join(lines)


def cmd_compare(base: Path, abl: Path) -> int:
    print(format_table(compare_dirs(base, abl)))
    return EXIT_OK


def _parse_params(items: list[str]) -> dict[str, str]:
    out = {}
    for item in items:
        if "=" not in item:
            raise ConfigError(f"--param expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = v
    return out


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hasplan", description="Angular-search local planner flights")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="fly a scenario for one or more seeds")
    run.add_argument("--scenario", required=True, help="scenario file or built-in name")
    run.add_argument("--config", help="key=value planner config file")
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--reps", type=int, default=1)
    run.add_argument("--out", type=Path, default=Path("runs"))
    run.add_argument("--no-heuristic", action="store_true", help="always start the search at the goal direction")
    run.add_argument("--no-sparsify", action="store_true", help="collision-check against every map point")
    run.add_argument("--param", action="append", default=[], metavar="KEY=VALUE",
                     help="override a config field (repeatable)")
    run.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    run.add_argument("--dump-clouds", action="store_true", help="write last-step cloud snapshots")

    cmp_ = sub.add_parser("compare", help="tabulate a baseline run directory against an ablation")
    cmp_.add_argument("baseline", type=Path)
    cmp_.add_argument("ablation", type=Path)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            spec = RunSpec(
                scenario=args.scenario, config=args.config, seed=args.seed, reps=args.reps,
                out=args.out, heuristic=not args.no_heuristic, sparsify=not args.no_sparsify,
                params=_parse_params(args.param), jobs=args.jobs, dump_clouds=args.dump_clouds,
            )
            return cmd_run(spec)
        return cmd_compare(args.baseline, args.ablation)
    except SafetyRejected as exc:
        print(f"error: config rejected: {exc}", file=sys.stderr)
        return EXIT_SAFETY
    except (ConfigError, ScenarioError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())
