"""Per-run summary numbers: path quality, search effort, timing."""

from __future__ import annotations

import math
from collections import Counter

import numpy as np

from .flight import GOAL_REACHED, RunRecord
from .world import Scenario

PHASES = ("filter", "transform", "map", "sparsify", "crop", "search", "solve", "total")


def path_length(points) -> float:
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    if len(pts) < 2:
        return 0.0
    return float(np.linalg.norm(np.diff(pts, axis=0), axis=1).sum())


def compute_metrics(record: RunRecord, scene: Scenario) -> tuple[dict, dict]:
    """Return ``(metrics, timing)``.

    ``metrics`` is deterministic for a given scenario, seed and config;
    wall-clock numbers live in ``timing`` only.
    """
    straight = float(np.linalg.norm(scene.goal - scene.start))
    length = path_length(record.trajectory)
    searched = [s for s in record.steps if s.iterations > 0]
    iters = [s.iterations for s in searched]
    hist = Counter(s.iterations for s in record.steps)  # bin 0: steps without a search
    backups = Counter(b for s in record.steps for b in s.backups)
    kinds = Counter(s.kind for s in record.steps)
    n = len(record.steps)
    metrics = {
        "scenario": record.scenario,
        "seed": record.seed,
        "status": record.status,
        "success": int(record.status == GOAL_REACHED),
        "steps": n,
        "steps_searched": len(searched),
        "flight_time": record.times[-1] if record.times else 0.0,
        "path_length": length,
        "straight_distance": straight,
        "pl_factor": length / straight if straight > 0 else math.nan,
        "final_distance": record.final_distance,
        "penetrations": record.penetrations,
        "min_clearance": record.min_clearance,
        "mean_iterations": float(np.mean(iters)) if iters else 0.0,
        "frac_iter_le3": float(np.mean([i <= 3 for i in iters])) if iters else 0.0,
        "mean_checked": float(np.mean([s.checked for s in record.steps])) if n else 0.0,
        "mean_pcl3": float(np.mean([s.n_pcl3 for s in record.steps])) if n else 0.0,
        "mean_pcl4": float(np.mean([s.n_pcl4 for s in record.steps])) if n else 0.0,
        "mean_pcl5": float(np.mean([s.n_pcl5 for s in record.steps])) if n else 0.0,
        "heuristic_share": float(np.mean([s.used_last for s in record.steps])) if n else 0.0,
        "backup_T1": backups["T1"],
        "backup_T2": backups["T2"],
        "backup_T3": backups["T3"],
        "steps_advance": kinds["advance"],
        "steps_retreat": kinds["retreat"],
        "steps_brake": kinds["brake"],
    }
    for k in sorted(hist):
        metrics[f"iter_hist_{k}"] = hist[k]

    timing = {}
    for phase in PHASES:
        vals = np.array([s.timings.get(phase, 0.0) for s in record.steps]) * 1e3
        if len(vals):
            timing[f"{phase}_ms_mean"] = float(vals.mean())
            timing[f"{phase}_ms_median"] = float(np.median(vals))
            timing[f"{phase}_ms_p95"] = float(np.percentile(vals, 95))
    return metrics, timing
