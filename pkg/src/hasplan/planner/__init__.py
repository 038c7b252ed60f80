from .config import ConfigError, PlannerConfig, SafetyRejected, load_config, parse_config_text
from .motion import MotionInfeasible, MotionPrimitive, braking_primitive, solve_motion
from .safety import d_max_bound
from .search import (
    Candidate,
    SearchAngles,
    SearchResult,
    candidate_endpoints,
    enumerate_candidates,
    goal_angles,
    has_search,
    heuristic_init,
)
from .step import ADVANCE, BRAKE, FAILED, RETREAT, PlannerState, StepOutcome, apply_backup, run_step

__all__ = [
    "ADVANCE", "BRAKE", "FAILED", "RETREAT", "Candidate", "ConfigError", "MotionInfeasible",
    "MotionPrimitive", "PlannerConfig", "PlannerState", "SafetyRejected", "SearchAngles",
    "SearchResult", "StepOutcome", "apply_backup", "braking_primitive", "candidate_endpoints",
    "d_max_bound", "enumerate_candidates", "goal_angles", "has_search", "heuristic_init",
    "load_config", "parse_config_text", "run_step", "solve_motion",
]
