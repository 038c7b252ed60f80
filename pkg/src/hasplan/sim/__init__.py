from .flight import (
    GOAL_REACHED, FAILED_STATUS, STEP_LIMIT, DroneState, RunRecord, StepLog, integrate, propagate, run_flight,
)
from .metrics import compute_metrics
from .sensor import sense
from .world import Obstacle, Scenario, ScenarioError, SensorParams, builtin_scenarios, load_scenario, parse_scenario

__all__ = [
    "GOAL_REACHED", "FAILED_STATUS", "STEP_LIMIT", "DroneState", "Obstacle", "RunRecord", "Scenario",
    "ScenarioError", "SensorParams", "StepLog", "builtin_scenarios", "compute_metrics", "integrate",
    "load_scenario", "parse_scenario", "propagate", "run_flight", "sense",
]
