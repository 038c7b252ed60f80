"""Reactive UAV obstacle avoidance with heuristic angular waypoint search."""

__version__ = "0.1.0"
