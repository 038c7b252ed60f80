"""One planner iteration: cloud chain, waypoint search, motion solve, backups.

Backup techniques, in the order they are tried:

* ``T1``: no clear ray at full ``l_d``; shrink ``l_d`` and search again.
* ``T2``: nearest obstacle closer than ``1.5 * r_safe``; shrink ``v_max``.
  Evaluated every step, independently of search failures.
* ``T3``: ``T1`` also failed; fly back to the last recorded position and,
  on arrival, search again while passing over the ray chosen there before.
"""

from __future__ import annotations

import math
import time
from collections import deque
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike, NDArray

from ..cloudpipe import VoxelMap, filter_raw, local_crop, sparsify, to_earth
from ..geometry import EulerAttitude, PointCloud, as_point3
from .motion import MotionInfeasible, MotionPrimitive, braking_primitive, solve_motion
from .search import SearchAngles, SearchResult, angles_match, goal_angles, has_search, heuristic_init

ADVANCE = "advance"
RETREAT = "retreat"
BRAKE = "brake"
FAILED = "failed"

ARRIVE_TOL = 0.05


@dataclass
class PlannerState:
    p_n: NDArray[np.float64]
    v_n: NDArray[np.float64]
    a_last: SearchAngles
    active_l_d: float
    active_v_max: float
    p_rec: list = field(default_factory=list)
    ray_rec: list = field(default_factory=list)
    n_avr: float = 0.0
    n_steps: int = 0
    match_history: deque = field(default_factory=lambda: deque(maxlen=3))
    advance_streak: int = 0
    retreat_index: int | None = None
    sparse_cache: tuple | None = None

    @classmethod
    def initial(cls, start: ArrayLike, goal: ArrayLike, config, velocity: ArrayLike = (0.0, 0.0, 0.0)) -> "PlannerState":
        p = as_point3(start)
        return cls(
            p_n=p,
            v_n=as_point3(velocity),
            a_last=goal_angles(p, goal),
            active_l_d=config.l_d,
            active_v_max=config.v_max,
        )


@dataclass
class StepOutcome:
    kind: str
    primitive: MotionPrimitive | None = None
    waypoint: NDArray[np.float64] | None = None
    target: NDArray[np.float64] | None = None
    search: SearchResult | None = None
    iterations: int = 0
    checked: int = 0
    n_pcl3: int = 0
    n_pcl4: int = 0
    n_pcl5: int = 0
    d_min: float = math.inf
    backups: list = field(default_factory=list)
    used_last: bool = False
    v_max: float = 0.0
    timings: dict = field(default_factory=dict)
    clouds: dict = field(default_factory=dict)


class _Clock:
    def __init__(self, timings: dict):
        self.timings = timings
        self.t = time.perf_counter()

    def lap(self, name: str) -> None:
        now = time.perf_counter()
        self.timings[name] = self.timings.get(name, 0.0) + (now - self.t)
        self.t = now


def _local_cloud(state: PlannerState, body_cloud: PointCloud, att: EulerAttitude,
                 vmap: VoxelMap, config, out: StepOutcome, clock: _Clock):
    pcl2_body = filter_raw(body_cloud, config.filter_params())
    clock.lap("filter")
    pcl2 = to_earth(pcl2_body, att, state.p_n)
    clock.lap("transform")
    pcl3 = vmap.insert_cloud(pcl2)
    clock.lap("map")
    if config.sparsify:
        if state.sparse_cache is None or state.sparse_cache[0] != vmap.version:
            state.sparse_cache = (vmap.version, sparsify(pcl3, config.r_safe))
        pcl4 = state.sparse_cache[1]
    else:
        pcl4 = pcl3
    clock.lap("sparsify")
    pcl5, d_min = local_crop(pcl4, state.p_n, config.d_use)
    clock.lap("crop")
    out.n_pcl3, out.n_pcl4, out.n_pcl5, out.d_min = len(pcl3), len(pcl4), len(pcl5), d_min
    out.clouds = {"pcl2": pcl2, "pcl3": pcl3, "pcl4": pcl4, "pcl5": pcl5}
    return pcl5, d_min


def update_speed_limit(state: PlannerState, d_min: float, config) -> bool:
    """Shrink or restore ``active_v_max`` from the nearest-obstacle distance; True if shrunk."""
    if d_min < 1.5 * config.r_safe:
        state.active_v_max = config.backup_vmax_factor * config.v_max
        return True
    state.active_v_max = config.v_max
    return False


def _motion_toward(state: PlannerState, search: SearchResult, config) -> tuple:
    """Primitive for the chosen ray, falling back to later feasible rays."""
    p = state.p_n
    options = [(search.waypoint, search.chosen)]
    options += [(p + config.mu * (c.end - p), c) for c in search.alternatives]
    for w_p, cand in options:
        try:
            return solve_motion(p, state.v_n, w_p, config, v_max=state.active_v_max), w_p, cand
        except MotionInfeasible:
            continue
    return None, None, None


def _retreat_primitive(state: PlannerState, target: NDArray, config) -> tuple[MotionPrimitive, str]:
    p = state.p_n
    delta = target - p
    dist = float(np.linalg.norm(delta))
    step = config.step_length
    w_p = target if dist <= step else p + delta * (step / dist)
    try:
        return solve_motion(p, state.v_n, w_p, config, v_max=state.active_v_max), RETREAT
    except MotionInfeasible:
        return braking_primitive(p, state.v_n, config), BRAKE


def _record_advance(state: PlannerState, chosen_angles: SearchAngles, config) -> None:
    state.match_history.append(angles_match(chosen_angles, state.a_last, 0.5 * config.delta_alpha))
    state.a_last = chosen_angles
    state.p_rec.append(state.p_n.copy())
    state.ray_rec.append(chosen_angles)
    state.advance_streak += 1
    if state.advance_streak >= config.restore_after:
        state.active_l_d = config.l_d


def apply_backup(state: PlannerState, pcl5: ArrayLike, a_g0: SearchAngles, config, out: StepOutcome,
                 skip=(), goal_alpha: float | None = None) -> SearchResult | None:
    """Run T1, then T3 if needed. Returns a successful search or ``None``.

    On ``None`` the outcome has been filled in as a retreat or a failure.
    """
    state.active_l_d = config.backup_ld_factor * config.l_d
    out.backups.append("T1")
    res = has_search(state.p_n, pcl5, a_g0, config, l_d=state.active_l_d, skip=skip, goal_alpha=goal_alpha)
    out.checked += res.checked
    out.iterations += res.iterations
    if res.found:
        return res
    state.advance_streak = 0
    idx = len(state.p_rec) - 1 if state.retreat_index is None else state.retreat_index - 1
    if idx < 0:
        out.kind = FAILED
        return None
    out.backups.append("T3")
    state.retreat_index = idx
    target = state.p_rec[idx]
    out.target = target.copy()
    out.primitive, out.kind = _retreat_primitive(state, target, config)
    return None


def run_step(state: PlannerState, body_cloud: PointCloud, att: EulerAttitude, goal: ArrayLike,
             vmap: VoxelMap, config) -> StepOutcome:
    """Advance the planner by one iteration from ``state.p_n``/``state.v_n``.

    Mutates ``state`` (statistics, records, active limits) and ``vmap``.
    """
    out = StepOutcome(kind=FAILED)
    clock = _Clock(out.timings)
    t_start = clock.t
    goal = as_point3(goal)

    pcl5_cloud, d_min = _local_cloud(state, body_cloud, att, vmap, config, out, clock)
    pcl5 = pcl5_cloud.points
    n_obs = len(pcl5)
    if update_speed_limit(state, d_min, config):
        out.backups.append("T2")
    out.v_max = state.active_v_max

    a_g = goal_angles(state.p_n, goal)
    skip = ()
    if state.retreat_index is not None:
        target = state.p_rec[state.retreat_index]
        if np.linalg.norm(state.p_n - target) > ARRIVE_TOL:
            out.target = target.copy()
            out.backups.append("T3")
            out.primitive, out.kind = _retreat_primitive(state, target, config)
            clock.lap("solve")
            return _finish(state, out, n_obs, t_start)
        skip = (state.ray_rec[state.retreat_index],)

    if config.heuristic:
        a_g0 = heuristic_init(a_g, state.a_last, state.match_history, n_obs, state.n_avr)
    else:
        a_g0 = a_g
    out.used_last = a_g0 != a_g

    res = has_search(state.p_n, pcl5, a_g0, config, l_d=state.active_l_d, skip=skip, goal_alpha=a_g.alpha)
    out.checked = res.checked
    out.iterations = res.iterations
    if not res.found:
        res = apply_backup(state, pcl5, a_g0, config, out, skip, a_g.alpha)
    clock.lap("search")
    if res is None:
        clock.lap("solve")
        return _finish(state, out, n_obs, t_start)
    out.search = res

    primitive, w_p, cand = _motion_toward(state, res, config)
    clock.lap("solve")
    if primitive is None:
        out.kind = BRAKE
        out.primitive = braking_primitive(state.p_n, state.v_n, config)
        state.advance_streak = 0
        return _finish(state, out, n_obs, t_start)

    out.kind = ADVANCE
    out.primitive = primitive
    out.waypoint = w_p
    state.retreat_index = None
    _record_advance(state, cand.angles, config)
    return _finish(state, out, n_obs, t_start)


def _finish(state: PlannerState, out: StepOutcome, n_obs: int, t_start: float) -> StepOutcome:
    state.n_steps += 1
    state.n_avr += (n_obs - state.n_avr) / state.n_steps
    out.timings["total"] = time.perf_counter() - t_start
    return out
