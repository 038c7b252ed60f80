"""Closed-loop flight: sense, plan, fly the primitive, repeat."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from ..cloudpipe import VoxelMap
from ..geometry import EulerAttitude
from ..planner.config import PlannerConfig
from ..planner.motion import MotionPrimitive
from ..planner.step import FAILED, PlannerState, run_step
from .sensor import sense
from .world import Scenario

REPLAN_DT = 0.1
SIM_DT = 1e-3
SAMPLE_EVERY = 10  # sub-steps between stored trajectory samples

# goal-switch position servo: critically damped, fixed gains
SERVO_OMEGA = 3.0
SERVO_MAX_TIME = 3.0

GOAL_REACHED = "GoalReached"
FAILED_STATUS = "Failed"
STEP_LIMIT = "StepLimit"


@dataclass
class DroneState:
    position: NDArray[np.float64]
    velocity: NDArray[np.float64]
    yaw: float
    time: float = 0.0


def yaw_to(position: NDArray, goal: NDArray) -> float:
    d = goal - position
    return math.atan2(d[1], d[0])


def integrate(drone: DroneState, primitive: MotionPrimitive, dt: float, goal: NDArray) -> DroneState:
    """Constant-acceleration update over ``dt``; yaw turns to face ``goal``."""
    if not 0 < dt <= primitive.t + 1e-12:
        raise ValueError(f"dt must lie in (0, t_n], got {dt}")
    a = primitive.a
    p = drone.position + drone.velocity * dt + 0.5 * a * dt * dt
    v = drone.velocity + a * dt
    return DroneState(p, v, yaw_to(p, goal), drone.time + dt)


def propagate(primitive: MotionPrimitive, taus: NDArray) -> tuple[NDArray, NDArray]:
    """Positions/velocities at offsets ``taus``; after ``t_n`` the drone coasts at ``v_next``."""
    taus = np.asarray(taus, dtype=float)
    tc = np.minimum(taus, primitive.t)[:, None]
    pos = primitive.p0 + primitive.v0 * tc + 0.5 * primitive.a * tc**2
    vel = primitive.v0 + primitive.a * tc
    extra = (taus - primitive.t).clip(min=0.0)[:, None]
    return pos + vel * extra, vel


@dataclass
class StepLog:
    kind: str
    iterations: int
    checked: int
    n_pcl3: int
    n_pcl4: int
    n_pcl5: int
    d_min: float
    v_max: float
    backups: tuple
    used_last: bool
    timings: dict


@dataclass
class RunRecord:
    scenario: str
    seed: int
    status: str = STEP_LIMIT
    steps: list = field(default_factory=list)
    times: list = field(default_factory=list)
    positions: list = field(default_factory=list)
    speeds: list = field(default_factory=list)  # inf-norm of velocity at each sample
    vmax_limits: list = field(default_factory=list)  # active v_max bound at each sample
    penetrations: int = 0
    min_clearance: float = math.inf
    final_distance: float = math.inf
    snapshots: dict = field(default_factory=dict)

    @property
    def trajectory(self) -> NDArray[np.float64]:
        return np.array(self.positions, dtype=float).reshape(-1, 3)

    @property
    def path_length(self) -> float:
        tr = self.trajectory
        return float(np.linalg.norm(np.diff(tr, axis=0), axis=1).sum()) if len(tr) > 1 else 0.0


def _fly(scene: Scenario, rec: RunRecord, pos: NDArray, vel: NDArray, t0: float, vlimit: float) -> None:
    """Check sub-step states for penetration and store every SAMPLE_EVERY-th one."""
    d = scene.sdf(pos)
    rec.penetrations += int(np.count_nonzero(d < 0.0))
    rec.min_clearance = min(rec.min_clearance, float(d.min()) if len(d) else math.inf)
    n = len(pos)
    for i in range(SAMPLE_EVERY - 1, n, SAMPLE_EVERY):
        rec.times.append(round(t0 + (i + 1) * SIM_DT, 9))
        rec.positions.append(pos[i].tolist())
        rec.speeds.append(float(np.abs(vel[i]).max()))
        rec.vmax_limits.append(vlimit)


def _servo(scene: Scenario, drone: DroneState, goal: NDArray, config: PlannerConfig, rec: RunRecord) -> DroneState:
    p, v, t = drone.position.copy(), drone.velocity.copy(), drone.time
    w = SERVO_OMEGA
    n = int(round(SERVO_MAX_TIME / SIM_DT))
    ps, vs = [], []
    for _ in range(n):
        a = np.clip(w * w * (goal - p) - 2.0 * w * v, -config.a_max, config.a_max)
        p = p + v * SIM_DT + 0.5 * a * SIM_DT**2
        v = v + a * SIM_DT
        ps.append(p)
        vs.append(v)
        if len(ps) % SAMPLE_EVERY == 0 and np.linalg.norm(goal - p) < 0.01 and np.linalg.norm(v) < 0.05:
            break
    _fly(scene, rec, np.array(ps), np.array(vs), t, config.v_max)
    t += len(ps) * SIM_DT
    return DroneState(p, v, drone.yaw, t)


def run_flight(scene: Scenario, config: PlannerConfig, seed: int | None = None, *, keep_clouds: bool = False) -> RunRecord:
    """Fly ``scene`` with ``config`` until the goal, a planner failure, or the step limit.

    ``seed`` (default ``scene.seed``) drives the sensor noise only.
    """
    config.validate()
    seed = scene.seed if seed is None else seed
    rng = np.random.default_rng(seed)
    goal = scene.goal
    drone = DroneState(scene.start.copy(), np.zeros(3), yaw_to(scene.start, goal), 0.0)
    state = PlannerState.initial(scene.start, goal, config)
    vmap = VoxelMap(config.voxel_size)
    rec = RunRecord(scene.name, seed)
    rec.times.append(0.0)
    rec.positions.append(drone.position.tolist())
    rec.speeds.append(0.0)
    rec.vmax_limits.append(config.v_max)
    rec.min_clearance = float(scene.sdf(drone.position)[0])

    n_sub = int(round(REPLAN_DT / SIM_DT))
    taus = SIM_DT * np.arange(1, n_sub + 1)
    prev_vmax = config.v_max
    out = None
    for _ in range(scene.step_limit):
        if np.linalg.norm(goal - drone.position) <= config.goal_switch_radius:
            drone = _servo(scene, drone, goal, config, rec)
            rec.status = GOAL_REACHED
            break
        body = sense(scene, drone, rng)
        state.p_n = drone.position.copy()
        state.v_n = drone.velocity.copy()
        out = run_step(state, body, EulerAttitude.yaw(drone.yaw), goal, vmap, config)
        rec.steps.append(StepLog(out.kind, out.iterations, out.checked, out.n_pcl3, out.n_pcl4, out.n_pcl5,
                                 out.d_min, out.v_max, tuple(out.backups), out.used_last, dict(out.timings)))
        if out.kind == FAILED:
            rec.status = FAILED_STATUS
            break
        pos, vel = propagate(out.primitive, taus)
        # speed may still be above a freshly shrunk limit while braking toward it
        _fly(scene, rec, pos, vel, drone.time, max(prev_vmax, out.v_max))
        prev_vmax = out.v_max
        p_end = pos[-1].copy()
        drone = DroneState(p_end, vel[-1].copy(), yaw_to(p_end, goal), round(drone.time + REPLAN_DT, 9))
    else:
        rec.status = STEP_LIMIT

    rec.final_distance = float(np.linalg.norm(goal - drone.position))
    if keep_clouds and out is not None:
        rec.snapshots = {k: c.points.copy() for k, c in out.clouds.items()}
    return rec
