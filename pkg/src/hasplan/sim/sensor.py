"""Synthetic depth camera: ray casting over analytic obstacles inside a frustum."""

from __future__ import annotations

import math

import numpy as np
from numpy.typing import NDArray

from ..cloudpipe import to_body
from ..geometry import BODY, EulerAttitude, PointCloud
from .world import Scenario, SensorParams


def ray_grid(sensor: SensorParams) -> tuple[NDArray, NDArray]:
    """Azimuth and elevation offsets (radians) of every camera ray."""
    nh = int(round(sensor.fov_h_deg / sensor.resolution_deg)) + 1
    nv = int(round(sensor.fov_v_deg / sensor.resolution_deg)) + 1
    az = np.radians(np.linspace(-0.5 * sensor.fov_h_deg, 0.5 * sensor.fov_h_deg, nh))
    el = np.radians(np.linspace(-0.5 * sensor.fov_v_deg, 0.5 * sensor.fov_v_deg, nv))
    A, E = np.meshgrid(az, el, indexing="ij")
    return A.ravel(), E.ravel()


def ray_directions(yaw: float, sensor: SensorParams) -> NDArray[np.float64]:
    az, el = ray_grid(sensor)
    heading = yaw + az
    ce = np.cos(el)
    return np.column_stack([ce * np.cos(heading), ce * np.sin(heading), np.sin(el)])


def first_hits(scene: Scenario, origin: NDArray, dirs: NDArray) -> NDArray[np.float64]:
    t = np.full(len(dirs), np.inf)
    for ob in scene.obstacles:
        t = np.minimum(t, ob.ray_hits(origin, dirs))
    return t


def sense(scene: Scenario, drone, rng: np.random.Generator | None = None) -> PointCloud:
    """Body-frame returns of one camera frame from ``drone.position`` facing ``drone.yaw``.

    Only first hits within ``[min_range, max_range]`` are returned. With an
    ``rng`` and ``sigma0 > 0`` each range gets zero-mean Gaussian noise with
    ``sigma = sigma0 * range / max_range``, truncated at three sigma. The
    generator is drawn from once per ray whether or not the ray hits.
    """
    sp = scene.sensor
    origin = np.asarray(drone.position, dtype=float)
    yaw = drone.yaw
    dirs = ray_directions(yaw, sp)
    t = first_hits(scene, origin, dirs)
    noise = None
    if rng is not None and sp.sigma0 > 0:
        noise = np.clip(rng.standard_normal(len(dirs)), -3.0, 3.0)
    keep = (t >= sp.min_range) & (t <= sp.max_range)
    rng_m = t[keep]
    if noise is not None:
        rng_m = rng_m + noise[keep] * sp.sigma0 * rng_m / sp.max_range
    pts = origin + dirs[keep] * rng_m[:, None]
    return PointCloud(to_body(pts, EulerAttitude.yaw(yaw), origin), BODY)


def camera_axis(yaw: float) -> NDArray[np.float64]:
    return np.array([math.cos(yaw), math.sin(yaw), 0.0])
