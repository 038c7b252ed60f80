"""Point cloud chain from raw camera returns to the local collision-check set.

Stages: ``filter_raw`` (range cut, outlier rejection, one point per voxel),
``to_earth``, ``VoxelMap.insert_cloud`` (global occupied-voxel centers),
``sparsify`` (one representative per ``r_safe/sqrt(3)`` cell) and
``local_crop``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.spatial import cKDTree

from .geometry import BODY, EARTH, EulerAttitude, PointCloud, as_point3, body_to_earth, transform_point


@dataclass(frozen=True)
class FilterParams:
    max_range: float = 8.0
    voxel_size: float = 0.2
    outlier_min_neighbors: int = 3
    outlier_radius: float = 0.4
    r_safe: float = 0.8
    d_use: float = 3.0

    def __post_init__(self) -> None:
        for name in ("max_range", "voxel_size", "outlier_radius", "r_safe", "d_use"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.outlier_min_neighbors < 0:
            raise ValueError("outlier_min_neighbors must be >= 0")
        if self.d_use > self.max_range:
            raise ValueError("d_use must not exceed max_range")


def _cell_representatives(pts: NDArray, pitch: float) -> NDArray[np.intp]:
    """Indices of one point per occupied cubic cell: the one nearest the cell center.

    Ties go to the lexicographically smallest point. Output is ordered by cell index.
    """
    if len(pts) == 0:
        return np.empty(0, dtype=np.intp)
    cells = np.floor(pts / pitch).astype(np.int64)
    off = pts - (cells + 0.5) * pitch
    dist = np.einsum("ij,ij->i", off, off)
    # sort by cell, then distance, then coordinates; first of each cell wins
    order = np.lexsort((pts[:, 2], pts[:, 1], pts[:, 0], dist, cells[:, 2], cells[:, 1], cells[:, 0]))
    sc = cells[order]
    first = np.ones(len(order), dtype=bool)
    first[1:] = np.any(sc[1:] != sc[:-1], axis=1)
    return order[first]


def filter_raw(raw: PointCloud, params: FilterParams) -> PointCloud:
    """Range cut, radius outlier rejection, then keep one point per voxel."""
    if raw.frame != BODY:
        raise ValueError("filter_raw expects a body-frame cloud")
    pts = raw.points
    pts = pts[np.all(np.isfinite(pts), axis=1)]
    pts = pts[np.linalg.norm(pts, axis=1) <= params.max_range]
    if len(pts) and params.outlier_min_neighbors > 0:
        k = params.outlier_min_neighbors + 1  # the point itself comes back first
        if len(pts) < k:
            pts = pts[:0]
        else:
            # the k-th neighbor exists within the radius iff there are enough neighbors
            bound = np.nextafter(params.outlier_radius, np.inf)
            dist, _ = cKDTree(pts).query(pts, k=[k], distance_upper_bound=bound)
            pts = pts[np.isfinite(dist[:, 0])]
    keep = _cell_representatives(pts, params.voxel_size)
    return PointCloud(pts[keep], BODY)


def to_earth(cloud: PointCloud, att: EulerAttitude, p_n: ArrayLike) -> PointCloud:
    if cloud.frame != BODY:
        raise ValueError("to_earth expects a body-frame cloud")
    R = body_to_earth(att)
    return PointCloud(transform_point(R, cloud.points, as_point3(p_n)), EARTH)


def to_body(cloud_earth: NDArray, att: EulerAttitude, p_n: ArrayLike) -> NDArray[np.float64]:
    """Inverse of :func:`to_earth` on a raw array: ``R.T @ (p - p_n)``."""
    R = body_to_earth(att)
    return (np.asarray(cloud_earth, dtype=float) - as_point3(p_n)) @ R


class VoxelMap:
    """Insert-only occupancy map over a cubic voxel lattice.

    Voxel ``(i, j, k)`` holds points with ``i = floor(x / voxel_size)`` etc.
    Its center is ``((i + 0.5) * v, (j + 0.5) * v, (k + 0.5) * v)``.
    Single writer; the arrays returned by :meth:`center_points` are copies.
    """

    def __init__(self, voxel_size: float = 0.2, occupancy_threshold: int = 1):
        if voxel_size <= 0:
            raise ValueError("voxel_size must be positive")
        if occupancy_threshold < 1:
            raise ValueError("occupancy_threshold must be >= 1")
        self.voxel_size = voxel_size
        self.occupancy_threshold = occupancy_threshold
        self.hits: dict[tuple[int, int, int], int] = {}
        self.version = 0
        self._centers: NDArray | None = None

    def __len__(self) -> int:
        return sum(1 for h in self.hits.values() if h >= self.occupancy_threshold)

    def insert(self, points: ArrayLike) -> None:
        pts = np.asarray(points, dtype=float).reshape(-1, 3)
        if len(pts) == 0:
            return
        idx = np.floor(pts / self.voxel_size).astype(np.int64)
        keys, counts = np.unique(idx, axis=0, return_counts=True)
        changed = False
        thr = self.occupancy_threshold
        for key, c in zip(map(tuple, keys.tolist()), counts.tolist()):
            old = self.hits.get(key, 0)
            self.hits[key] = old + c
            if old < thr <= old + c:
                changed = True
        if changed:
            self.version += 1
            self._centers = None

    def center_points(self) -> NDArray[np.float64]:
        """Centers of all occupied voxels, sorted by voxel index."""
        if self._centers is None:
            occ = sorted(k for k, h in self.hits.items() if h >= self.occupancy_threshold)
            if occ:
                self._centers = (np.array(occ, dtype=float) + 0.5) * self.voxel_size
            else:
                self._centers = np.empty((0, 3))
        return self._centers.copy()

    def insert_cloud(self, cloud: PointCloud) -> PointCloud:
        """Insert an earth-frame cloud and return the whole map as voxel centers."""
        if cloud.frame != EARTH:
            raise ValueError("insert_cloud expects an earth-frame cloud")
        self.insert(cloud.points)
        return PointCloud(self.center_points(), EARTH)


def sparsify(pcl3: PointCloud, r_safe: float) -> PointCloud:
    """Thin the map so every input point has a kept point within ``r_safe``.

    Points are binned on a lattice of pitch ``r_safe / sqrt(3)`` (cell
    diagonal equals ``r_safe``) and the point nearest each cell center is kept.
    """
    if r_safe <= 0:
        raise ValueError("r_safe must be positive")
    keep = _cell_representatives(pcl3.points, r_safe / math.sqrt(3.0))
    return PointCloud(pcl3.points[keep], EARTH)


def local_crop(pcl4: PointCloud, p_n: ArrayLike, d_use: float) -> tuple[PointCloud, float]:
    """Points within ``d_use`` of ``p_n`` and the nearest such distance (``inf`` if none)."""
    if d_use <= 0:
        raise ValueError("d_use must be positive")
    p = as_point3(p_n)
    d = np.linalg.norm(pcl4.points - p, axis=1)
    mask = d <= d_use
    d_min = float(d[mask].min()) if mask.any() else math.inf
    return PointCloud(pcl4.points[mask], pcl4.frame), d_min


def write_cloud(path: str | Path, points: ArrayLike, header: Iterable[str] = ()) -> None:
    """Write one ``x y z`` line per point; ``header`` lines are emitted as ``#`` comments."""
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    with open(path, "w") as fh:
        for line in header:
            fh.write(f"# {line}\n")
        for x, y, z in pts:
            fh.write(f"{x:.6f} {y:.6f} {z:.6f}\n")


def read_cloud(path: str | Path) -> NDArray[np.float64]:
    rows = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            s = line.strip()
            if not s or s.startswith("#"):
                continue
            parts = s.split(" ")
            if len(parts) != 3:
                raise ValueError(f"{path}:{lineno}: expected 3 fields, got {len(parts)}")
            rows.append([float(v) for v in parts])
    return np.array(rows, dtype=float).reshape(-1, 3)
