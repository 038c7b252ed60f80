"""3D primitives: points, Euler attitude, the body/earth rotation and ray clearance.

Points are plain ``(3,)`` float arrays and clouds are ``(N, 3)`` arrays; the
:class:`PointCloud` wrapper only adds the frame tag used by the filter chain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike, NDArray

BODY = "body"
EARTH = "earth"

_FOOT_TOL = 1e-12  # relative slack on the foot-in-segment test


def as_point3(p: ArrayLike) -> NDArray[np.float64]:
    """Return *p* as a finite ``(3,)`` float array, raising ``ValueError`` otherwise."""
    arr = np.asarray(p, dtype=float).reshape(-1)
    if arr.shape != (3,):
        raise ValueError(f"expected 3 components, got shape {np.shape(p)}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"non-finite point {arr}")
    return arr


def wrap_angle(a: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    w = math.remainder(a, 2.0 * math.pi)
    if w <= -math.pi:
        w += 2.0 * math.pi
    return w


@dataclass(frozen=True)
class EulerAttitude:
    """Roll ``phi``, pitch ``theta`` and yaw ``psi`` in radians."""

    phi: float = 0.0
    theta: float = 0.0
    psi: float = 0.0

    def __post_init__(self) -> None:
        for name in ("phi", "theta", "psi"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        object.__setattr__(self, "psi", wrap_angle(self.psi))

    @classmethod
    def yaw(cls, psi: float) -> "EulerAttitude":
        return cls(0.0, 0.0, psi)


@dataclass
class PointCloud:
    """An ``(N, 3)`` array of points plus the frame they are expressed in."""

    points: NDArray[np.float64] = field(default_factory=lambda: np.empty((0, 3)))
    frame: str = EARTH

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, dtype=float)
        if pts.size == 0:
            pts = np.empty((0, 3))
        if pts.ndim != 2 or pts.shape[1] != 3:
            raise ValueError(f"point cloud must be (N, 3), got {pts.shape}")
        if self.frame not in (BODY, EARTH):
            raise ValueError(f"unknown frame {self.frame!r}")
        self.points = pts

    def __len__(self) -> int:
        return len(self.points)


def body_to_earth(att: EulerAttitude) -> NDArray[np.float64]:
    """Rotation matrix built from the three Euler angles.

    Entries follow the printed layout exactly: row 0 is
    ``(cψcθ, sψcθ, -sθ)``. For a pure yaw this is ``Rz(-ψ)``, i.e. the
    transpose of the usual ZYX body-to-earth matrix.
    """
    cf, sf = math.cos(att.phi), math.sin(att.phi)
    ct, st = math.cos(att.theta), math.sin(att.theta)
    cp, sp = math.cos(att.psi), math.sin(att.psi)
    return np.array(
        [
            [cp * ct, sp * ct, -st],
            [cp * st * sf - sp * cf, sp * st * sf + cp * cf, ct * sf],
            [cp * st * cf + sp * sf, sp * st * cf - cp * sf, ct * cf],
        ]
    )


def transform_point(R: NDArray, p_body: ArrayLike, p_n: ArrayLike) -> NDArray[np.float64]:
    """``R @ p_body + p_n``. Accepts a single point or an ``(N, 3)`` stack."""
    pb = np.asarray(p_body, dtype=float)
    return pb @ np.asarray(R).T + np.asarray(p_n, dtype=float)


def segment_clearance(
    p_n: ArrayLike, p_d: ArrayLike, cloud: ArrayLike, *, foot_rule: bool = True
) -> float:
    """Smallest distance from cloud points to the segment ``p_n -> p_d``.

    With ``foot_rule`` (the planner's rule) a point whose perpendicular foot
    falls outside the segment contributes ``inf`` instead of its endpoint
    distance. ``foot_rule=False`` gives the ordinary point-to-segment metric.
    An empty cloud yields ``inf``.
    """
    a = np.asarray(p_n, dtype=float)
    b = np.asarray(p_d, dtype=float)
    seg = b - a
    seg_sq = float(seg @ seg)
    if seg_sq == 0.0:
        raise ValueError("degenerate segment: endpoints coincide")
    pts = np.asarray(cloud, dtype=float).reshape(-1, 3)
    if len(pts) == 0:
        return math.inf

    ap = pts - a
    dot = ap @ seg
    if foot_rule:
        # |ap|^2 > |bp|^2 + |seg|^2 iff dot < 0, and symmetrically at the far end;
        # points on the boundary (up to rounding) are kept
        tol = _FOOT_TOL * seg_sq
        outside = (dot < -tol) | (dot > seg_sq + tol)
        cross = np.cross(ap, seg)
        d = np.sqrt(np.einsum("ij,ij->i", cross, cross)) / math.sqrt(seg_sq)
        d[outside] = math.inf
    else:
        t = np.clip(dot / seg_sq, 0.0, 1.0)
        diff = ap - t[:, None] * seg
        d = np.sqrt(np.einsum("ij,ij->i", diff, diff))
    return float(d.min())


def batch_clearance(p_n: NDArray, ends: NDArray, pts: NDArray) -> NDArray[np.float64]:
    """:func:`segment_clearance` (foot rule) for many segments sharing ``p_n``.

    ``ends`` is ``(K, 3)``; returns ``(K,)`` clearances.
    """
    ends = np.asarray(ends, dtype=float).reshape(-1, 3)
    if len(pts) == 0:
        return np.full(len(ends), math.inf)
    seg = ends - p_n                               # (K, 3)
    seg_sq = np.einsum("kj,kj->k", seg, seg)
    if np.any(seg_sq == 0.0):
        raise ValueError("degenerate segment: endpoints coincide")
    ap = pts - p_n                                 # (N, 3)
    ap_sq = np.einsum("ij,ij->i", ap, ap)
    dot = seg @ ap.T                               # (K, N)
    tol = _FOOT_TOL * seg_sq[:, None]
    outside = (dot < -tol) | (dot > seg_sq[:, None] + tol)
    perp_sq = np.maximum(ap_sq[None, :] - dot**2 / seg_sq[:, None], 0.0)
    d = np.sqrt(perp_sq)
    d[outside] = math.inf
    return d.min(axis=1)
