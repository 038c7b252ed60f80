"""Obstacle geometry, scenario definitions and the scenario text format.

Scenario file layout::

    # comment
    [scenario]
    name = simple_forward
    start = 0 0 0
    goal = 12 0 1
    seed = 0
    step_limit = 600

    [sensor]
    fov_h_deg = 70
    ...

    [obstacles]
    box cx cy cz sx sy sz      # axis-aligned, center and full size
    cyl cx cy r h              # vertical cylinder standing on z = 0
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from importlib import resources
from pathlib import Path

import numpy as np
from numpy.typing import ArrayLike, NDArray

from ..geometry import as_point3

BOX = "box"
CYL = "cyl"


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class Obstacle:
    """``box``: ``dims = (cx, cy, cz, sx, sy, sz)``; ``cyl``: ``dims = (cx, cy, r, h)``."""

    kind: str
    dims: tuple

    def __post_init__(self) -> None:
        n = {BOX: 6, CYL: 4}.get(self.kind)
        if n is None:
            raise ScenarioError(f"unknown obstacle kind {self.kind!r}")
        if len(self.dims) != n:
            raise ScenarioError(f"{self.kind} needs {n} numbers, got {len(self.dims)}")
        dims = tuple(float(d) for d in self.dims)
        sizes = dims[3:] if self.kind == BOX else dims[2:]
        if not all(s > 0 for s in sizes):
            raise ScenarioError(f"{self.kind} dimensions must be positive: {dims}")
        object.__setattr__(self, "dims", dims)

    @classmethod
    def box(cls, center, size) -> "Obstacle":
        return cls(BOX, (*center, *size))

    @classmethod
    def cylinder(cls, cx, cy, r, h) -> "Obstacle":
        return cls(CYL, (cx, cy, r, h))

    def sdf(self, pts: ArrayLike) -> NDArray[np.float64]:
        """Signed distance to the surface; negative inside."""
        p = np.asarray(pts, dtype=float).reshape(-1, 3)
        if self.kind == BOX:
            c = np.array(self.dims[:3])
            h = 0.5 * np.array(self.dims[3:])
            q = np.abs(p - c) - h
            outside = np.linalg.norm(np.maximum(q, 0.0), axis=1)
            inside = np.minimum(q.max(axis=1), 0.0)
            return outside + inside
        cx, cy, r, h = self.dims
        d_r = np.hypot(p[:, 0] - cx, p[:, 1] - cy) - r
        d_z = np.maximum(-p[:, 2], p[:, 2] - h)
        outside = np.hypot(np.maximum(d_r, 0.0), np.maximum(d_z, 0.0))
        inside = np.minimum(np.maximum(d_r, d_z), 0.0)
        return outside + inside

    def ray_hits(self, origin: NDArray, dirs: NDArray) -> NDArray[np.float64]:
        """Entry distance along each unit ray, ``inf`` for a miss."""
        if self.kind == BOX:
            return _ray_box(origin, dirs, np.array(self.dims[:3]), 0.5 * np.array(self.dims[3:]))
        return _ray_cyl(origin, dirs, *self.dims)

    def to_line(self) -> str:
        return " ".join([self.kind, *(f"{d:g}" for d in self.dims)])


def _ray_box(o, D, c, h):
    lo = c - h - o
    hi = c + h - o
    with np.errstate(divide="ignore", invalid="ignore"):
        t1 = lo / D
        t2 = hi / D
    tmin = np.minimum(t1, t2)
    tmax = np.maximum(t1, t2)
    # rays parallel to a slab: inside the slab -> unbounded, outside -> miss
    par = D == 0.0
    inside_slab = (lo <= 0.0) & (hi >= 0.0)
    tmin = np.where(par, np.where(inside_slab, -np.inf, np.inf), tmin)
    tmax = np.where(par, np.where(inside_slab, np.inf, -np.inf), tmax)
    t_near = tmin.max(axis=1)
    t_far = tmax.min(axis=1)
    hit = (t_near <= t_far) & (t_near >= 0.0)
    return np.where(hit, t_near, np.inf)


def _ray_cyl(o, D, cx, cy, r, h):
    ox, oy, oz = o[0] - cx, o[1] - cy, o[2]
    dx, dy, dz = D[:, 0], D[:, 1], D[:, 2]
    best = np.full(len(D), np.inf)
    a = dx * dx + dy * dy
    b = 2.0 * (dx * ox + dy * oy)
    cc = ox * ox + oy * oy - r * r
    disc = b * b - 4.0 * a * cc
    with np.errstate(divide="ignore", invalid="ignore"):
        t_side = (-b - np.sqrt(disc)) / (2.0 * a)
        z_side = oz + t_side * dz
        ok = (a > 0) & (disc >= 0) & (t_side >= 0) & (z_side >= 0) & (z_side <= h)
        best = np.where(ok, t_side, best)
        for zc in (h, 0.0):
            t_cap = (zc - oz) / dz
            xr = ox + t_cap * dx
            yr = oy + t_cap * dy
            ok = (dz != 0) & (t_cap >= 0) & (xr * xr + yr * yr <= r * r)
            best = np.where(ok & (t_cap < best), t_cap, best)
    return best


@dataclass(frozen=True)
class SensorParams:
    fov_h_deg: float = 70.0
    fov_v_deg: float = 60.0
    min_range: float = 0.5
    max_range: float = 8.0
    resolution_deg: float = 2.0
    sigma0: float = 0.01

    def __post_init__(self) -> None:
        for f in fields(self):
            v = getattr(self, f.name)
            if v < 0 or (f.name != "sigma0" and v == 0):
                raise ScenarioError(f"sensor {f.name} must be positive")
        if self.min_range >= self.max_range:
            raise ScenarioError("sensor min_range must be below max_range")


@dataclass(frozen=True)
class Scenario:
    name: str
    start: NDArray[np.float64]
    goal: NDArray[np.float64]
    obstacles: tuple = ()
    seed: int = 0
    step_limit: int = 600
    sensor: SensorParams = field(default_factory=SensorParams)

    def __post_init__(self) -> None:
        object.__setattr__(self, "start", as_point3(self.start))
        object.__setattr__(self, "goal", as_point3(self.goal))
        object.__setattr__(self, "obstacles", tuple(self.obstacles))
        if self.step_limit <= 0:
            raise ScenarioError("step_limit must be positive")
        for label, p in (("start", self.start), ("goal", self.goal)):
            if len(self.obstacles) and self.sdf(p)[0] <= 0:
                raise ScenarioError(f"{label} {p} lies inside an obstacle")

    def sdf(self, pts: ArrayLike) -> NDArray[np.float64]:
        """Signed distance to the nearest obstacle (``inf`` in an empty world)."""
        p = np.asarray(pts, dtype=float).reshape(-1, 3)
        if not self.obstacles:
            return np.full(len(p), np.inf)
        return np.min([o.sdf(p) for o in self.obstacles], axis=0)

    def with_seed(self, seed: int) -> "Scenario":
        return replace(self, seed=seed)

    def to_text(self) -> str:
        lines = [
            "[scenario]",
            f"name = {self.name}",
            "start = " + " ".join(f"{v:g}" for v in self.start),
            "goal = " + " ".join(f"{v:g}" for v in self.goal),
            f"seed = {self.seed}",
            f"step_limit = {self.step_limit}",
            "",
            "[sensor]",
            *(f"{f.name} = {getattr(self.sensor, f.name):g}" for f in fields(self.sensor)),
            "",
            "[obstacles]",
            *(o.to_line() for o in self.obstacles),
        ]
        return "\n".join(lines) + "\n"


def parse_scenario(text: str, default_name: str = "scenario") -> Scenario:
    section = None
    head: dict[str, str] = {}
    sensor: dict[str, float] = {}
    obstacles = []
    sensor_keys = {f.name for f in fields(SensorParams)}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section not in ("scenario", "sensor", "obstacles"):
                raise ScenarioError(f"line {lineno}: unknown section [{section}]")
            continue
        try:
            if section == "obstacles":
                kind, *nums = line.split()
                obstacles.append(Obstacle(kind, tuple(float(x) for x in nums)))
            elif section in ("scenario", "sensor"):
                if "=" not in line:
                    raise ScenarioError(f"expected key = value, got {line!r}")
                k, v = (s.strip() for s in line.split("=", 1))
                if section == "sensor":
                    if k not in sensor_keys:
                        raise ScenarioError(f"unknown sensor key {k!r}")
                    sensor[k] = float(v)
                else:
                    if k not in ("name", "start", "goal", "seed", "step_limit"):
                        raise ScenarioError(f"unknown scenario key {k!r}")
                    head[k] = v
            else:
                raise ScenarioError("content before the first section header")
        except ScenarioError as exc:
            raise ScenarioError(f"line {lineno}: {exc}") from None
        except ValueError as exc:
            raise ScenarioError(f"line {lineno}: {exc}") from None
    for k in ("start", "goal"):
        if k not in head:
            raise ScenarioError(f"missing {k}")
    try:
        start = [float(x) for x in head["start"].split()]
        goal = [float(x) for x in head["goal"].split()]
        return Scenario(
            name=head.get("name", default_name),
            start=start,
            goal=goal,
            obstacles=tuple(obstacles),
            seed=int(head.get("seed", 0)),
            step_limit=int(head.get("step_limit", 600)),
            sensor=SensorParams(**sensor),
        )
    except ScenarioError:
        raise
    except ValueError as exc:
        raise ScenarioError(str(exc)) from None


def builtin_scenarios() -> list[str]:
    root = resources.files("hasplan.sim") / "scenarios"
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".scn"))


def load_scenario(name_or_path: str | Path) -> Scenario:
    """Load a scenario file, or a shipped scenario by bare name."""
    path = Path(name_or_path)
    if path.is_file():
        return parse_scenario(path.read_text(), default_name=path.stem)
    root = resources.files("hasplan.sim") / "scenarios"
    res = root / f"{name_or_path}.scn"
    if res.is_file():
        return parse_scenario(res.read_text(), default_name=str(name_or_path))
    raise ScenarioError(f"no scenario file or built-in named {str(name_or_path)!r}")
