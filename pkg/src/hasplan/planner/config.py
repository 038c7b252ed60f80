"""Planner parameters and the key=value config file format."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

from ..cloudpipe import FilterParams


class ConfigError(ValueError):
    """Malformed or out-of-range configuration."""


class SafetyRejected(ConfigError):
    """The parameter set violates the d_max < r_safe bound."""


@dataclass(frozen=True)
class PlannerConfig:
    delta_alpha_deg: float = 10.0
    m_max_iters: int = 9
    l_d: float = 3.0
    mu: float = 0.1
    r_safe: float = 0.8
    d_use: float = 3.0
    v_max: float = 3.0
    a_max: float = 4.0
    t_max: float = 0.5
    xi: float = 0.01
    eta: float = 1.2
    goal_switch_radius: float = 0.3
    backup_ld_factor: float = 0.5
    backup_vmax_factor: float = 0.5
    restore_after: int = 3
    beta_limit_deg: float = 80.0
    heading_limit_deg: float = 90.0
    z_min: float = 0.0
    z_max: float = 4.0
    # point cloud filter
    voxel_size: float = 0.2
    max_range: float = 8.0
    outlier_radius: float = 0.4
    outlier_min_neighbors: int = 3
    # ablations: heuristic=False fixes the search start to the goal direction,
    # sparsify=False checks collisions against every map point
    heuristic: bool = True
    sparsify: bool = True

    @property
    def delta_alpha(self) -> float:
        return math.radians(self.delta_alpha_deg)

    @property
    def beta_limit(self) -> float:
        return math.radians(self.beta_limit_deg)

    @property
    def step_length(self) -> float:
        return self.mu * self.l_d

    def filter_params(self) -> FilterParams:
        return FilterParams(
            max_range=self.max_range,
            voxel_size=self.voxel_size,
            outlier_min_neighbors=self.outlier_min_neighbors,
            outlier_radius=self.outlier_radius,
            r_safe=self.r_safe,
            d_use=self.d_use,
        )

    def validate(self) -> "PlannerConfig":
        """Check ranges and the d_max safety bound; return ``self`` for chaining."""
        positive = ("delta_alpha_deg", "l_d", "mu", "r_safe", "d_use", "v_max", "a_max",
                    "t_max", "xi", "eta", "goal_switch_radius", "backup_ld_factor",
                    "backup_vmax_factor", "voxel_size", "max_range", "outlier_radius")
        for name in positive:
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ConfigError(f"{name} must be positive and finite, got {v}")
        if self.m_max_iters < 0 or self.restore_after < 1 or self.outlier_min_neighbors < 0:
            raise ConfigError("m_max_iters >= 0, restore_after >= 1, outlier_min_neighbors >= 0")
        if not self.mu <= 1:
            raise ConfigError(f"mu must lie in (0, 1], got {self.mu}")
        if not self.xi < self.r_safe:
            raise ConfigError("xi must be smaller than r_safe")
        if self.backup_ld_factor > 1 or self.backup_vmax_factor > 1:
            raise ConfigError("backup shrink factors must be <= 1")
        if not 0 < self.beta_limit_deg < 90:
            raise ConfigError("beta_limit_deg must lie in (0, 90)")
        if not 0 < self.heading_limit_deg <= 180:
            raise ConfigError("heading_limit_deg must lie in (0, 180]")
        if not self.z_min < self.z_max:
            raise ConfigError("z_min must be below z_max")
        if self.d_use > self.max_range:
            raise ConfigError("d_use must not exceed max_range")
        if 2.0 * self.step_length / self.a_max > self.t_max**2:
            raise SafetyRejected(
                f"step length {self.step_length:g} m cannot be covered within t_max at a_max"
            )
        from .safety import d_max_bound

        d_max = d_max_bound(self)
        if not d_max < self.r_safe:
            raise SafetyRejected(
                f"d_max safety bound violated: d_max = 2*v_max*(t_max - sqrt(2*mu*l_d/a_max)) "
                f"= {d_max:.4f} m is not below r_safe = {self.r_safe:g} m"
            )
        return self

    def with_overrides(self, overrides: dict[str, str]) -> "PlannerConfig":
        return replace(self, **_coerce(overrides))

    def to_text(self) -> str:
        return "".join(f"{k}={_fmt(v)}\n" for k, v in asdict(self).items())


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    return repr(v) if isinstance(v, float) else str(v)


def _coerce(raw: dict[str, str]) -> dict:
    types = {f.name: f.type for f in fields(PlannerConfig)}
    out = {}
    for key, text in raw.items():
        if key not in types:
            raise ConfigError(f"unknown config key {key!r}")
        kind = types[key]
        text = text.strip()
        try:
            if kind == "bool":
                low = text.lower()
                if low not in ("true", "false", "1", "0", "yes", "no"):
                    raise ValueError(text)
                out[key] = low in ("true", "1", "yes")
            elif kind == "int":
                out[key] = int(text)
            else:
                out[key] = float(text)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {text!r}") from exc
    return out


def parse_config_text(text: str, base: PlannerConfig | None = None) -> PlannerConfig:
    """Parse ``key=value`` lines (``#`` comments allowed) over ``base`` defaults."""
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        s = line.split("#", 1)[0].strip()
        if not s:
            continue
        if "=" not in s:
            raise ConfigError(f"line {lineno}: expected key=value, got {line!r}")
        k, v = s.split("=", 1)
        raw[k.strip()] = v
    return (base or PlannerConfig()).with_overrides(raw)


def load_config(path: str | Path) -> PlannerConfig:
    return parse_config_text(Path(path).read_text())
