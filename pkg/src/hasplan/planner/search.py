"""Angular waypoint search on the cropped obstacle cloud."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from ..geometry import as_point3, batch_clearance, wrap_angle


class SearchAngles(NamedTuple):
    alpha: float  # azimuth, (-pi, pi]
    beta: float  # elevation, [-pi/2, pi/2]


def goal_angles(p_n: ArrayLike, goal: ArrayLike) -> SearchAngles:
    p = as_point3(p_n)
    g = as_point3(goal)
    dx, dy, dz = (g - p).tolist()
    if dx == 0.0 and dy == 0.0 and dz == 0.0:
        raise ValueError("goal coincides with the current position")
    return SearchAngles(wrap_angle(math.atan2(dy, dx)), math.atan2(dz, math.hypot(dx, dy)))


def angles_match(a: SearchAngles, b: SearchAngles, tol: float) -> bool:
    return abs(wrap_angle(a.alpha - b.alpha)) <= tol and abs(a.beta - b.beta) <= tol


def heuristic_init(
    a_g: SearchAngles,
    a_last: SearchAngles,
    match_history: Sequence[bool],
    n_obs: int,
    n_avr: float,
) -> SearchAngles:
    """Start the search from the previous direction when obstacles are denser than usual.

    ``lam`` is the share of the last three steps whose search settled on the
    previous direction; ``a_last`` is used iff ``lam * n_obs > n_avr``.
    """
    if n_avr < 0:
        raise ValueError("n_avr must be non-negative")
    lam = sum(bool(m) for m in list(match_history)[-3:]) / 3.0
    return a_last if lam * n_obs > n_avr else a_g


def candidate_endpoints(a_g0: SearchAngles, alpha_d: float, l_d: float, p_n: ArrayLike) -> NDArray[np.float64]:
    """The four ray endpoints around ``a_g0`` at offset ``alpha_d``, shape ``(4, 3)``.

    Rows 0/1 swing the azimuth by +/- ``alpha_d``, rows 2/3 the elevation.
    Directions are ``(cos a, sin a, sin b)`` as is, so elevated rays run
    slightly longer than ``l_d``.
    """
    a0, b0 = a_g0
    angles = [(a0 + alpha_d, b0), (a0 - alpha_d, b0), (a0, b0 + alpha_d), (a0, b0 - alpha_d)]
    dirs = np.array([[math.cos(a), math.sin(a), math.sin(b)] for a, b in angles])
    return l_d * dirs + np.asarray(p_n, dtype=float)


@dataclass(frozen=True)
class Candidate:
    level: int  # cone expansion k, alpha_d = k * delta_alpha
    direction: int  # 1..4
    angles: SearchAngles
    end: NDArray[np.float64]


def enumerate_candidates(a_g0: SearchAngles, p_n: ArrayLike, l_d: float, config,
                         goal_alpha: float | None = None) -> list[Candidate]:
    """Candidates in search order: cone level outer, direction 1..4 inner.

    Level 0 yields a single ray. Rays beyond the elevation limit, with an
    endpoint outside the altitude band, or (given ``goal_alpha``) turned more
    than ``heading_limit_deg`` away from the goal azimuth are skipped.
    """
    p = np.asarray(p_n, dtype=float)
    heading_limit = math.radians(config.heading_limit_deg)
    out = []
    for k in range(config.m_max_iters + 1):
        alpha_d = k * config.delta_alpha
        ends = candidate_endpoints(a_g0, alpha_d, l_d, p)
        a0, b0 = a_g0
        angs = [(a0 + alpha_d, b0), (a0 - alpha_d, b0), (a0, b0 + alpha_d), (a0, b0 - alpha_d)]
        for i in range(1 if k == 0 else 4):
            a, b = angs[i]
            if abs(b) > config.beta_limit:
                continue
            if not config.z_min <= ends[i, 2] <= config.z_max:
                continue
            if goal_alpha is not None and abs(wrap_angle(a - goal_alpha)) > heading_limit:
                continue
            out.append(Candidate(k, i + 1, SearchAngles(wrap_angle(a), b), ends[i]))
    return out


@dataclass
class SearchResult:
    waypoint: NDArray[np.float64] | None
    chosen: Candidate | None
    checked: int  # candidates examined up to and including the chosen one
    alternatives: list[Candidate] = field(default_factory=list)
    l_d: float = 0.0
    levels: int = 0  # cone levels visited, counting every level on a miss

    @property
    def found(self) -> bool:
        return self.waypoint is not None

    @property
    def iterations(self) -> int:
        """Cone levels visited (1 = accepted straight on the initial direction).

        A search that finds nothing visited all of its levels.
        """
        if self.chosen is not None:
            return self.chosen.level + 1
        return self.levels


def has_search(
    p_n: ArrayLike,
    pcl5: ArrayLike,
    a_g0: SearchAngles,
    config,
    *,
    l_d: float | None = None,
    skip: Iterable[SearchAngles] = (),
    goal_alpha: float | None = None,
) -> SearchResult:
    """First candidate ray whose clearance to ``pcl5`` exceeds ``r_safe``.

    The waypoint sits at fraction ``mu`` along that ray. Feasible rays later in
    the order are kept as ``alternatives``. Rays matching an entry of ``skip``
    are passed over. ``goal_alpha`` enables the heading limit.
    """
    p = np.asarray(p_n, dtype=float)
    l_d = config.l_d if l_d is None else l_d
    if l_d <= 0:
        raise ValueError("l_d must be positive")
    skip = list(skip)
    cands = [c for c in enumerate_candidates(a_g0, p, l_d, config, goal_alpha)
             if not any(angles_match(c.angles, s, 1e-9) for s in skip)]
    if not cands:
        return SearchResult(None, None, 0, [], l_d, config.m_max_iters + 1)
    pts = np.asarray(pcl5, dtype=float).reshape(-1, 3)
    clear = batch_clearance(p, np.array([c.end for c in cands]), pts) > config.r_safe
    hits = np.flatnonzero(clear)
    if len(hits) == 0:
        return SearchResult(None, None, len(cands), [], l_d, config.m_max_iters + 1)
    j = int(hits[0])
    chosen = cands[j]
    w_p = p + config.mu * (chosen.end - p)
    return SearchResult(w_p, chosen, j + 1, [cands[i] for i in hits[1:]], l_d, chosen.level + 1)
