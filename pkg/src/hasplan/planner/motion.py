"""Minimum-acceleration motion primitive toward a waypoint.

Solves ``min |a|^2 + eta * t`` over a constant acceleration ``a`` and duration
``t in (0, t_max]`` subject to ``|v + a t|_inf <= v_max``, ``|a|_inf <= a_max``
and ``|p + v t + a t^2 / 2 - w|_2 <= xi``.

For a fixed ``t`` the feasible accelerations are a ball (the endpoint
tolerance) intersected with a box (both limits), so the cheapest ``a`` has the
form ``clip(s * c, lo, hi)`` with ``c`` the ball center. That path is
piecewise linear in ``s``, so the smallest admissible ``s`` has a closed form on
each piece. The outer problem in ``t`` is a 1D search: a uniform scan followed
by golden-section refinement around the best sample.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

T_LO = 1e-3
INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
_SCAN = 160
# keep the returned primitive strictly inside the constraints despite rounding
_BALL_MARGIN = 1.0 - 1e-9
_BOX_MARGIN = 1.0 - 1e-12


class MotionInfeasible(RuntimeError):
    """No (a, t) satisfies the kinematic constraints for this waypoint."""


@dataclass(frozen=True)
class MotionPrimitive:
    a: NDArray[np.float64]
    t: float
    p0: NDArray[np.float64]
    v0: NDArray[np.float64]
    objective: float

    @property
    def v_next(self) -> NDArray[np.float64]:
        return self.v0 + self.a * self.t

    @property
    def p_next(self) -> NDArray[np.float64]:
        return self.p0 + self.v0 * self.t + 0.5 * self.a * self.t**2

    def position(self, tau: ArrayLike) -> NDArray[np.float64]:
        tau = np.asarray(tau, dtype=float)[..., None]
        return self.p0 + self.v0 * tau + 0.5 * self.a * tau**2

    def violations(self, w_p: ArrayLike, v_max: float, a_max: float, t_max: float, xi: float) -> list[str]:
        """Names of violated constraints (empty when feasible)."""
        bad = []
        if not 0 < self.t <= t_max:
            bad.append("t")
        if np.max(np.abs(self.a)) > a_max:
            bad.append("a_max")
        if np.max(np.abs(self.v_next)) > v_max:
            bad.append("v_max")
        if np.linalg.norm(self.p_next - np.asarray(w_p, dtype=float)) > xi:
            bad.append("xi")
        return bad


def min_accel(e: tuple, v: tuple, t: float, v_max: float, a_max: float, xi: float):
    """Cheapest acceleration at duration ``t``, or ``None`` if none is feasible.

    ``e`` is the displacement still to cover after coasting, ``w - p - v t``.
    """
    t2 = t * t
    c = [2.0 * ei / t2 for ei in e]
    r2 = (2.0 * xi / t2 * _BALL_MARGIN) ** 2
    vm = v_max * _BOX_MARGIN
    lo, hi = [], []
    for vi in v:
        l_i = max(-a_max, (-vm - vi) / t)
        h_i = min(a_max, (vm - vi) / t)
        if l_i > h_i:
            return None
        lo.append(l_i)
        hi.append(h_i)

    # a(s) = clip(s * c, lo, hi) and its distance to c shrinks as s goes 0 -> 1;
    # the optimum is the smallest s whose a(s) lies in the ball.
    cuts = {0.0, 1.0}
    for ci, li, hi_ in zip(c, lo, hi):
        if ci != 0.0:
            for b in (li / ci, hi_ / ci):
                if 0.0 < b < 1.0:
                    cuts.add(b)
    cuts = sorted(cuts)
    for s_a, s_b in zip(cuts, cuts[1:] or cuts):
        mid = 0.5 * (s_a + s_b)
        fixed = 0.0
        free = 0.0
        for ci, li, hi_ in zip(c, lo, hi):
            x = mid * ci
            if li <= x <= hi_ and ci != 0.0:
                free += ci * ci
            else:
                cl = min(max(x, li), hi_)
                fixed += (cl - ci) ** 2
        end_gap = fixed + (1.0 - s_b) ** 2 * free
        if end_gap > r2:
            continue
        start_gap = fixed + (1.0 - s_a) ** 2 * free
        if start_gap <= r2 or free == 0.0:
            s = s_a
        else:
            s = min(max(1.0 - math.sqrt((r2 - fixed) / free), s_a), s_b)
        return [min(max(s * ci, li), hi_) for ci, li, hi_ in zip(c, lo, hi)]
    return None


def _scan_costs(d: NDArray, v: NDArray, ts: NDArray, cfg) -> NDArray[np.float64]:
    """Vectorised :func:`_cost` over many durations (objective only, ``inf`` if infeasible)."""
    t = ts[:, None]
    c = 2.0 * (d - v * t) / t**2
    r2 = (2.0 * cfg.xi / ts**2 * _BALL_MARGIN) ** 2
    vm = cfg.v_max * _BOX_MARGIN
    lo = np.maximum(-cfg.a_max, (-vm - v) / t)
    hi = np.minimum(cfg.a_max, (vm - v) / t)
    box_ok = np.all(lo <= hi, axis=1)

    nz = c != 0.0
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        b = np.concatenate([np.where(nz, lo / c, 1.0), np.where(nz, hi / c, 1.0)], axis=1)
    b = np.where((b > 0.0) & (b < 1.0), b, 1.0)
    n = len(ts)
    cuts = np.sort(np.concatenate([np.zeros((n, 1)), b, np.ones((n, 1))], axis=1), axis=1)
    s_a, s_b = cuts[:, :-1], cuts[:, 1:]
    mid = 0.5 * (s_a + s_b)

    x = mid[:, :, None] * c[:, None, :]
    lo3, hi3, c3 = lo[:, None, :], hi[:, None, :], c[:, None, :]
    free_ax = (x >= lo3) & (x <= hi3) & nz[:, None, :]
    fixed = np.where(free_ax, 0.0, (np.clip(x, lo3, hi3) - c3) ** 2).sum(axis=2)
    free = np.where(free_ax, c3 * c3, 0.0).sum(axis=2)
    ok = fixed + (1.0 - s_b) ** 2 * free <= r2[:, None]
    # zero-length pieces from padded cuts at 1.0 behave like the scalar path's
    # final (1, 1) piece, so the first admissible piece matches
    feasible = box_ok & ok.any(axis=1)
    j = np.argmax(ok, axis=1)
    rows = np.arange(n)
    sa, sb = s_a[rows, j], s_b[rows, j]
    fx, fr = fixed[rows, j], free[rows, j]
    start_ok = fx + (1.0 - sa) ** 2 * fr <= r2
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        s_int = np.clip(1.0 - np.sqrt(np.maximum(r2 - fx, 0.0) / fr), sa, sb)
    s = np.where(start_ok | (fr == 0.0), sa, s_int)
    a = np.clip(s[:, None] * c, lo, hi)
    cost = np.einsum("ij,ij->i", a, a) + cfg.eta * ts
    return np.where(feasible, cost, np.inf)


def _cost(d, v, t, cfg):
    e = tuple(di - vi * t for di, vi in zip(d, v))
    a = min_accel(e, v, t, cfg.v_max, cfg.a_max, cfg.xi)
    if a is None:
        return math.inf, None
    return sum(ai * ai for ai in a) + cfg.eta * t, a


def solve_motion(p_n: ArrayLike, v_n: ArrayLike, w_p: ArrayLike, config, v_max: float | None = None) -> MotionPrimitive:
    """Best constant-acceleration primitive from ``(p_n, v_n)`` to within ``xi`` of ``w_p``.

    ``v_max`` overrides ``config.v_max`` (used when the speed limit is shrunk).
    Raises :class:`MotionInfeasible` when no duration admits a feasible acceleration.
    """
    p = np.asarray(p_n, dtype=float)
    v = np.asarray(v_n, dtype=float)
    d = tuple((np.asarray(w_p, dtype=float) - p).tolist())
    vt = tuple(v.tolist())
    cfg = _Limits(config, v_max)

    ts = np.linspace(T_LO, config.t_max, _SCAN)
    costs = _scan_costs(np.array(d), v, ts, cfg)
    k = int(np.argmin(costs))
    ts = ts.tolist()
    costs = costs.tolist()
    if not math.isfinite(costs[k]):
        raise MotionInfeasible(f"no feasible primitive toward {np.round(np.add(p, d), 4)}")

    best_t, best_f = ts[k], costs[k]
    lo = ts[max(k - 1, 0)]
    hi = ts[min(k + 1, len(ts) - 1)]
    x1 = hi - INV_PHI * (hi - lo)
    x2 = lo + INV_PHI * (hi - lo)
    f1 = _cost(d, vt, x1, cfg)[0]
    f2 = _cost(d, vt, x2, cfg)[0]
    while hi - lo > 1e-7:
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - INV_PHI * (hi - lo)
            f1 = _cost(d, vt, x1, cfg)[0]
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + INV_PHI * (hi - lo)
            f2 = _cost(d, vt, x2, cfg)[0]
    for t_c, f_c in ((x1, f1), (x2, f2)):
        if f_c < best_f:
            best_t, best_f = t_c, f_c

    f, a = _cost(d, vt, best_t, cfg)
    return MotionPrimitive(a=np.array(a), t=float(best_t), p0=p.copy(), v0=v.copy(), objective=f)


class _Limits:
    __slots__ = ("v_max", "a_max", "xi", "eta")

    def __init__(self, config, v_max):
        self.v_max = config.v_max if v_max is None else v_max
        self.a_max = config.a_max
        self.xi = config.xi
        self.eta = config.eta


def braking_primitive(p_n: ArrayLike, v_n: ArrayLike, config) -> MotionPrimitive:
    """Hardest admissible stop over ``t_max``; always satisfies the box limits."""
    p = np.asarray(p_n, dtype=float)
    v = np.asarray(v_n, dtype=float)
    t = config.t_max
    a = np.clip(-v / t, -config.a_max, config.a_max)
    return MotionPrimitive(a=a, t=t, p0=p.copy(), v0=v.copy(), objective=float(a @ a) + config.eta * t)
