"""Worst-case deviation bound of a constant-acceleration step from its checked segment."""

from __future__ import annotations

import math


def d_max_bound(config, step_length: float | None = None, speed: float | None = None) -> float:
    """``2 * |v| * (t_max - sqrt(2 * L / a_max))``, clamped at zero.

    ``L`` defaults to the waypoint step ``mu * l_d`` and ``|v|`` to ``v_max``
    (the worst case).
    """
    L = config.step_length if step_length is None else step_length
    v = config.v_max if speed is None else speed
    if L < 0 or v < 0:
        raise ValueError("step length and speed must be non-negative")
    return max(0.0, 2.0 * v * (config.t_max - math.sqrt(2.0 * L / config.a_max)))
