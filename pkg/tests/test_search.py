import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hasplan.geometry import segment_clearance
from hasplan.planner import PlannerConfig, candidate_endpoints, enumerate_candidates, goal_angles, has_search, heuristic_init
from hasplan.planner.search import SearchAngles, angles_match
from oracles import search_oracle

CFG = PlannerConfig()
A0 = SearchAngles(0.0, 0.0)


def test_goal_angles():
    a = goal_angles([0, 0, 0], [1, 1, math.sqrt(2)])
    assert a.alpha == pytest.approx(math.pi / 4)
    assert a.beta == pytest.approx(math.pi / 4)
    with pytest.raises(ValueError):
        goal_angles([1, 2, 3], [1, 2, 3])


def test_heuristic_init_choice():
    last = SearchAngles(0.5, 0.0)
    assert heuristic_init(A0, last, [True, True, False], 30, 15.0) == last  # 20 > 15
    assert heuristic_init(A0, last, [True, False, False], 30, 15.0) == A0  # 10 <= 15
    assert heuristic_init(A0, last, [], 100, 0.0) == A0
    with pytest.raises(ValueError):
        heuristic_init(A0, last, [], 1, -1.0)


@given(st.lists(st.booleans(), max_size=6), st.integers(0, 500), st.floats(0, 500))
def test_heuristic_init_rule(history, n_obs, n_avr):
    last = SearchAngles(1.0, 0.2)
    lam = sum(history[-3:]) / 3
    expect = last if lam * n_obs > n_avr else A0
    assert heuristic_init(A0, last, history, n_obs, n_avr) == expect


def test_candidate_endpoints_values():
    ends = candidate_endpoints(A0, math.radians(10), 3.0, [0, 0, 0])
    np.testing.assert_allclose(ends[0], [2.954, 0.521, 0.0], atol=1e-3)
    np.testing.assert_allclose(ends[1], [2.954, -0.521, 0.0], atol=1e-3)
    np.testing.assert_allclose(ends[2], [3.0, 0.0, 0.521], atol=1e-3)
    np.testing.assert_allclose(ends[3], [3.0, 0.0, -0.521], atol=1e-3)


def test_candidate_order_is_cone_expanding():
    cands = enumerate_candidates(A0, [0, 0, 2.0], 3.0, CFG)
    levels = [c.level for c in cands]
    assert levels == sorted(levels)
    assert cands[0].level == 0 and cands[1].level == 1
    assert [c.direction for c in cands[1:5]] == [1, 2, 3, 4]
    assert all(abs(c.angles.beta) <= CFG.beta_limit + 1e-12 for c in cands)


def test_candidates_respect_altitude_and_heading():
    cands = enumerate_candidates(A0, [0, 0, 0], 3.0, CFG, goal_alpha=0.0)
    assert all(c.end[2] >= CFG.z_min for c in cands)
    assert all(abs(c.angles.alpha) <= math.radians(CFG.heading_limit_deg) + 1e-12 for c in cands)


def test_clear_path_takes_initial_direction():
    res = has_search([0, 0, 1], np.empty((0, 3)), A0, CFG)
    assert res.found and res.iterations == 1 and res.checked == 1
    np.testing.assert_allclose(res.waypoint, [0.3, 0, 1])


def test_single_point_on_ray_deflects_to_forty_degrees():
    # (1.5, 0, 0) needs 1.5 sin(k * 10 deg) > 0.8, first met at k = 4 in azimuth
    res = has_search([0, 0, 0], [[1.5, 0, 0]], A0, CFG)
    assert res.chosen.level == 4 and res.chosen.direction == 1
    assert res.iterations == 5
    want = 0.3 * np.array([math.cos(math.radians(40)), math.sin(math.radians(40)), 0.0])
    np.testing.assert_allclose(res.waypoint, want, atol=1e-12)
    assert search_oracle([0, 0, 0], [[1.5, 0, 0]], 0.0, 0.0, CFG)[1:3] == (4, 1)


def test_skip_and_not_found():
    first = has_search([0, 0, 1], np.empty((0, 3)), A0, CFG)
    res = has_search([0, 0, 1], np.empty((0, 3)), A0, CFG, skip=[first.chosen.angles])
    assert res.chosen.level == 1
    # a shell of points around the drone blocks every ray
    u = np.random.default_rng(0).normal(size=(4000, 3))
    shell = 1.0 * u / np.linalg.norm(u, axis=1, keepdims=True) + [0, 0, 2]
    blocked = has_search([0, 0, 2], shell, A0, CFG)
    assert not blocked.found and blocked.waypoint is None
    assert blocked.iterations == CFG.m_max_iters + 1
    with pytest.raises(ValueError):
        has_search([0, 0, 0], shell, A0, CFG, l_d=0.0)


def random_scene(rng):
    p_n = np.array([0.0, 0.0, rng.uniform(0.5, 3.5)])
    a0 = SearchAngles(rng.uniform(-math.pi, math.pi), rng.uniform(-0.3, 0.3))
    n = rng.integers(0, 60)
    pts = p_n + rng.uniform(-3, 3, (n, 3))
    goal_alpha = a0.alpha if rng.random() < 0.5 else None
    return p_n, pts, a0, goal_alpha


def test_search_matches_exhaustive_enumeration():
    rng = np.random.default_rng(2024)
    for _ in range(60):
        p_n, pts, a0, ga = random_scene(rng)
        res = has_search(p_n, pts, a0, CFG, goal_alpha=ga)
        ref = search_oracle(p_n, pts, a0.alpha, a0.beta, CFG, goal_alpha=ga)
        if ref is None:
            assert not res.found
            continue
        idx, level, direction, w_p = ref
        assert (res.chosen.level, res.chosen.direction, res.checked) == (level, direction, idx + 1)
        np.testing.assert_allclose(res.waypoint, w_p, atol=1e-12)


@given(st.floats(-math.pi, math.pi), st.floats(-0.5, 0.5), st.integers(0, 10_000))
def test_chosen_ray_is_clear_and_earlier_rays_are_not(alpha, beta, seed):
    rng = np.random.default_rng(seed)
    p_n = np.array([0.0, 0.0, 2.0])
    pts = p_n + rng.uniform(-3, 3, (30, 3))
    a0 = SearchAngles(alpha, beta)
    res = has_search(p_n, pts, a0, CFG)
    cands = enumerate_candidates(a0, p_n, CFG.l_d, CFG)
    clear = [segment_clearance(p_n, c.end, pts) > CFG.r_safe for c in cands]
    if res.found:
        assert clear[res.checked - 1]
        assert not any(clear[: res.checked - 1])
    else:
        assert not any(clear)


def test_angles_match_wraps():
    assert angles_match(SearchAngles(math.pi - 0.01, 0), SearchAngles(-math.pi + 0.01, 0), 0.05)
    assert not angles_match(SearchAngles(0, 0), SearchAngles(0, 0.2), 0.1)
