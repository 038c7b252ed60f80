import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as nps

from hasplan.geometry import (
    EulerAttitude,
    PointCloud,
    as_point3,
    batch_clearance,
    body_to_earth,
    segment_clearance,
    transform_point,
    wrap_angle,
)
from oracles import clearance_dense

angles = st.floats(-math.pi, math.pi, allow_nan=False)
coords = st.floats(-5, 5, allow_nan=False, allow_infinity=False)
point = nps.arrays(np.float64, 3, elements=coords)


def test_as_point3_rejects_bad_input():
    with pytest.raises(ValueError):
        as_point3([1, 2])
    with pytest.raises(ValueError):
        as_point3([1, np.nan, 0])
    np.testing.assert_array_equal(as_point3((1, 2, 3)), [1.0, 2.0, 3.0])


@given(st.floats(-50, 50, allow_nan=False))
def test_wrap_angle_range(a):
    w = wrap_angle(a)
    assert -math.pi < w <= math.pi
    assert math.isclose(math.cos(w), math.cos(a), abs_tol=1e-9)
    assert math.isclose(math.sin(w), math.sin(a), abs_tol=1e-9)


def test_attitude_validation():
    with pytest.raises(ValueError):
        EulerAttitude(0.0, math.inf, 0.0)
    assert EulerAttitude.yaw(3 * math.pi).psi == pytest.approx(math.pi)


def test_point_cloud_shape_and_frame():
    assert len(PointCloud()) == 0
    with pytest.raises(ValueError):
        PointCloud(np.zeros((4, 2)))
    with pytest.raises(ValueError):
        PointCloud(np.zeros((1, 3)), frame="camera")


def test_rotation_of_random_attitudes_is_proper():
    rng = np.random.default_rng(7)
    for phi, theta, psi in rng.uniform(-math.pi, math.pi, size=(100, 3)):
        R = body_to_earth(EulerAttitude(phi, theta, psi))
        np.testing.assert_allclose(R @ R.T, np.eye(3), atol=1e-12)
        assert np.linalg.det(R) == pytest.approx(1.0, abs=1e-12)


def test_printed_matrix_is_transpose_of_yaw_rotation():
    # the matrix as laid out maps body x to (0, -1, 0) at yaw pi/2;
    # its transpose is the conventional rotation and gives (0, 1, 0)
    R = body_to_earth(EulerAttitude.yaw(math.pi / 2))
    np.testing.assert_allclose(transform_point(R, [1, 0, 0], [0, 0, 0]), [0, -1, 0], atol=1e-12)
    np.testing.assert_allclose(transform_point(R.T, [1, 0, 0], [0, 0, 0]), [0, 1, 0], atol=1e-12)


def test_transform_point_translation_and_stack():
    R = body_to_earth(EulerAttitude.yaw(0.3))
    pts = np.array([[1.0, 2.0, 3.0], [0.0, 0.0, 0.0]])
    out = transform_point(R, pts, [1, 1, 1])
    np.testing.assert_allclose(out[1], [1, 1, 1])
    np.testing.assert_allclose(out[0], R @ pts[0] + 1)


@given(angles, angles, angles, point)
def test_rotation_preserves_norm(phi, theta, psi, p):
    R = body_to_earth(EulerAttitude(phi, theta, psi))
    assert np.linalg.norm(transform_point(R, p, np.zeros(3))) == pytest.approx(np.linalg.norm(p), abs=1e-9)


def test_clearance_foot_rule_examples():
    assert segment_clearance([0, 0, 0], [2, 0, 0], [[3, 1, 0]]) == math.inf
    cloud = [[1, 1, 0], [1, 0.5, 0], [5, 0, 0]]
    assert segment_clearance([0, 0, 0], [2, 0, 0], cloud) == pytest.approx(0.5)
    # the ordinary metric keeps the point past the end
    assert segment_clearance([0, 0, 0], [2, 0, 0], [[3, 1, 0]], foot_rule=False) == pytest.approx(math.sqrt(2))


def test_clearance_degenerate_and_empty():
    with pytest.raises(ValueError):
        segment_clearance([1, 1, 1], [1, 1, 1], [[0, 0, 0]])
    assert segment_clearance([0, 0, 0], [1, 0, 0], np.empty((0, 3))) == math.inf


def test_clearance_matches_dense_oracle():
    rng = np.random.default_rng(11)
    for _ in range(100):
        a, b = rng.uniform(-3, 3, (2, 3))
        pts = rng.uniform(-4, 4, (rng.integers(1, 8), 3))
        got = segment_clearance(a, b, pts)
        want = clearance_dense(a, b, pts)
        assert got == pytest.approx(want, abs=1e-6) or (got == want == math.inf)


@given(point, point, nps.arrays(np.float64, (6, 3), elements=coords))
def test_foot_rule_never_below_plain_metric(a, b, pts):
    if np.allclose(a, b):
        return
    assert segment_clearance(a, b, pts) >= segment_clearance(a, b, pts, foot_rule=False) - 1e-9


@given(point, nps.arrays(np.float64, (4, 3), elements=coords), nps.arrays(np.float64, (5, 3), elements=coords))
def test_batch_matches_single(p, ends, pts):
    if np.any(np.linalg.norm(ends - p, axis=1) < 1e-3):
        return
    got = batch_clearance(p, ends, pts)
    for k, e in enumerate(ends):
        want = segment_clearance(p, e, pts)
        if math.isinf(want):
            # boundary points may flip on rounding; the finite value is then ~endpoint distance
            continue
        assert got[k] == pytest.approx(want, abs=1e-6) or math.isinf(got[k])


def test_batch_empty_cloud():
    out = batch_clearance(np.zeros(3), np.ones((3, 3)), np.empty((0, 3)))
    assert np.all(np.isinf(out))
