import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from patternaug.errors import DegenerateBox, MalformedCloud
from patternaug.geometry import (Box3D, as_cloud, bev_overlap_area, bev_overlap_matrix, from_spherical, iou3d,
                                 iou3d_matrix, normalize_angle, points_in_box, to_spherical)

from oracles import footprint

CUBE = Box3D(0, 0, 0, 1, 1, 1, 0)




box_st = st.builds(
    Box3D, st.floats(-10, 10), st.floats(-10, 10), st.floats(-2, 2),
    st.floats(0.1, 6), st.floats(0.1, 6), st.floats(0.1, 3), st.floats(-math.pi, math.pi),
)


@pytest.mark.parametrize("p, expected", [
    ((1, 0, 0), (1, 1, 0, 0)),
    ((0, 0, 1), (1, 0, 0, math.pi / 2)),
    ((1, 1, math.sqrt(2)), (2, math.sqrt(2), math.pi / 4, math.pi / 4)),
    ((0, 0, 0), (0, 0, 0, 0)),
    ((-1, 0, 0), (1, 1, -math.pi, 0)),
])
def test_to_spherical_examples(p, expected):
    np.testing.assert_allclose(to_spherical(np.array(p, dtype=float)), expected, atol=1e-15)


def test_from_spherical_examples():
    np.testing.assert_allclose(from_spherical([1, 0, 0]), [1, 0, 0], atol=1e-15)
    np.testing.assert_allclose(from_spherical([2, math.pi / 2, 0]), [0, 2, 0], atol=1e-15)


def test_round_trip_cube(rng):
    p = rng.uniform(-85, 85, size=(10_000, 3))
    back = from_spherical(to_spherical(p))
    assert np.abs(back - p).max() < 1e-9


def test_spherical_invariants(rng):
    s = to_spherical(rng.normal(scale=30, size=(5000, 3)))
    r, d, theta, phi = s.T
    assert (r >= d).all() and (d >= 0).all()
    assert ((theta >= -math.pi) & (theta < math.pi)).all()
    assert (np.abs(phi) <= math.pi / 2).all()
    np.testing.assert_allclose(r * np.cos(phi), d, rtol=1e-9)


def test_azimuth_matches_arcsin_in_front(rng):
    p = rng.uniform([0.1, -50, -3], [50, 50, 3], size=(1000, 3))
    s = to_spherical(p)
    np.testing.assert_allclose(s[:, 2], np.arcsin(p[:, 1] / s[:, 1]), atol=1e-12)


def test_normalize_angle():
    assert normalize_angle(math.pi) == -math.pi
    assert normalize_angle(3 * math.pi / 2) == pytest.approx(-math.pi / 2)
    a = np.array([-math.pi, 0.3, 7.0, -7.0])
    once = normalize_angle(a)
    np.testing.assert_array_equal(normalize_angle(once), once)


def test_box_validation():
    with pytest.raises(DegenerateBox):
        Box3D(0, 0, 0, 0, 1, 1, 0)
    with pytest.raises(DegenerateBox):
        Box3D(0, 0, math.nan, 1, 1, 1, 0)
    assert Box3D(0, 0, 0, 1, 1, 1, math.pi).yaw == -math.pi


def test_as_cloud_rejects_nan():
    with pytest.raises(MalformedCloud):
        as_cloud([[0, 0, math.inf, 0]])
    assert as_cloud([]).shape == (0, 4)
    assert as_cloud([[1, 2, 3]]).shape == (1, 4)


def test_points_in_box_examples():
    pts = np.array([[0, 0, 0], [0.51, 0, 0], [0.5, 0.5, 0.5]], dtype=float)
    assert list(points_in_box(pts, CUBE)) == [0, 2]
    rot = Box3D(0, 0, 0, 1, 1, 1, math.pi / 4)
    assert list(points_in_box(np.array([[0.6, 0.6, 0], [0.6, 0, 0]]), rot)) == [1]


def test_points_in_box_rigid_invariance(rng):
    box = Box3D(3, -2, 0.4, 4, 2, 1.5, 0.7)
    pts = rng.uniform(-3, 7, size=(3000, 3))
    before = points_in_box(pts, box)
    a, t = 1.1, np.array([5.0, -4.0, 0.3])
    rot = np.array([[math.cos(a), -math.sin(a), 0], [math.sin(a), math.cos(a), 0], [0, 0, 1]])
    moved = pts @ rot.T + t
    c = rot @ np.array([box.cx, box.cy, box.cz]) + t
    after = points_in_box(moved, Box3D(*c, box.l, box.w, box.h, box.yaw + a))
    assert set(before) == set(after)


@pytest.mark.parametrize("b, area", [
    (Box3D(0, 0, 0, 2, 2, 1, 0), 4.0),
    (Box3D(2, 0, 0, 1, 1, 1, 0), 0.0),
    (Box3D(0.5, 0, 0, 1, 1, 1, 0), 0.5),
])
def test_bev_overlap_examples(b, area):
    a = Box3D(0, 0, 0, b.l, b.w, 1, 0) if area == 4.0 else CUBE
    assert bev_overlap_area(a, b) == pytest.approx(area, abs=1e-12)


@settings(max_examples=300, deadline=None)
@given(a=box_st, b=box_st)
def test_bev_overlap_matches_shapely(a, b):
    ref = footprint(a).intersection(footprint(b)).area
    got = bev_overlap_area(a, b)
    assert got == pytest.approx(ref, abs=1e-7)
    assert bev_overlap_area(b, a) == pytest.approx(got, abs=1e-9)


def test_touching_boxes_have_zero_overlap():
    assert bev_overlap_area(CUBE, Box3D(1, 0, 0, 1, 1, 1, 0)) == 0.0
    assert bev_overlap_area(CUBE, Box3D(1, 1, 0, 1, 1, 1, 0)) == 0.0


def test_iou_examples():
    assert iou3d(CUBE, CUBE) == pytest.approx(1.0, abs=1e-9)
    assert iou3d(CUBE, Box3D(0.5, 0, 0, 1, 1, 1, 0)) == pytest.approx(1 / 3, abs=1e-9)
    assert iou3d(CUBE, Box3D(0, 0, 0, 1, 1, 1, math.pi / 2)) == pytest.approx(1.0, abs=1e-9)


def test_iou_vertical_only():
    assert iou3d(CUBE, Box3D(0, 0, 0.5, 1, 1, 1, 0)) == pytest.approx(1 / 3, abs=1e-12)
    assert iou3d(CUBE, Box3D(0, 0, 2, 1, 1, 1, 0)) == 0.0


@settings(max_examples=200, deadline=None)
@given(a=box_st, b=box_st)
def test_iou_symmetric_bounded(a, b):
    ab, ba = iou3d(a, b), iou3d(b, a)
    assert 0.0 <= ab <= 1.0
    assert ab == pytest.approx(ba, abs=1e-12)


def test_matrix_forms_agree(rng):
    boxes = [Box3D(*rng.uniform(-3, 3, 3), *rng.uniform(0.5, 3, 3), rng.uniform(-3, 3)) for _ in range(12)]
    m = iou3d_matrix(boxes, boxes)
    o = bev_overlap_matrix(boxes, boxes)
    for i, a in enumerate(boxes):
        for j, b in enumerate(boxes):
            assert m[i, j] == pytest.approx(iou3d(a, b), abs=1e-12)
            assert o[i, j] == pytest.approx(bev_overlap_area(a, b), abs=1e-12)


def test_corners_and_distance():
    b = Box3D(6, 8, 1, 4, 2, 2, 0)
    assert b.distance == 10.0
    assert b.bottom == 0.0
    c = b.corners()
    assert c.shape == (8, 3)
    np.testing.assert_allclose(c.min(axis=0), [4, 7, 0])
    np.testing.assert_allclose(c.max(axis=0), [8, 9, 2])
