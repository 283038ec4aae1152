"""Compiled and numpy kernels must agree."""
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from patternaug import _kernels

needs_compiled = pytest.mark.skipif(_kernels.compiled is None, reason="extension not built")

box_st = st.tuples(
    st.floats(-30, 30), st.floats(-30, 30), st.floats(-3, 3),
    st.floats(0.2, 6), st.floats(0.2, 6), st.floats(0.2, 3), st.floats(-4, 4),
)


def test_backend_selected():
    assert _kernels.BACKEND_NAME in ("cython", "numpy")


@needs_compiled
def test_spherical_angles_agree(rng):
    xyz = rng.uniform(-80, 80, size=(5000, 3))
    xyz[:5] = [[0, 0, 0], [0, 0, 3], [-1, 0, 0], [-1, -0.0, 0], [0, 0, -2]]
    for a, b in zip(_kernels.fallback.spherical_angles(xyz), _kernels.compiled.spherical_angles(xyz)):
        np.testing.assert_allclose(a, b, rtol=0, atol=1e-15)


@needs_compiled
def test_slice_indices_agree(rng):
    xyz = rng.uniform(-80, 80, size=(20000, 3))
    args = (-math.pi, 2 * math.pi / 512, 512, math.radians(-24.8), math.radians(26.8) / 64, 64)
    for a, b in zip(_kernels.fallback.slice_indices(xyz, *args), _kernels.compiled.slice_indices(xyz, *args)):
        np.testing.assert_array_equal(a, b)


@needs_compiled
@settings(max_examples=60, deadline=None)
@given(box=box_st)
def test_box_mask_and_rays_agree(box):
    rng = np.random.default_rng(0)
    xyz = rng.uniform(-35, 35, size=(2000, 3))
    xyz[:, 2] = rng.uniform(-4, 4, 2000)
    box = np.array(box)
    for column in (False, True):
        np.testing.assert_array_equal(_kernels.fallback.box_mask(xyz, box, column),
                                      _kernels.compiled.box_mask(xyz, box, column))
    dirs = rng.normal(size=(2000, 3))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    np.testing.assert_allclose(_kernels.fallback.ray_box(dirs, box), _kernels.compiled.ray_box(dirs, box),
                               rtol=1e-12, atol=1e-12)


@needs_compiled
@settings(max_examples=200, deadline=None)
@given(a=box_st, b=box_st)
def test_overlap_agree(a, b):
    a, b = np.array(a), np.array(b)
    fa = _kernels.fallback.bev_overlap_matrix(a, b)[0, 0]
    ca = _kernels.compiled.bev_overlap_matrix(a, b)[0, 0]
    assert ca == pytest.approx(fa, abs=1e-9)


def test_ray_box_axis_parallel(backend):
    # rays with zero components in the slab test
    box = np.array([10.0, 0.0, 0.0, 2.0, 2.0, 2.0, 0.0])
    dirs = np.array([[1.0, 0, 0], [0, 1.0, 0], [0, 0, 1.0], [-1.0, 0, 0]])
    t = backend.ray_box(dirs, box)
    assert t[0] == pytest.approx(9.0)
    assert np.isinf(t[1:]).all()


def test_convex_overlap_disjoint_and_nested(backend):
    sq = np.array([[0, 0], [2, 0], [2, 2], [0, 2]], dtype=float)
    inner = np.array([[0.5, 0.5], [1, 0.5], [1, 1], [0.5, 1]], dtype=float)
    far = sq + 5
    assert backend.convex_overlap_area(sq, inner) == pytest.approx(0.25)
    assert backend.convex_overlap_area(sq, far) == 0.0
