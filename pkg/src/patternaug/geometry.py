"""Point clouds, spherical coordinates and oriented boxes.

A point cloud is an ``(N, 4)`` float64 array of ``x, y, z, intensity`` in the
sensor frame (x forward, y left, z up). Boxes are :class:`Box3D` or ``(M, 7)``
arrays ``cx, cy, cz, l, w, h, yaw`` with ``(cx, cy, cz)`` the volumetric
center and ``l`` measured along the heading.
"""
from dataclasses import dataclass, astuple
import math

import numpy as np

from . import _kernels
from .errors import DegenerateBox, MalformedCloud

# overlaps below this many square meters are clipping round-off
AREA_EPS = 1e-12


def normalize_angle(a):
    """Wrap an angle (scalar or array) into [-pi, pi)."""
    a = np.asarray(a, dtype=np.float64)
    # in-range values pass through untouched so normalization is idempotent
    out = np.where((a >= -math.pi) & (a < math.pi), a, np.mod(a + math.pi, 2.0 * math.pi) - math.pi)
    return float(out) if np.ndim(out) == 0 else out


def as_cloud(points):
    """Validate and copy ``points`` into an ``(N, 4)`` float64 cloud."""
    arr = np.array(points, dtype=np.float64)
    if arr.size == 0:
        return np.zeros((0, 4))
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] not in (3, 4):
        raise MalformedCloud(f"expected (N, 3) or (N, 4) points, got shape {arr.shape}")
    if arr.shape[1] == 3:
        arr = np.hstack([arr, np.zeros((len(arr), 1))])
    if not np.isfinite(arr).all():
        raise MalformedCloud("non-finite coordinate in point cloud")
    return arr


@dataclass(frozen=True)
class Box3D:
    cx: float
    cy: float
    cz: float
    l: float
    w: float
    h: float
    yaw: float

    def __post_init__(self):
        vals = astuple(self)
        if not all(math.isfinite(v) for v in vals):
            raise DegenerateBox(f"non-finite box field in {vals}")
        if min(self.l, self.w, self.h) <= 0:
            raise DegenerateBox(f"box dims must be positive, got l={self.l} w={self.w} h={self.h}")
        object.__setattr__(self, "yaw", normalize_angle(self.yaw))

    @classmethod
    def from_array(cls, arr):
        return cls(*(float(v) for v in arr))

    def to_array(self):
        return np.array(astuple(self), dtype=np.float64)

    @property
    def distance(self):
        """Horizontal range of the center from the sensor."""
        return math.hypot(self.cx, self.cy)

    @property
    def bottom(self):
        return self.cz - self.h / 2.0

    @property
    def volume(self):
        return self.l * self.w * self.h

    def corners(self):
        """The 8 corners, bottom face first, as an (8, 3) array."""
        bev = _kernels.box_corners_bev(self.to_array())
        z0, z1 = self.cz - self.h / 2.0, self.cz + self.h / 2.0
        return np.vstack([np.column_stack([bev, np.full(4, z0)]),
                          np.column_stack([bev, np.full(4, z1)])])


def boxes_to_array(boxes):
    if isinstance(boxes, np.ndarray):
        return boxes.reshape(-1, 7).astype(np.float64)
    return np.array([b.to_array() for b in boxes], dtype=np.float64).reshape(-1, 7)


def to_spherical(points):
    """Spherical representation of Cartesian points.

    Accepts a single point ``(3,)`` or an array ``(N, >=3)``. Returns columns
    ``r, d, theta, phi`` where ``d`` is the horizontal range, ``theta`` the
    full-quadrant azimuth in [-pi, pi) and ``phi`` the elevation. By
    convention ``theta = 0`` when ``d = 0`` and ``phi = 0`` at the origin.
    """
    pts = np.asarray(points, dtype=np.float64)
    single = pts.ndim == 1
    xyz = np.ascontiguousarray(pts.reshape(-1, pts.shape[-1])[:, :3])
    d = np.hypot(xyz[:, 0], xyz[:, 1])
    r = np.hypot(d, xyz[:, 2])
    theta, phi = _kernels.spherical_angles(xyz)
    out = np.column_stack([r, d, theta, phi])
    return out[0] if single else out


def from_spherical(sph):
    """Inverse of :func:`to_spherical`; takes columns ``r, theta, phi``.

    A 4-column input is read as ``r, d, theta, phi`` (``d`` ignored).
    """
    s = np.asarray(sph, dtype=np.float64)
    single = s.ndim == 1
    s = s.reshape(-1, s.shape[-1])
    if s.shape[1] == 4:
        r, theta, phi = s[:, 0], s[:, 2], s[:, 3]
    else:
        r, theta, phi = s[:, 0], s[:, 1], s[:, 2]
    horiz = r * np.cos(phi)
    out = np.column_stack([horiz * np.cos(theta), horiz * np.sin(theta), r * np.sin(phi)])
    return out[0] if single else out


def _box_arr(box):
    return box.to_array() if isinstance(box, Box3D) else np.asarray(box, dtype=np.float64)


def points_in_box_mask(cloud, box, column=False):
    xyz = np.ascontiguousarray(np.asarray(cloud, dtype=np.float64)[:, :3])
    return _kernels.box_mask(xyz, _box_arr(box), column)


def points_in_box(cloud, box):
    """Indices of the points inside the closed oriented box, in cloud order."""
    return np.flatnonzero(points_in_box_mask(cloud, box))


def bev_overlap_area(a, b):
    """Intersection area of the two yaw-rotated footprints in the x-y plane."""
    area = float(_kernels.bev_overlap_matrix(_box_arr(a)[None], _box_arr(b)[None])[0, 0])
    return 0.0 if area < AREA_EPS else area


def bev_overlap_matrix(boxes_a, boxes_b):
    out = _kernels.bev_overlap_matrix(boxes_to_array(boxes_a), boxes_to_array(boxes_b))
    out[out < AREA_EPS] = 0.0
    return out


def _vertical_overlap(a, b):
    lo = max(a[2] - a[5] / 2.0, b[2] - b[5] / 2.0)
    hi = min(a[2] + a[5] / 2.0, b[2] + b[5] / 2.0)
    return max(hi - lo, 0.0)


def iou3d(a, b):
    """3D IoU of two gravity-aligned oriented boxes."""
    a, b = _box_arr(a), _box_arr(b)
    inter = bev_overlap_area(a, b) * _vertical_overlap(a, b)
    union = a[3] * a[4] * a[5] + b[3] * b[4] * b[5] - inter
    if union <= 0:
        return 0.0
    return min(max(inter / union, 0.0), 1.0)


def iou3d_matrix(boxes_a, boxes_b):
    a, b = boxes_to_array(boxes_a), boxes_to_array(boxes_b)
    bev = bev_overlap_matrix(a, b)
    lo = np.maximum((a[:, 2] - a[:, 5] / 2)[:, None], (b[:, 2] - b[:, 5] / 2)[None, :])
    hi = np.minimum((a[:, 2] + a[:, 5] / 2)[:, None], (b[:, 2] + b[:, 5] / 2)[None, :])
    inter = bev * np.clip(hi - lo, 0.0, None)
    vol_a = np.prod(a[:, 3:6], axis=1)
    vol_b = np.prod(b[:, 3:6], axis=1)
    union = vol_a[:, None] + vol_b[None, :] - inter
    return np.clip(inter / union, 0.0, 1.0)
