"""KITTI velodyne, label and calibration formats."""
from dataclasses import dataclass
import enum
import math
from pathlib import Path

import numpy as np

from .errors import DegenerateBox, MalformedCalib, MalformedCloud, MalformedLabel, MissingCalibKey
from .geometry import Box3D, normalize_angle

AUGMENT_CLASSES = ("Car", "Pedestrian", "Cyclist")


def read_point_cloud(data):
    """Decode a velodyne buffer of little-endian float32 ``x, y, z, intensity`` records."""
    data = bytes(data)
    if len(data) % 16:
        raise MalformedCloud(f"buffer length {len(data)} is not a multiple of 16")
    pts = np.frombuffer(data, dtype="<f4").reshape(-1, 4)
    if not np.isfinite(pts).all():
        raise MalformedCloud("non-finite value in velodyne buffer")
    return pts.astype(np.float64)


def write_point_cloud(cloud):
    return np.asarray(cloud, dtype=np.float64).reshape(-1, 4).astype("<f4").tobytes()


def load_point_cloud(path):
    return read_point_cloud(Path(path).read_bytes())


def save_point_cloud(path, cloud):
    Path(path).write_bytes(write_point_cloud(cloud))


@dataclass
class KittiLabel:
    class_name: str
    truncation: float
    occlusion: int
    alpha: float
    bbox2d: tuple
    dims: tuple  # h, w, l
    location: tuple  # bottom center, rectified camera frame
    rotation_y: float
    score: float = None

    @property
    def height_px(self):
        return self.bbox2d[3] - self.bbox2d[1]


def _num(tok, line_no, name):
    try:
        return float(tok)
    except ValueError:
        raise MalformedLabel(line_no, f"non-numeric {name} field {tok!r}") from None


def parse_labels(text, with_score=False):
    """Parse KITTI label text, one object per non-empty line.

    With ``with_score`` a 16th trailing score field (result format) is
    accepted; it is optional for ground-truth style lines.
    """
    labels = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        tok = line.split()
        if not tok:
            continue
        if not (len(tok) == 15 or (with_score and len(tok) == 16)):
            expected = "15 or 16" if with_score else "15"
            raise MalformedLabel(line_no, f"expected {expected} fields, got {len(tok)}")
        v = [_num(t, line_no, f"#{i}") for i, t in enumerate(tok[1:], start=1)]
        if not v[1].is_integer():
            raise MalformedLabel(line_no, f"occlusion must be an integer, got {tok[2]!r}")
        labels.append(KittiLabel(
            class_name=tok[0], truncation=v[0], occlusion=int(v[1]), alpha=v[2],
            bbox2d=tuple(v[3:7]), dims=tuple(v[7:10]), location=tuple(v[10:13]),
            rotation_y=v[13], score=v[14] if len(v) == 15 else None,
        ))
    return labels


def _fmt(x, exact):
    return repr(float(x)) if exact else f"{x:.2f}"


def serialize_labels(labels, exact=False):
    """Inverse of :func:`parse_labels`.

    The default writes two decimals like the KITTI tools; ``exact=True``
    writes shortest round-trip floats.
    """
    lines = []
    for lab in labels:
        vals = [lab.truncation, lab.occlusion, lab.alpha, *lab.bbox2d, *lab.dims, *lab.location,
                lab.rotation_y]
        parts = [lab.class_name, _fmt(vals[0], exact), str(int(vals[1]))]
        parts += [_fmt(x, exact) for x in vals[2:]]
        if lab.score is not None:
            parts.append(_fmt(lab.score, exact) if exact else f"{lab.score:.4f}")
        lines.append(" ".join(parts))
    return "".join(line + "\n" for line in lines)


@dataclass
class CalibSet:
    P2: np.ndarray  # (3, 4)
    R0_rect: np.ndarray  # (3, 3)
    Tr_velo_to_cam: np.ndarray  # (3, 4)

    def velo_to_rect(self, xyz):
        xyz = np.atleast_2d(xyz)
        cam = xyz @ self.Tr_velo_to_cam[:, :3].T + self.Tr_velo_to_cam[:, 3]
        return cam @ self.R0_rect.T

    def rect_to_velo(self, xyz):
        xyz = np.atleast_2d(xyz)
        ref = np.linalg.solve(self.R0_rect, xyz.T).T
        rot, trans = self.Tr_velo_to_cam[:, :3], self.Tr_velo_to_cam[:, 3]
        return np.linalg.solve(rot, (ref - trans).T).T

    def rect_to_image(self, xyz):
        """Project rectified camera points; returns (N, 2) pixels and depth."""
        xyz = np.atleast_2d(xyz)
        hom = np.hstack([xyz, np.ones((len(xyz), 1))]) @ self.P2.T
        return hom[:, :2] / hom[:, 2:3], hom[:, 2]


_CALIB_KEYS = {
    "P2": ("P2",),
    "R0_rect": ("R0_rect", "R_rect"),
    "Tr_velo_to_cam": ("Tr_velo_to_cam", "Tr_velo_cam"),
}
_CALIB_SIZES = {"P2": 12, "R0_rect": 9, "Tr_velo_to_cam": 12}


def _check_rotation(name, rot):
    if np.abs(rot @ rot.T - np.eye(3)).max() > 1e-3:
        raise MalformedCalib(f"{name} rotation block is not orthonormal")


def parse_calib(text):
    rows = {}
    for line in text.splitlines():
        if ":" not in line:
            continue
        key, _, rest = line.partition(":")
        rows[key.strip()] = rest.split()
    found = {}
    for name, aliases in _CALIB_KEYS.items():
        key = next((k for k in aliases if k in rows), None)
        if key is None:
            raise MissingCalibKey(name)
        try:
            vals = np.array([float(t) for t in rows[key]])
        except ValueError:
            raise MalformedCalib(f"non-numeric value in {key}") from None
        if vals.size != _CALIB_SIZES[name]:
            raise MalformedCalib(f"{key} has {vals.size} values, expected {_CALIB_SIZES[name]}")
        found[name] = vals
    calib = CalibSet(
        P2=found["P2"].reshape(3, 4),
        R0_rect=found["R0_rect"].reshape(3, 3),
        Tr_velo_to_cam=found["Tr_velo_to_cam"].reshape(3, 4),
    )
    _check_rotation("R0_rect", calib.R0_rect)
    _check_rotation("Tr_velo_to_cam", calib.Tr_velo_to_cam[:, :3])
    return calib


def serialize_calib(calib):
    def row(name, m):
        return name + ": " + " ".join(repr(float(v)) for v in np.ravel(m))
    return "\n".join([
        row("P2", calib.P2), row("R0_rect", calib.R0_rect), row("Tr_velo_to_cam", calib.Tr_velo_to_cam),
    ]) + "\n"


def label_to_lidar_box(label, calib):
    """Sensor-frame :class:`Box3D` for a camera-frame KITTI label.

    The label location is the bottom center in the rectified camera frame
    (y down), so the volumetric center sits ``h/2`` above it. Heading follows
    the usual KITTI convention ``yaw = -(rotation_y + pi/2)``.
    """
    h, w, l = label.dims
    if min(h, w, l) <= 0:
        raise DegenerateBox(f"{label.class_name} label has non-positive dims {label.dims}")
    x, y, z = label.location
    center = calib.rect_to_velo(np.array([[x, y - h / 2.0, z]]))[0]
    return Box3D(center[0], center[1], center[2], l, w, h, -(label.rotation_y + math.pi / 2.0))


def lidar_box_to_label(box, calib, class_name, truncation=0.0, occlusion=0, score=None):
    """Inverse of :func:`label_to_lidar_box`.

    ``bbox2d`` is the extent of the projected box corners (unclipped; all
    ``-1`` when a corner lies behind the camera).
    """
    center = calib.velo_to_rect(np.array([[box.cx, box.cy, box.cz]]))[0]
    loc = (center[0], center[1] + box.h / 2.0, center[2])
    rot_y = normalize_angle(-box.yaw - math.pi / 2.0)
    alpha = normalize_angle(rot_y - math.atan2(loc[0], loc[2]))
    uv, depth = calib.rect_to_image(calib.velo_to_rect(box.corners()))
    if (depth <= 0).any():
        bbox = (-1.0, -1.0, -1.0, -1.0)
    else:
        bbox = (uv[:, 0].min(), uv[:, 1].min(), uv[:, 0].max(), uv[:, 1].max())
    return KittiLabel(class_name, truncation, occlusion, alpha, tuple(float(v) for v in bbox),
                      (box.h, box.w, box.l), tuple(float(v) for v in loc), rot_y, score)


class Difficulty(enum.IntEnum):
    EASY = 0
    MODERATE = 1
    HARD = 2
    EXCLUDED = 3


# min 2D height (px), max occlusion, max truncation
DIFFICULTY_LIMITS = {
    Difficulty.EASY: (40.0, 0, 0.15),
    Difficulty.MODERATE: (25.0, 1, 0.30),
    Difficulty.HARD: (25.0, 2, 0.50),
}


def difficulty_of(label):
    for level, (min_h, max_occ, max_trunc) in DIFFICULTY_LIMITS.items():
        if label.height_px >= min_h and label.occlusion <= max_occ and label.truncation <= max_trunc:
            return level
    return Difficulty.EXCLUDED


def frame_ids(split_path):
    return [ln.strip() for ln in Path(split_path).read_text().splitlines() if ln.strip()]

