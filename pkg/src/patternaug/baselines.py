"""Point-removal and perturbation baselines, and global affine transforms."""
from dataclasses import dataclass
import math

import numpy as np

from .errors import DegenerateLocation
from .geometry import Box3D, as_cloud, normalize_angle, points_in_box_mask, to_spherical

DEFAULT_DROPOUT_P = 0.3
DEFAULT_NOISE_SIGMA = 0.02
DEFAULT_RANDOM_DROP_P = 0.3


@dataclass(frozen=True)
class Frustum:
    theta_lo: float
    theta_hi: float
    phi_lo: float
    phi_hi: float

    def contains(self, xyz):
        sph = to_spherical(np.asarray(xyz, dtype=np.float64).reshape(-1, np.shape(xyz)[-1]))
        theta = sph[:, 2]
        # intervals are unwrapped past +pi when they straddle the seam
        theta = np.where(theta < self.theta_lo, theta + 2 * math.pi, theta)
        return ((theta >= self.theta_lo) & (theta <= self.theta_hi)
                & (sph[:, 3] >= self.phi_lo) & (sph[:, 3] <= self.phi_hi))


def frustum_of_box(box):
    """Angular bounds of the 8 box corners as seen from the sensor origin."""
    if box.distance == 0.0:
        raise DegenerateLocation("box centred on the sensor axis has no frustum")
    sph = to_spherical(box.corners())
    theta = sph[:, 2]
    if theta.max() - theta.min() > math.pi:
        theta = np.where(theta < 0, theta + 2 * math.pi, theta)
    return Frustum(float(theta.min()), float(theta.max()), float(sph[:, 3].min()), float(sph[:, 3].max()))


def _target_mask(cloud, box, frustum):
    mask = points_in_box_mask(cloud, box)
    if frustum:
        mask[mask] = frustum_of_box(box).contains(cloud[mask, :3])
    return mask


def frustum_dropout(cloud, box, p=DEFAULT_DROPOUT_P, rng=None):
    """Independently drop each point of box-within-frustum with probability ``p``."""
    cloud = as_cloud(cloud)
    rng = np.random.default_rng() if rng is None else rng
    target = _target_mask(cloud, box, frustum=True)
    drop = np.zeros(len(cloud), dtype=bool)
    drop[target] = rng.random(int(target.sum())) < p
    return cloud[~drop]


def frustum_noise(cloud, box, sigma=DEFAULT_NOISE_SIGMA, rng=None):
    """Add N(0, sigma^2) offsets to the xyz of every box-within-frustum point."""
    cloud = as_cloud(cloud)
    rng = np.random.default_rng() if rng is None else rng
    target = _target_mask(cloud, box, frustum=True)
    cloud[target, :3] += rng.normal(0.0, sigma, size=(int(target.sum()), 3))
    return cloud


def random_drop(cloud, box, p=DEFAULT_RANDOM_DROP_P, rng=None):
    cloud = as_cloud(cloud)
    rng = np.random.default_rng() if rng is None else rng
    target = _target_mask(cloud, box, frustum=False)
    drop = np.zeros(len(cloud), dtype=bool)
    drop[target] = rng.random(int(target.sum())) < p
    return cloud[~drop]


@dataclass(frozen=True)
class GlobalTransform:
    flip_y: bool = False
    rotation: float = 0.0
    scale: float = 1.0
    translation: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError(f"scale must be positive, got {self.scale}")


def global_transform(cloud, boxes, spec):
    """Apply flip (y -> -y), rotation about z, uniform scale, then translation.

    Points and boxes move together, so in-box membership is preserved.
    """
    pts = as_cloud(cloud)
    c, s = math.cos(spec.rotation), math.sin(spec.rotation)
    rot = np.array([[c, -s], [s, c]])
    shift = np.asarray(spec.translation, dtype=np.float64)

    def move(xyz):
        xyz = xyz.copy()
        if spec.flip_y:
            xyz[:, 1] = -xyz[:, 1]
        xyz[:, :2] = xyz[:, :2] @ rot.T
        return xyz * spec.scale + shift

    pts[:, :3] = move(pts[:, :3])
    out = []
    for b in boxes:
        center = move(np.array([[b.cx, b.cy, b.cz]]))[0]
        yaw = -b.yaw if spec.flip_y else b.yaw
        out.append(Box3D(*center, b.l * spec.scale, b.w * spec.scale, b.h * spec.scale,
                         normalize_angle(yaw + spec.rotation)))
    return pts, out


def random_global_transform(rng, flip=True, rotation_range=(-math.pi / 4, math.pi / 4),
                            scale_range=(0.95, 1.05), translation_std=0.0):
    """Draw a :class:`GlobalTransform` with the common detector defaults."""
    flip_y = bool(flip and rng.random() < 0.5)
    rotation = float(rng.uniform(*rotation_range))
    scale = float(rng.uniform(*scale_range))
    translation = tuple(rng.normal(0.0, translation_std, 3)) if translation_std > 0 else (0.0, 0.0, 0.0)
    return GlobalTransform(flip_y, rotation, scale, translation)
