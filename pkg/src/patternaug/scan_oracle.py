"""Raycasting scan simulator used as an independent check on the sampler.

Rays leave the origin on a regular azimuth x elevation lattice; every
lattice angle is an integer multiple of the sensor resolution.
"""
from dataclasses import dataclass
import math

import numpy as np
from scipy.spatial import cKDTree

from . import _kernels
from .errors import ConfigError, EmptyCloud
from .geometry import Box3D, to_spherical
from .pattern_aware import AngularGrid, downsample_pattern, relocate_object

_LATTICE_TOL = 1e-9


@dataclass(frozen=True)
class SensorSpec:
    vertical_resolution: float = 0.4  # degrees
    horizontal_resolution: float = 0.17  # degrees
    fov_down: float = -24.8
    fov_up: float = 2.0
    max_range: float = 120.0

    def __post_init__(self):
        if self.vertical_resolution <= 0 or self.horizontal_resolution <= 0:
            raise ConfigError("sensor resolutions must be positive")
        if not self.fov_up > self.fov_down:
            raise ConfigError("vertical field of view is empty")
        if self.max_range <= 0:
            raise ConfigError("max_range must be positive")

    @property
    def d_theta(self):
        return math.radians(self.horizontal_resolution)

    @property
    def d_phi(self):
        return math.radians(self.vertical_resolution)

    def azimuth_steps(self):
        """Integer lattice indices ``k`` with ``k * d_theta`` in [-pi, pi)."""
        lo = math.ceil(-math.pi / self.d_theta - _LATTICE_TOL)
        hi = math.ceil(math.pi / self.d_theta - _LATTICE_TOL) - 1
        return np.arange(lo, hi + 1)

    def elevation_steps(self):
        res = self.vertical_resolution
        lo = math.ceil(self.fov_down / res - _LATTICE_TOL)
        hi = math.floor(self.fov_up / res + _LATTICE_TOL)
        return np.arange(lo, hi + 1)

    def matching_grid(self):
        """Angular grid with one slice per lattice ray, each ray at a slice
        center and ray index 0 on an even slice."""
        ks, js = self.azimuth_steps(), self.elevation_steps()
        k0 = ks[0] - (ks[0] % 2)
        j0 = js[0] - (js[0] % 2)
        return AngularGrid(
            theta_min=(k0 - 0.5) * self.d_theta, theta_max=(ks[-1] + 0.5) * self.d_theta,
            W=int(ks[-1] - k0 + 1),
            phi_min=(j0 - 0.5) * self.d_phi, phi_max=(js[-1] + 0.5) * self.d_phi,
            H=int(js[-1] - j0 + 1),
        )


@dataclass(frozen=True)
class TargetScene:
    target: Box3D
    ground_z: float = None  # ground plane height, None for no ground


def frontal_plate(distance, width=1.0, height=1.0, center_z=0.0, thickness=0.02, azimuth=0.0):
    """Thin box whose front face is ``distance`` meters out, facing the sensor."""
    c = distance + thickness / 2.0
    return Box3D(c * math.cos(azimuth), c * math.sin(azimuth), center_z, thickness, width, height, azimuth)


def _ray_dirs(thetas, phis):
    th, ph = np.meshgrid(thetas, phis)  # row-major: elevation, then azimuth
    th, ph = th.ravel(), ph.ravel()
    return np.column_stack([np.cos(ph) * np.cos(th), np.cos(ph) * np.sin(th), np.sin(ph)])


def _candidate_steps(target, spec):
    """Lattice indices that can reach the target (all of them when the
    target surrounds the sensor's vertical axis)."""
    ks, js = spec.azimuth_steps(), spec.elevation_steps()
    corners = target.corners()
    sph = to_spherical(corners)
    if target.distance <= 0.5 * math.hypot(target.l, target.w):
        return ks, js
    th = sph[:, 2]
    if th.max() - th.min() > math.pi:
        th = np.where(th < 0, th + 2 * math.pi, th)
    pad_t, pad_p = 2 * spec.d_theta, 2 * spec.d_phi
    ang = ks * spec.d_theta
    ang = np.where(ang < th.min() - pad_t, ang + 2 * math.pi, ang)
    ks = ks[(ang >= th.min() - pad_t) & (ang <= th.max() + pad_t)]
    # the closest point of a box can sit on a face, so widen elevation by the
    # full vertical extent seen from the nearest horizontal range
    d_near = max(target.distance - 0.5 * math.hypot(target.l, target.w), 1e-6)
    z_lo, z_hi = target.cz - target.h / 2, target.cz + target.h / 2
    p_lo = min(sph[:, 3].min(), math.atan2(z_lo, d_near)) - pad_p
    p_hi = max(sph[:, 3].max(), math.atan2(z_hi, d_near)) + pad_p
    js = js[(js * spec.d_phi >= p_lo) & (js * spec.d_phi <= p_hi)]
    return ks, js


def simulate_scan(scene, spec=SensorSpec()):
    """Cast one ray per lattice direction; the first hit within range is a
    point with intensity 1. Output is ordered by elevation, then azimuth."""
    if scene.ground_z is None:
        ks, js = _candidate_steps(scene.target, spec)
    else:
        ks, js = spec.azimuth_steps(), spec.elevation_steps()
    if len(ks) == 0 or len(js) == 0:
        return np.zeros((0, 4))
    dirs = _ray_dirs(ks * spec.d_theta, js * spec.d_phi)
    t = _kernels.ray_box(np.ascontiguousarray(dirs), scene.target.to_array())
    if scene.ground_z is not None and scene.ground_z < 0:
        with np.errstate(divide="ignore"):
            t_ground = np.where(dirs[:, 2] < 0, scene.ground_z / dirs[:, 2], np.inf)
        t = np.minimum(t, t_ground)
    hit = t <= spec.max_range
    pts = dirs[hit] * t[hit, None]
    return np.column_stack([pts, np.ones(len(pts))])


@dataclass
class CloudComparison:
    count_ratio: float
    mean_nn_distance: float
    max_nn_distance: float


def compare_clouds(a, b):
    """Count ratio ``|a|/|b|`` and symmetric nearest-neighbour distances."""
    if len(a) == 0 or len(b) == 0:
        raise EmptyCloud("cannot compare an empty cloud")
    a, b = np.asarray(a)[:, :3], np.asarray(b)[:, :3]
    d_ab, _ = cKDTree(b).query(a)
    d_ba, _ = cKDTree(a).query(b)
    both = np.concatenate([d_ab, d_ba])
    return CloudComparison(len(a) / len(b), float(both.mean()), float(both.max()))


@dataclass
class OracleResult:
    near: np.ndarray
    simulated_far: np.ndarray
    direct_far: np.ndarray
    comparison: CloudComparison
    arc_length: float  # one azimuth step at the far distance
    count_bounds: tuple = (0.85, 1.15)

    @property
    def passed(self):
        lo, hi = self.count_bounds
        return lo <= self.comparison.count_ratio <= hi and self.comparison.mean_nn_distance < self.arc_length


def oracle_chain(target, spec=SensorSpec(), factor=2, count_bounds=(0.85, 1.15)):
    """Scan ``target``, thin and relocate the scan by ``factor``, and compare
    with a direct scan of the target placed ``factor`` times farther out.

    Returns None when either scan has no hits.
    """
    near = simulate_scan(TargetScene(target), spec)
    far_box, _ = relocate_object(target, np.zeros((0, 4)), factor)
    direct = simulate_scan(TargetScene(far_box), spec)
    if len(near) == 0 or len(direct) == 0:
        return None
    thinned = downsample_pattern(near, spec.matching_grid(), factor)
    _, moved = relocate_object(target, thinned, factor)
    if len(moved) == 0:
        return None
    arc = far_box.distance * spec.d_theta
    return OracleResult(near, moved, direct, compare_clouds(moved, direct), arc, tuple(count_bounds))


def vertical_spacing(cloud, spec=SensorSpec()):
    """Median height gap between adjacent scan lines.

    Each line is represented by the median height of its points.
    """
    if len(cloud) == 0:
        return math.nan
    cloud = np.asarray(cloud)
    rows = np.round(to_spherical(cloud[:, :3])[:, 3] / spec.d_phi).astype(int)
    heights = np.array([np.median(cloud[rows == j, 2]) for j in np.unique(rows)])
    if len(heights) < 2:
        return math.nan
    return float(np.median(np.diff(heights)))


def scan_rows(cloud, spec):
    """Number of distinct elevation lattice rows among the points."""
    if len(cloud) == 0:
        return 0
    phi = to_spherical(np.asarray(cloud)[:, :3])[:, 3]
    return len(np.unique(np.round(phi / spec.d_phi).astype(int)))
