"""Pattern-aware ground-truth sampling.

An object's points are binned on an azimuth x elevation grid; keeping only
every ``k``-th slice along both axes thins the object the way the sensor's
diverging beams would at ``k`` times the range, after which the object is
pushed out along its own ray by the same factor.
"""
from dataclasses import dataclass, field
import enum
import math

import numpy as np

from . import _kernels
from .errors import ConfigError, DegenerateLocation, OutOfGrid
from .geometry import Box3D, as_cloud, to_spherical
from .gt_database import GtObject, insert_objects, sample_objects

# HDL-64E vertical field of view
HDL64_PHI_MIN = math.radians(-24.8)
HDL64_PHI_MAX = math.radians(2.0)


@dataclass(frozen=True)
class AngularGrid:
    theta_min: float = -math.pi
    theta_max: float = math.pi
    W: int = 512
    phi_min: float = HDL64_PHI_MIN
    phi_max: float = HDL64_PHI_MAX
    H: int = 64

    def __post_init__(self):
        if not (self.theta_max > self.theta_min and self.phi_max > self.phi_min):
            raise ConfigError("grid extents must be increasing")
        if self.W < 2 or self.H < 2:
            raise ConfigError("grid needs at least 2 divisions per axis")
        if self.theta_max - self.theta_min > 2 * math.pi + 1e-12:
            raise ConfigError("azimuth extent exceeds a full turn")

    @property
    def theta_width(self):
        return (self.theta_max - self.theta_min) / self.W

    @property
    def phi_width(self):
        return (self.phi_max - self.phi_min) / self.H

    def indices(self, xyz):
        """Slice indices for an ``(N, >=3)`` array; -1 marks out-of-grid."""
        xyz = np.ascontiguousarray(np.asarray(xyz, dtype=np.float64).reshape(-1, np.shape(xyz)[-1])[:, :3])
        return _kernels.slice_indices(xyz, self.theta_min, self.theta_width, self.W,
                                      self.phi_min, self.phi_width, self.H)


def slice_index(sph, grid):
    """``(i_theta, i_phi)`` of one spherical point ``(r, d, theta, phi)``."""
    theta, phi = float(sph[2]), float(sph[3])
    out = []
    for a, lo, hi, width, n, name in (
        (theta, grid.theta_min, grid.theta_max, grid.theta_width, grid.W, "azimuth"),
        (phi, grid.phi_min, grid.phi_max, grid.phi_width, grid.H, "elevation"),
    ):
        if not lo <= a < hi:
            raise OutOfGrid(f"{name} {a:.6f} rad outside [{lo:.6f}, {hi:.6f})")
        out.append(min(int(math.floor((a - lo) / width)), n - 1))
    return tuple(out)


def downsample_pattern(points, grid, factor=2):
    """Keep the points whose azimuth and elevation slice indices are both
    multiples of ``factor``. Order is preserved."""
    points = as_cloud(points)
    if len(points) == 0:
        return points
    it, ip = grid.indices(points)
    bad = (it < 0) | (ip < 0)
    if bad.any():
        sph = to_spherical(points[np.argmax(bad), :3])
        raise OutOfGrid(f"point at theta={sph[2]:.6f}, phi={sph[3]:.6f} rad is outside the grid")
    return points[(it % factor == 0) & (ip % factor == 0)]


def relocate_object(box, points, factor):
    """Push a box and its points out along the center's horizontal ray.

    The center's ``(cx, cy)`` scale by ``factor``; height and heading are
    kept, so the box bottom stays on the same ground plane. All points move
    by the same translation as the center.
    """
    if box.distance == 0.0:
        raise DegenerateLocation("cannot relocate a box centred on the sensor axis")
    shift = np.array([(factor - 1.0) * box.cx, (factor - 1.0) * box.cy, 0.0])
    new_box = Box3D(box.cx + shift[0], box.cy + shift[1], box.cz, box.l, box.w, box.h, box.yaw)
    pts = as_cloud(points)
    pts[:, :3] += shift
    return new_box, pts


def _default_min_points():
    return {"Car": 5, "Pedestrian": 200, "Cyclist": 200}


@dataclass
class PatternAwareConfig:
    grid: AngularGrid = field(default_factory=AngularGrid)
    apply_probability: float = 0.4
    relocation_factor: int = 2
    min_points_per_class: dict = field(default_factory=_default_min_points)
    relocated_range: tuple = (20.0, 70.0)

    def __post_init__(self):
        if not 0.0 <= self.apply_probability <= 1.0:
            raise ConfigError(f"apply_probability {self.apply_probability} not in [0, 1]")
        f = self.relocation_factor
        if f != int(f) or f < 2:
            raise ConfigError(f"relocation_factor must be an integer >= 2, got {f}")
        self.relocation_factor = int(f)
        lo, hi = self.relocated_range
        if not lo < hi:
            raise ConfigError(f"relocated_range {self.relocated_range} is empty")
        if any(v < 1 for v in self.min_points_per_class.values()):
            raise ConfigError("min points per class must be >= 1")

    def min_points(self, class_name):
        return self.min_points_per_class.get(class_name, 1)


class Outcome(enum.Enum):
    UNCHANGED = "unchanged"
    RELOCATED = "relocated"
    REJECTED = "rejected"


@dataclass
class SampleResult:
    outcome: Outcome
    obj: GtObject = None  # relocated object, or the input when unchanged

    def for_insertion(self, original):
        """Object to paste: rejected candidates fall back to their original."""
        return self.obj if self.outcome is Outcome.RELOCATED else original


def pattern_aware_sample(obj, cfg, rng):
    """Relocate ``obj`` with probability ``cfg.apply_probability``.

    Exactly one uniform draw is consumed from ``rng`` per call. A relocation
    is rejected when the new center distance leaves ``cfg.relocated_range``,
    when a point falls outside the grid, or when fewer than the class
    minimum of points survive the thinning.
    """
    if rng.random() >= cfg.apply_probability:
        return SampleResult(Outcome.UNCHANGED, obj)
    k = cfg.relocation_factor
    lo, hi = cfg.relocated_range
    if obj.distance == 0.0 or not lo <= k * obj.distance <= hi:
        return SampleResult(Outcome.REJECTED)
    try:
        kept = downsample_pattern(obj.points, cfg.grid, k)
    except OutOfGrid:
        return SampleResult(Outcome.REJECTED)
    if len(kept) < cfg.min_points(obj.class_name):
        return SampleResult(Outcome.REJECTED)
    box, pts = relocate_object(obj.box, kept, k)
    return SampleResult(Outcome.RELOCATED, GtObject(obj.class_name, box, pts, obj.source_frame))


@dataclass
class Frame:
    frame_id: str
    points: np.ndarray
    boxes: list  # Box3D of every annotated object
    class_names: list


@dataclass
class AugmentStats:
    sampled: int = 0
    relocated: int = 0
    rejected: int = 0
    accepted: int = 0
    accepted_relocated: int = 0


def augment_frame(frame, db, cfg, sampling_plan, rng):
    """Ground-truth sampling with pattern-aware relocation.

    ``sampling_plan`` maps class name to the number of objects to draw. Each
    drawn object goes through :func:`pattern_aware_sample` and the results
    are pasted with collision rejection.

    Returns:
        (Frame, AugmentStats, accepted objects)
    """
    candidates, relocated_ids = [], set()
    stats = AugmentStats()
    for cls, count in sampling_plan.items():
        for obj in sample_objects(db, cls, count, rng):
            res = pattern_aware_sample(obj, cfg, rng)
            stats.sampled += 1
            if res.outcome is Outcome.RELOCATED:
                stats.relocated += 1
                relocated_ids.add(id(res.obj))
            elif res.outcome is Outcome.REJECTED:
                stats.rejected += 1
            candidates.append(res.for_insertion(obj))
    cloud, boxes, accepted = insert_objects(frame.points, frame.boxes, candidates)
    stats.accepted = len(accepted)
    stats.accepted_relocated = sum(id(o) in relocated_ids for o in accepted)
    out = Frame(frame.frame_id, cloud, boxes, list(frame.class_names) + [o.class_name for o in accepted])
    return out, stats, accepted
