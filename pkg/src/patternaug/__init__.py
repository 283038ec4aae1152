"""Pattern-aware ground-truth sampling for LiDAR 3D object detection."""
from ._kernels import BACKEND_NAME
from .geometry import Box3D, bev_overlap_area, from_spherical, iou3d, points_in_box, to_spherical
from .gt_database import GtDatabase, GtObject, build_database, insert_objects, sample_objects
from .pattern_aware import (AngularGrid, Outcome, PatternAwareConfig, augment_frame, downsample_pattern,
                            pattern_aware_sample, relocate_object, slice_index)

__version__ = "0.1.0"

__all__ = [
    "BACKEND_NAME", "Box3D", "bev_overlap_area", "from_spherical", "iou3d", "points_in_box", "to_spherical",
    "GtDatabase", "GtObject", "build_database", "insert_objects", "sample_objects",
    "AngularGrid", "Outcome", "PatternAwareConfig", "augment_frame", "downsample_pattern",
    "pattern_aware_sample", "relocate_object", "slice_index",
]
