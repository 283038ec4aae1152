"""Hot-loop kernels.

The compiled extension is used when it imports; otherwise the numpy fallback
is used. Set ``PATTERNAUG_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _fallback

fallback = _fallback
compiled = None

if not os.environ.get("PATTERNAUG_PURE_PYTHON"):
    try:
        from . import _ckernels as compiled
    except ImportError:  # extension not built
        compiled = None

backend = compiled if compiled is not None else _fallback
BACKEND_NAME = "cython" if compiled is not None else "numpy"

# numpy's vectorized arctan2 beats a per-point libm atan2 loop (see
# benchmarks/bench_kernels.py), so the angle kernels always use the fallback
spherical_angles = _fallback.spherical_angles
slice_indices = _fallback.slice_indices
box_mask = backend.box_mask
ray_box = backend.ray_box
convex_overlap_area = backend.convex_overlap_area
bev_overlap_matrix = backend.bev_overlap_matrix
box_corners_bev = _fallback.box_corners_bev
CLIP_EPS = _fallback.CLIP_EPS
