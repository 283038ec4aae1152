"""Time the compiled kernels against the numpy fallback.

Usage: python3 benchmarks/bench_kernels.py [--points N] [--repeat R]
"""
import argparse
import math
import timeit

import numpy as np

from patternaug import _kernels


def cases(n, rng):
    xyz = np.ascontiguousarray(rng.uniform(-80, 80, size=(n, 3)))
    dirs = rng.normal(size=(n, 3))
    dirs = np.ascontiguousarray(dirs / np.linalg.norm(dirs, axis=1, keepdims=True))
    box = np.array([12.0, 3.0, -0.8, 3.9, 1.6, 1.56, 0.4])
    boxes = np.column_stack([rng.uniform(-40, 40, (300, 2)), np.full(300, -0.8),
                             rng.uniform(1, 5, (300, 3)), rng.uniform(-math.pi, math.pi, 300)])
    grid = (-math.pi, 2 * math.pi / 512, 512, math.radians(-24.8), math.radians(26.8) / 64, 64)
    return {
        f"spherical_angles ({n} pts)": lambda k: k.spherical_angles(xyz),
        f"slice_indices ({n} pts)": lambda k: k.slice_indices(xyz, *grid),
        f"box_mask ({n} pts)": lambda k: k.box_mask(xyz, box, False),
        f"ray_box ({n} rays)": lambda k: k.ray_box(dirs, box),
        "bev_overlap_matrix (300x300)": lambda k: k.bev_overlap_matrix(boxes, boxes),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=1_000_000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if _kernels.compiled is None:
        raise SystemExit("compiled extension not built; run `pip install -e . --no-build-isolation`")
    rng = np.random.default_rng(0)
    print(f"{'kernel':34s} {'numpy ms':>10s} {'cython ms':>10s} {'speedup':>8s}")
    for name, fn in cases(args.points, rng).items():
        t = {}
        for label, mod in (("numpy", _kernels.fallback), ("cython", _kernels.compiled)):
            fn(mod)  # warm up
            t[label] = min(timeit.repeat(lambda: fn(mod), number=1, repeat=args.repeat)) * 1e3
        print(f"{name:34s} {t['numpy']:10.2f} {t['cython']:10.2f} {t['numpy'] / t['cython']:7.1f}x")


if __name__ == "__main__":
    main()
