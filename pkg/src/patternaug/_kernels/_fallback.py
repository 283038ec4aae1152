"""Pure-numpy kernels. Same signatures and semantics as ``_ckernels``."""
import math

import numpy as np

_TWO_PI = 2.0 * math.pi
CLIP_EPS = 1e-9
# boundary slack for the closed box test, absorbs round-off of surface points
BOX_EPS = 1e-9


def spherical_angles(xyz):
    """Azimuth and elevation of each row of ``xyz``.

    Returns:
        theta: (N,) in [-pi, pi); 0 where the horizontal range is 0.
        phi: (N,) in [-pi/2, pi/2]; 0 at the origin.
    """
    x, y, z = xyz[:, 0], xyz[:, 1], xyz[:, 2]
    d = np.hypot(x, y)
    theta = np.arctan2(y, x)
    theta[theta >= math.pi] -= _TWO_PI
    theta[d == 0.0] = 0.0
    phi = np.arctan2(z, d)
    phi[(d == 0.0) & (z == 0.0)] = 0.0
    return theta, phi


def _grid_index(angle, lo, width, n, wrap):
    hi = lo + n * width
    a = angle.copy()
    if wrap:
        a = np.where(a < lo, a + _TWO_PI, a)
        a = np.where(a >= hi, a - _TWO_PI, a)
    idx = np.floor((a - lo) / width).astype(np.int64)
    # rounding can land a value just under ``hi`` on index n
    idx[(idx == n) & (a < hi)] = n - 1
    idx[(idx == -1) & (a >= lo)] = 0
    idx[(a < lo) | (a >= hi)] = -1
    return idx


def slice_indices(xyz, theta_min, theta_width, n_theta, phi_min, phi_width, n_phi):
    """Angular slice indices per point; -1 marks a point outside the grid."""
    theta, phi = spherical_angles(np.asarray(xyz, dtype=np.float64))
    it = _grid_index(theta, theta_min, theta_width, n_theta, wrap=True)
    ip = _grid_index(phi, phi_min, phi_width, n_phi, wrap=False)
    return it, ip


def box_mask(xyz, box, column=False):
    """Closed oriented-box membership. ``column`` ignores the z extent."""
    cx, cy, cz, l, w, h, yaw = (float(v) for v in box)
    c, s = math.cos(yaw), math.sin(yaw)
    dx = xyz[:, 0] - cx
    dy = xyz[:, 1] - cy
    u = dx * c + dy * s
    v = -dx * s + dy * c
    mask = (np.abs(u) <= l / 2.0 + BOX_EPS) & (np.abs(v) <= w / 2.0 + BOX_EPS)
    if not column:
        mask &= np.abs(xyz[:, 2] - cz) <= h / 2.0 + BOX_EPS
    return mask


def ray_box(dirs, box):
    """Slab-method hit distance from the origin along each ray; inf on miss."""
    cx, cy, cz, l, w, h, yaw = (float(v) for v in box)
    c, s = math.cos(yaw), math.sin(yaw)
    # ray origin and directions expressed in the box frame
    o = np.array([-cx * c - cy * s, cx * s - cy * c, -cz])
    d = np.empty_like(dirs)
    d[:, 0] = dirs[:, 0] * c + dirs[:, 1] * s
    d[:, 1] = -dirs[:, 0] * s + dirs[:, 1] * c
    d[:, 2] = dirs[:, 2]
    half = np.array([l, w, h]) / 2.0
    with np.errstate(divide="ignore", invalid="ignore"):
        t1 = (-half - o) / d
        t2 = (half - o) / d
    tnear = np.fmax.reduce(np.fmin(t1, t2), axis=1)
    tfar = np.fmin.reduce(np.fmax(t1, t2), axis=1)
    hit = (tnear <= tfar) & (tnear > 0.0)
    return np.where(hit, tnear, np.inf)


def box_corners_bev(box):
    cx, cy, _, l, w, _, yaw = (float(v) for v in box)
    c, s = math.cos(yaw), math.sin(yaw)
    # counter-clockwise
    local = np.array([[l, w], [-l, w], [-l, -w], [l, -w]]) / 2.0
    rot = np.array([[c, -s], [s, c]])
    return local @ rot.T + np.array([cx, cy])


def _polygon_area(poly):
    if len(poly) < 3:
        return 0.0
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def convex_overlap_area(poly_a, poly_b):
    """Intersection area of two counter-clockwise convex polygons."""
    out = [tuple(p) for p in poly_a]
    nb = len(poly_b)
    for i in range(nb):
        if not out:
            break
        ax, ay = poly_b[i]
        bx, by = poly_b[(i + 1) % nb]
        ex, ey = bx - ax, by - ay
        src, out = out, []
        n = len(src)
        for j in range(n):
            px, py = src[j]
            qx, qy = src[(j + 1) % n]
            sp = ex * (py - ay) - ey * (px - ax)
            sq = ex * (qy - ay) - ey * (qx - ax)
            p_in = sp >= -CLIP_EPS
            q_in = sq >= -CLIP_EPS
            if p_in:
                out.append((px, py))
            if p_in != q_in:
                t = sp / (sp - sq)
                out.append((px + t * (qx - px), py + t * (qy - py)))
        # drop coincident consecutive vertices
        dedup = []
        for p in out:
            if not dedup or abs(p[0] - dedup[-1][0]) > CLIP_EPS or abs(p[1] - dedup[-1][1]) > CLIP_EPS:
                dedup.append(p)
        if len(dedup) > 1 and abs(dedup[0][0] - dedup[-1][0]) <= CLIP_EPS and abs(dedup[0][1] - dedup[-1][1]) <= CLIP_EPS:
            dedup.pop()
        out = dedup
    if len(out) < 3:
        return 0.0
    return max(_polygon_area(np.asarray(out)), 0.0)


def bev_overlap_matrix(boxes_a, boxes_b):
    boxes_a = np.asarray(boxes_a, dtype=np.float64).reshape(-1, 7)
    boxes_b = np.asarray(boxes_b, dtype=np.float64).reshape(-1, 7)
    out = np.zeros((len(boxes_a), len(boxes_b)))
    corners_b = [box_corners_bev(b) for b in boxes_b]
    for i, a in enumerate(boxes_a):
        ca = box_corners_bev(a)
        ra = 0.5 * math.hypot(a[3], a[4])
        for j, b in enumerate(boxes_b):
            rb = 0.5 * math.hypot(b[3], b[4])
            if math.hypot(a[0] - b[0], a[1] - b[1]) > ra + rb:
                continue
            out[i, j] = convex_overlap_area(ca, corners_b[j])
    return out
