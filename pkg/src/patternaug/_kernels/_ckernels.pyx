# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels. Must agree with ``_fallback`` on every input."""
import numpy as np
cimport numpy as cnp
from libc.math cimport atan2, hypot, floor, fabs, cos, sin, sqrt, INFINITY, M_PI

cnp.import_array()

cdef double CLIP_EPS = 1e-9
cdef double BOX_EPS = 1e-9
cdef double TWO_PI = 2.0 * M_PI


cdef inline void _angles(double x, double y, double z, double* theta, double* phi) noexcept nogil:
    cdef double d = hypot(x, y)
    if d == 0.0:
        theta[0] = 0.0
        phi[0] = 0.0 if z == 0.0 else atan2(z, d)
        return
    theta[0] = atan2(y, x)
    if theta[0] >= M_PI:
        theta[0] -= TWO_PI
    phi[0] = atan2(z, d)


def spherical_angles(const double[:, :] xyz):
    cdef Py_ssize_t i, n = xyz.shape[0]
    theta = np.empty(n)
    phi = np.empty(n)
    cdef double[:] th = theta
    cdef double[:] ph = phi
    with nogil:
        for i in range(n):
            _angles(xyz[i, 0], xyz[i, 1], xyz[i, 2], &th[i], &ph[i])
    return theta, phi


cdef inline long long _index(double a, double lo, double width, long long n, bint wrap) noexcept nogil:
    cdef double hi = lo + n * width
    cdef long long idx
    if wrap:
        if a < lo:
            a += TWO_PI
        elif a >= hi:
            a -= TWO_PI
    if a < lo or a >= hi:
        return -1
    idx = <long long>floor((a - lo) / width)
    if idx >= n:
        idx = n - 1
    elif idx < 0:
        idx = 0
    return idx


def slice_indices(const double[:, :] xyz, double theta_min, double theta_width, long long n_theta,
                  double phi_min, double phi_width, long long n_phi):
    cdef Py_ssize_t i, n = xyz.shape[0]
    cdef double th, ph
    it = np.empty(n, dtype=np.int64)
    ip = np.empty(n, dtype=np.int64)
    cdef long long[:] it_v = it
    cdef long long[:] ip_v = ip
    with nogil:
        for i in range(n):
            _angles(xyz[i, 0], xyz[i, 1], xyz[i, 2], &th, &ph)
            it_v[i] = _index(th, theta_min, theta_width, n_theta, True)
            ip_v[i] = _index(ph, phi_min, phi_width, n_phi, False)
    return it, ip


def box_mask(const double[:, :] xyz, box, bint column=False):
    cdef double cx = box[0], cy = box[1], cz = box[2]
    cdef double hl = box[3] / 2.0 + BOX_EPS, hw = box[4] / 2.0 + BOX_EPS, hh = box[5] / 2.0 + BOX_EPS
    cdef double c = cos(box[6]), s = sin(box[6])
    cdef Py_ssize_t i, n = xyz.shape[0]
    cdef double dx, dy, u, v
    out = np.empty(n, dtype=np.bool_)
    cdef cnp.npy_bool[:] m = out
    with nogil:
        for i in range(n):
            dx = xyz[i, 0] - cx
            dy = xyz[i, 1] - cy
            u = dx * c + dy * s
            v = -dx * s + dy * c
            m[i] = fabs(u) <= hl and fabs(v) <= hw and (column or fabs(xyz[i, 2] - cz) <= hh)
    return out


cdef inline void _slab(double o, double d, double half, double* tn, double* tf) noexcept nogil:
    cdef double t1, t2
    if d == 0.0:
        if fabs(o) > half:
            tn[0] = INFINITY
            tf[0] = -INFINITY
        return
    t1 = (-half - o) / d
    t2 = (half - o) / d
    if t1 > t2:
        t1, t2 = t2, t1
    if t1 > tn[0]:
        tn[0] = t1
    if t2 < tf[0]:
        tf[0] = t2


def ray_box(const double[:, :] dirs, box):
    cdef double cx = box[0], cy = box[1], cz = box[2]
    cdef double hl = box[3] / 2.0, hw = box[4] / 2.0, hh = box[5] / 2.0
    cdef double c = cos(box[6]), s = sin(box[6])
    cdef double ox = -cx * c - cy * s, oy = cx * s - cy * c, oz = -cz
    cdef Py_ssize_t i, n = dirs.shape[0]
    cdef double dx, dy, tn, tf
    out = np.empty(n)
    cdef double[:] t = out
    with nogil:
        for i in range(n):
            dx = dirs[i, 0] * c + dirs[i, 1] * s
            dy = -dirs[i, 0] * s + dirs[i, 1] * c
            tn = -INFINITY
            tf = INFINITY
            _slab(ox, dx, hl, &tn, &tf)
            _slab(oy, dy, hw, &tn, &tf)
            _slab(oz, dirs[i, 2], hh, &tn, &tf)
            t[i] = tn if (tn <= tf and tn > 0.0) else INFINITY
    return out


cdef void _corners(const double[:] b, double* px, double* py) noexcept nogil:
    cdef double c = cos(b[6]), s = sin(b[6])
    cdef double hl = b[3] / 2.0, hw = b[4] / 2.0
    cdef double lx[4]
    cdef double ly[4]
    cdef int k
    lx[0] = hl; ly[0] = hw
    lx[1] = -hl; ly[1] = hw
    lx[2] = -hl; ly[2] = -hw
    lx[3] = hl; ly[3] = -hw
    for k in range(4):
        px[k] = lx[k] * c - ly[k] * s + b[0]
        py[k] = lx[k] * s + ly[k] * c + b[1]


cdef double _clip_area(double* ax, double* ay, int na, double* bx, double* by, int nb) noexcept nogil:
    # Sutherland-Hodgman; a convex quad clipped by a convex quad has at most 8 vertices
    cdef double sx[16]
    cdef double sy[16]
    cdef double tx[16]
    cdef double ty[16]
    cdef int n = na, m, i, j, k
    cdef double ex, ey, x0, y0, sp, sq, t, px, py, qx, qy, area
    cdef bint p_in, q_in
    for i in range(na):
        sx[i] = ax[i]
        sy[i] = ay[i]
    for i in range(nb):
        if n == 0:
            break
        x0 = bx[i]
        y0 = by[i]
        ex = bx[(i + 1) % nb] - x0
        ey = by[(i + 1) % nb] - y0
        m = 0
        for j in range(n):
            px = sx[j]
            py = sy[j]
            qx = sx[(j + 1) % n]
            qy = sy[(j + 1) % n]
            sp = ex * (py - y0) - ey * (px - x0)
            sq = ex * (qy - y0) - ey * (qx - x0)
            p_in = sp >= -CLIP_EPS
            q_in = sq >= -CLIP_EPS
            if p_in:
                tx[m] = px
                ty[m] = py
                m += 1
            if p_in != q_in:
                t = sp / (sp - sq)
                tx[m] = px + t * (qx - px)
                ty[m] = py + t * (qy - py)
                m += 1
        n = 0
        for j in range(m):
            if n == 0 or fabs(tx[j] - sx[n - 1]) > CLIP_EPS or fabs(ty[j] - sy[n - 1]) > CLIP_EPS:
                sx[n] = tx[j]
                sy[n] = ty[j]
                n += 1
        if n > 1 and fabs(sx[0] - sx[n - 1]) <= CLIP_EPS and fabs(sy[0] - sy[n - 1]) <= CLIP_EPS:
            n -= 1
    if n < 3:
        return 0.0
    area = 0.0
    for k in range(n):
        area += sx[k] * sy[(k + 1) % n] - sy[k] * sx[(k + 1) % n]
    area *= 0.5
    return area if area > 0.0 else 0.0


def convex_overlap_area(poly_a, poly_b):
    cdef double ax[8]
    cdef double ay[8]
    cdef double bx[8]
    cdef double by[8]
    cdef int na = len(poly_a), nb = len(poly_b), i
    if na > 8 or nb > 8:
        raise ValueError("polygons with more than 8 vertices are not supported")
    for i in range(na):
        ax[i] = poly_a[i][0]
        ay[i] = poly_a[i][1]
    for i in range(nb):
        bx[i] = poly_b[i][0]
        by[i] = poly_b[i][1]
    return _clip_area(ax, ay, na, bx, by, nb)


def bev_overlap_matrix(boxes_a, boxes_b):
    cdef const double[:, :] a = np.ascontiguousarray(boxes_a, dtype=np.float64).reshape(-1, 7)
    cdef const double[:, :] b = np.ascontiguousarray(boxes_b, dtype=np.float64).reshape(-1, 7)
    cdef Py_ssize_t i, j, na = a.shape[0], nb = b.shape[0]
    cdef double ax[4]
    cdef double ay[4]
    cdef double bx[4]
    cdef double by[4]
    cdef double ra, rb
    out = np.zeros((na, nb))
    cdef double[:, :] o = out
    with nogil:
        for i in range(na):
            _corners(a[i], ax, ay)
            ra = 0.5 * hypot(a[i, 3], a[i, 4])
            for j in range(nb):
                rb = 0.5 * hypot(b[j, 3], b[j, 4])
                if hypot(a[i, 0] - b[j, 0], a[i, 1] - b[j, 1]) > ra + rb:
                    continue
                _corners(b[j], bx, by)
                o[i, j] = _clip_area(ax, ay, 4, bx, by, 4)
    return out
