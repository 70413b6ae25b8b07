# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops for SSIM and the software rasterizer.

Every routine here has a numpy twin in ``_pykernels`` computing the same
float64 expressions in the same order; the two are checked against each other
in the test suite.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()


def ssim_mean(const double[:, :, ::1] x, const double[:, :, ::1] y,
              Py_ssize_t win, double c1, double c2):
    """Mean local SSIM over all valid window positions of every channel."""
    cdef Py_ssize_t C = x.shape[0], H = x.shape[1], W = x.shape[2]
    cdef Py_ssize_t oh = H - win + 1, ow = W - win + 1
    cdef Py_ssize_t c, i, j, k
    cdef double n = <double>(win * win)
    cdef double sx, sy, sxx, syy, sxy, a, b
    cdef double mx, my, vx, vy, cxy, total = 0.0
    # row-wise window sums, then columns
    cdef double[:, ::1] rx = np.empty((H, ow))
    cdef double[:, ::1] ry = np.empty((H, ow))
    cdef double[:, ::1] rxx = np.empty((H, ow))
    cdef double[:, ::1] ryy = np.empty((H, ow))
    cdef double[:, ::1] rxy = np.empty((H, ow))

    for c in range(C):
        for i in range(H):
            for j in range(ow):
                sx = 0.0; sy = 0.0; sxx = 0.0; syy = 0.0; sxy = 0.0
                for k in range(win):
                    a = x[c, i, j + k]
                    b = y[c, i, j + k]
                    sx += a
                    sy += b
                    sxx += a * a
                    syy += b * b
                    sxy += a * b
                rx[i, j] = sx; ry[i, j] = sy
                rxx[i, j] = sxx; ryy[i, j] = syy; rxy[i, j] = sxy
        for i in range(oh):
            for j in range(ow):
                sx = 0.0; sy = 0.0; sxx = 0.0; syy = 0.0; sxy = 0.0
                for k in range(win):
                    sx += rx[i + k, j]
                    sy += ry[i + k, j]
                    sxx += rxx[i + k, j]
                    syy += ryy[i + k, j]
                    sxy += rxy[i + k, j]
                mx = sx / n
                my = sy / n
                vx = sxx / n - mx * mx
                vy = syy / n - my * my
                cxy = sxy / n - mx * my
                total += ((2.0 * mx * my + c1) * (2.0 * cxy + c2)) / \
                         ((mx * mx + my * my + c1) * (vx + vy + c2))
    return total / <double>(C * oh * ow)


cdef inline double _clip01(double v) nogil:
    if v < 0.0:
        return 0.0
    if v > 1.0:
        return 1.0
    return v


def paint_disc(double[:, :, ::1] canvas, double cx, double cy, double radius,
               double r, double g, double b):
    """Alpha-composite an anti-aliased disc centred at pixel coords (cx, cy)."""
    cdef Py_ssize_t H = canvas.shape[1], W = canvas.shape[2], i, j
    cdef double px, py, dx, dy, d, cov
    for i in range(H):
        py = i + 0.5
        for j in range(W):
            px = j + 0.5
            dx = px - cx
            dy = py - cy
            d = sqrt(dx * dx + dy * dy) - radius
            cov = _clip01(0.5 - d)
            if cov > 0.0:
                canvas[0, i, j] = canvas[0, i, j] * (1.0 - cov) + r * cov
                canvas[1, i, j] = canvas[1, i, j] * (1.0 - cov) + g * cov
                canvas[2, i, j] = canvas[2, i, j] * (1.0 - cov) + b * cov


def paint_capsule(double[:, :, ::1] canvas, double x0, double y0, double x1,
                  double y1, double half_width, double r, double g, double b):
    """Alpha-composite an anti-aliased thick segment with round caps."""
    cdef Py_ssize_t H = canvas.shape[1], W = canvas.shape[2], i, j
    cdef double ex = x1 - x0, ey = y1 - y0
    cdef double ll = ex * ex + ey * ey
    cdef double px, py, t, qx, qy, d, cov
    for i in range(H):
        py = i + 0.5
        for j in range(W):
            px = j + 0.5
            if ll > 0.0:
                t = _clip01(((px - x0) * ex + (py - y0) * ey) / ll)
            else:
                t = 0.0
            qx = px - (x0 + t * ex)
            qy = py - (y0 + t * ey)
            d = sqrt(qx * qx + qy * qy) - half_width
            cov = _clip01(0.5 - d)
            if cov > 0.0:
                canvas[0, i, j] = canvas[0, i, j] * (1.0 - cov) + r * cov
                canvas[1, i, j] = canvas[1, i, j] * (1.0 - cov) + g * cov
                canvas[2, i, j] = canvas[2, i, j] * (1.0 - cov) + b * cov
