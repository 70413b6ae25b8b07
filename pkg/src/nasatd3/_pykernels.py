"""Pure numpy implementations of the compiled kernels in ``_ckernels``."""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def _box_sums(a, win):
    rows = sliding_window_view(a, win, axis=2).sum(axis=-1)
    return sliding_window_view(rows, win, axis=1).sum(axis=-1)


def ssim_mean(x, y, win, c1, c2):
    n = float(win * win)
    mx = _box_sums(x, win) / n
    my = _box_sums(y, win) / n
    vx = _box_sums(x * x, win) / n - mx * mx
    vy = _box_sums(y * y, win) / n - my * my
    cxy = _box_sums(x * y, win) / n - mx * my
    local = ((2.0 * mx * my + c1) * (2.0 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2))
    return float(local.mean())


def _pixel_centres(canvas):
    _, h, w = canvas.shape
    py = np.arange(h, dtype=np.float64)[:, None] + 0.5
    px = np.arange(w, dtype=np.float64)[None, :] + 0.5
    return px, py


def _composite(canvas, cov, rgb):
    for ch, value in enumerate(rgb):
        canvas[ch] = np.where(cov > 0.0, canvas[ch] * (1.0 - cov) + value * cov, canvas[ch])


def paint_disc(canvas, cx, cy, radius, r, g, b):
    px, py = _pixel_centres(canvas)
    dx = px - cx
    dy = py - cy
    d = np.sqrt(dx * dx + dy * dy) - radius
    _composite(canvas, np.clip(0.5 - d, 0.0, 1.0), (r, g, b))


def paint_capsule(canvas, x0, y0, x1, y1, half_width, r, g, b):
    px, py = _pixel_centres(canvas)
    ex = x1 - x0
    ey = y1 - y0
    ll = ex * ex + ey * ey
    if ll > 0.0:
        t = np.clip(((px - x0) * ex + (py - y0) * ey) / ll, 0.0, 1.0)
    else:
        t = np.zeros_like(px * py)
    qx = px - (x0 + t * ex)
    qy = py - (y0 + t * ey)
    d = np.sqrt(qx * qx + qy * qy) - half_width
    _composite(canvas, np.clip(0.5 - d, 0.0, 1.0), (r, g, b))
