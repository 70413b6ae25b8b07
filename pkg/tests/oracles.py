"""Slow, independent reference computations used by the tests."""

import math


def ssim_bruteforce(x, y, window=7, k1=0.01, k2=0.03, L=1.0):
    """Scalar SSIM: explicit loops over every channel and window position."""
    c1 = (k1 * L) ** 2
    c2 = (k2 * L) ** 2
    C, H, W = len(x), len(x[0]), len(x[0][0])
    n = window * window
    total = 0.0
    count = 0
    for c in range(C):
        for i in range(H - window + 1):
            for j in range(W - window + 1):
                xs = [float(x[c][i + u][j + v]) for u in range(window) for v in range(window)]
                ys = [float(y[c][i + u][j + v]) for u in range(window) for v in range(window)]
                mx = math.fsum(xs) / n
                my = math.fsum(ys) / n
                vx = math.fsum((a - mx) ** 2 for a in xs) / n
                vy = math.fsum((b - my) ** 2 for b in ys) / n
                cxy = math.fsum((a - mx) * (b - my) for a, b in zip(xs, ys)) / n
                total += ((2 * mx * my + c1) * (2 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2))
                count += 1
    return total / count


def matmul(a, b):
    return [[math.fsum(a[i][k] * b[k][j] for k in range(len(b))) for j in range(len(b[0]))] for i in range(len(a))]


def central_difference(f, params, h=1e-5, max_entries=None, rng=None):
    """Numerical gradient of scalar ``f()`` w.r.t. (a sample of) entries of each tensor in ``params``.

    Returns a list of (name, flat_index, numeric, noise) tuples. numeric is the
    central difference at step h; noise bounds its own error, the float64
    rounding of the quotient plus the Richardson truncation estimate
    |D(2h) - D(h)| / 3. ``f`` may instead return (value, piece); when the
    pieces over [x-2h, x+2h] are not all equal the interval straddles a kink
    and numeric is None.
    """
    import sys

    import torch

    eps = sys.float_info.epsilon
    out = []
    with torch.no_grad():
        for name, t in params.items():
            flat = t.view(-1)
            idx = range(flat.numel())
            if max_entries is not None and flat.numel() > max_entries:
                idx = rng.choice(flat.numel(), size=max_entries, replace=False).tolist()
            for i in idx:
                old = flat[i].item()
                vals = [f()]
                for step in (h, -h, 2 * h, -2 * h):
                    flat[i] = old + step
                    vals.append(f())
                flat[i] = old
                if isinstance(vals[0], tuple):
                    if len({piece for _, piece in vals}) > 1:
                        out.append((name, i, None, None))
                        continue
                    vals = [v for v, _ in vals]
                _, fp, fm, fp2, fm2 = vals
                d1 = (fp - fm) / (2 * h)
                d2 = (fp2 - fm2) / (4 * h)
                noise = 4 * eps * max(map(abs, vals)) / h + abs(d2 - d1) / 3
                out.append((name, i, d1, noise))
    return out
