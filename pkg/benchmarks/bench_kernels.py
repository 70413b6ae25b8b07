"""Compare the compiled and numpy kernel backends.

    python3 benchmarks/bench_kernels.py [--repeat N]

Prints one row per kernel with the median time of each backend, the speedup,
and the largest absolute difference between the two outputs.
"""

import argparse
import statistics
import time

import numpy as np

from nasatd3 import kernels
from nasatd3.envs import ReacherSparseEnv, ValveTurnEnv


def median_time(fn, repeat):
    fn()  # warm up
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times)


def cases(rng):
    x = rng.random((9, 84, 84))
    y = np.clip(x + rng.normal(0, 0.1, x.shape), 0, 1)
    c1, c2 = (0.01) ** 2, (0.03) ** 2

    def ssim(mod):
        return mod.ssim_mean(x, y, 7, c1, c2)

    def disc(mod):
        canvas = np.zeros((84, 84, 3))
        mod.paint_disc(canvas, 40.3, 37.9, 11.5, 0.9, 0.2, 0.1)
        return canvas

    def capsule(mod):
        canvas = np.zeros((84, 84, 3))
        mod.paint_capsule(canvas, 42.0, 42.0, 70.2, 25.7, 3.0, 0.1, 0.8, 0.3)
        return canvas

    return {"ssim 9x84x84": ssim, "paint_disc 84x84": disc, "paint_capsule 84x84": capsule}


def render_case(make):
    env = make()
    env.reset(np.random.default_rng(0))

    def run(mod):
        orig = kernels.paint_disc, kernels.paint_capsule
        kernels.paint_disc, kernels.paint_capsule = mod.paint_disc, mod.paint_capsule
        try:
            return env.render()
        finally:
            kernels.paint_disc, kernels.paint_capsule = orig

    return run


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=50)
    args = ap.parse_args(argv)
    try:
        fast = kernels.get_backend("cython")
    except ImportError:
        print("compiled backend not built; nothing to compare")
        return 1
    slow = kernels.get_backend("python")
    table = cases(np.random.default_rng(0))
    table["render valve"] = render_case(lambda: ValveTurnEnv(size=84))
    table["render reacher"] = render_case(lambda: ReacherSparseEnv(size=84))
    print(f"{'kernel':<22}{'python ms':>11}{'cython ms':>11}{'speedup':>9}{'max |diff|':>12}")
    for name, fn in table.items():
        tp = median_time(lambda: fn(slow), args.repeat)
        tc = median_time(lambda: fn(fast), args.repeat)
        a, b = fn(slow), fn(fast)
        diff = float(np.max(np.abs(np.asarray(a) - np.asarray(b))))
        print(f"{name:<22}{tp * 1e3:>11.3f}{tc * 1e3:>11.3f}{tp / tc:>8.1f}x{diff:>12.1e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
