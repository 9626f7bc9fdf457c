"""Time the numba kernels against their pure-numpy fallbacks.

    python benchmarks/bench_kernels.py [--points 20000] [--repeat 5]

Both implementations are called directly, so the WHIRLS_DISABLE_NUMBA
switch does not matter here.  The first numba call (compilation or cache
load) is excluded from the timings.
"""

import argparse
import time

import numpy as np

from whirls import _kernels
from whirls.geometry import Annulus, radial_coords, random_points
from whirls.variation import random_divfree
from whirls.whirl import WhirlSpec


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def bench_jet(n, points, repeat, rng):
    ann = Annulus(n, 1.0, 2.0)
    spec = WhirlSpec.linear(ann, tuple(range(1, ann.d + 1)))
    x = random_points(ann, points, rng)
    f, df, d2f = spec.angles.jet(radial_coords(x, ann)[0])
    args = (x, f, df, d2f, n, ann.d, ann.N)
    _kernels._jet_numba(*args)
    t_np = best_of(lambda: _kernels.whirl_jet_numpy(*args), repeat)
    t_nb = best_of(lambda: _kernels._jet_numba(*args), repeat)
    gap = max(float(np.max(np.abs(a - b))) for a, b in zip(_kernels.whirl_jet_numpy(*args),
                                                             _kernels._jet_numba(*args)))
    return t_np, t_nb, gap


def bench_flow(n, points, repeat, rng):
    ann = Annulus(n, 1.0, 2.0)
    v = random_divfree(ann, rng)
    y0 = v.c + 0.5 * v.R * rng.uniform(-1, 1, size=(points, n)) / np.sqrt(n)
    args = (y0, 0.05, 32, v.c, v.R, v.amp, v.K, v.L)
    _kernels.flow_numba(*args)
    t_np = best_of(lambda: _kernels.flow_numpy(*args), repeat)
    t_nb = best_of(lambda: _kernels.flow_numba(*args), repeat)
    a, b = _kernels.flow_numpy(*args), _kernels.flow_numba(*args)
    gap = max(float(np.max(np.abs(a[0] - b[0]))), float(np.max(np.abs(a[1] - b[1]))))
    return t_np, t_nb, gap


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--points", type=int, default=20000)
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args()
    if not _kernels.HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")
    rng = np.random.default_rng(0)
    print(f"{'kernel':<12}{'n':>3}{'points':>9}{'numpy [s]':>12}{'numba [s]':>12}{'speedup':>9}{'max diff':>11}")
    for n in (2, 3, 4, 6):
        t_np, t_nb, gap = bench_jet(n, args.points, args.repeat, rng)
        print(f"{'whirl_jet':<12}{n:>3}{args.points:>9}{t_np:>12.4f}{t_nb:>12.4f}{t_np / t_nb:>9.1f}{gap:>11.1e}")
    for n in (2, 3, 4):
        pts = max(args.points // 10, 100)
        t_np, t_nb, gap = bench_flow(n, pts, args.repeat, rng)
        print(f"{'flow':<12}{n:>3}{pts:>9}{t_np:>12.4f}{t_nb:>12.4f}{t_np / t_nb:>9.1f}{gap:>11.1e}")


if __name__ == "__main__":
    main()
