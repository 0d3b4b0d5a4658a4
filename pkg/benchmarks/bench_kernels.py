"""Time the numba kernels against their numpy fallbacks.

Both variants are imported in-process (the numba ones are compiled
first, outside the timed region) and checked to return identical
results before they are timed.

    python benchmarks/bench_kernels.py [--repeat 3] [--json out.json]
"""
import argparse
import json
import time

import numpy as np

from sandstab import HeightConfig, Volume
from sandstab.kernels import HAS_NUMBA, burning, topple, walks
from sandstab.lattice import neighbor_table
from sandstab.rng import uniform_array


def _best(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def _stabilize_case(L, value):
    V = Volume.box(L, 2)
    nbr = neighbor_table(V)
    h0 = np.full(V.size, value, dtype=np.int64)

    def run(kernel):
        h, m = h0.copy(), np.zeros(V.size, dtype=np.int64)
        kernel(h, m, nbr, 10**9)
        return h, m

    return run


def _peel_case(L):
    V = Volume.box(L, 2)
    nbr = neighbor_table(V)
    u = uniform_array(1, 99, np.arange(V.size))
    h = 1 + (u * 4).astype(np.int64)
    return lambda kernel: kernel(h, nbr)


def _waves_case(L):
    V = Volume.box(L, 2)
    nbr = neighbor_table(V)
    eta = HeightConfig.constant(V, 4).heights.reshape(-1)
    origin = V.index((0, 0))

    def run(kernel):
        h, m = eta.copy(), np.zeros(V.size, dtype=np.int64)
        h[origin] += 1
        status, w, sites, offsets = kernel(h, m, nbr, origin, 10**6)
        return m, np.asarray(offsets)

    return run


def _walk_case(L, n_walks):
    V = Volume.box(L, 2)
    nbr = neighbor_table(V)
    x = V.index((0, 0))
    return lambda kernel: kernel(nbr, x, x, n_walks, np.uint64(7), 10**8)


def cases(scale):
    s = scale
    return [
        ("stabilize all-8 %dx%d" % (16 * s, 16 * s), _stabilize_case(16 * s, 8),
         topple._stabilize_fifo_nb, topple._stabilize_sweep_np, lambda a, b: all(np.array_equal(x, y) for x, y in zip(a, b))),
        ("peel %dx%d" % (64 * s, 64 * s), _peel_case(64 * s), burning._peel_nb, burning._peel_np, np.array_equal),
        ("waves all-4 %dx%d" % (16 * s + 1, 16 * s + 1), _waves_case(16 * s + 1), topple._waves_nb, topple._waves_np,
         lambda a, b: all(np.array_equal(x, y) for x, y in zip(a, b))),
        ("walk visits %dx%d, %d walks" % (16 * s, 16 * s, 2000 * s), _walk_case(16 * s, 2000 * s),
         walks._count_visits_nb, walks._count_visits_np, np.array_equal),
    ]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--scale", type=int, default=2, help="problem size multiplier")
    ap.add_argument("--json", help="write results here")
    args = ap.parse_args(argv)
    if not HAS_NUMBA:
        print("numba disabled (SANDSTAB_NO_NUMBA set): both columns run the fallback")
    rows = []
    print(f"{'case':38s} {'numba s':>10s} {'numpy s':>10s} {'speedup':>8s}")
    for name, run, fast, slow, same in cases(args.scale):
        a = run(fast)  # compile + reference result
        b = run(slow)
        if not same(a, b):
            raise SystemExit(f"{name}: numba and numpy results differ")
        t_fast = _best(lambda: run(fast), args.repeat)
        t_slow = _best(lambda: run(slow), args.repeat)
        rows.append({"case": name, "numba_s": t_fast, "numpy_s": t_slow, "speedup": t_slow / t_fast})
        print(f"{name:38s} {t_fast:10.4f} {t_slow:10.4f} {t_slow / t_fast:8.1f}x")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)


if __name__ == "__main__":
    main()
