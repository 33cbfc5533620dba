"""Compare the compiled kernels with the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--repeat 3]

Prints one line per kernel with the best wall time of each backend and the
speedup. Both backends are fed identical inputs and their outputs are
checked for equality before timing.
"""

import argparse
import math
import time

import numpy as np

from pinpat import _pykernels as py

try:
    from pinpat import _ckernels as cc
except ImportError:  # extension not built
    cc = None


def _best(fn, repeat):
    best = math.inf
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best


def _arc_union(rng, n_arcs, max_len):
    from pinpat.torus import TorusSet

    s = rng.uniform(0, 2 * math.pi, n_arcs)
    E = TorusSet(zip(s, s + rng.uniform(0, max_len, n_arcs)))
    return E.starts.tolist(), E.ends.tolist()


def cases(rng):
    starts, ends = _arc_union(rng, 40, 0.05)
    shifts = [2 * math.pi * j * 7 % (2 * math.pi) for j in range(6)]
    av_s, av_e = [0.0], [0.9 * 2 * math.pi / 500]
    from pinpat.torus import interval_ap_free_bounds

    b3 = list(interval_ap_free_bounds(36, 3))
    b4 = list(interval_ap_free_bounds(30, 4))
    return [
        ("shifted_intersection x2000", lambda k: [k.shifted_intersection(starts, ends, shifts) for _ in range(2000)]),
        ("first_rotated_ap n+1=499 avoider", lambda k: k.first_rotated_ap(av_s, av_e, 498, 3)),
        ("first_rotated_ap n+1=101 k=5 dense", lambda k: [k.first_rotated_ap(starts, ends, 100, 5) for _ in range(20)]),
        ("max_ap_free Z/36 m=3", lambda k: k.max_ap_free(36, 3, True, b3)),
        ("max_ap_free Z/30 m=4", lambda k: k.max_ap_free(30, 4, True, b4)),
    ]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    if cc is None:
        print("compiled extension not available; build with `python3 setup.py build_ext --inplace`")
        return 1
    rng = np.random.default_rng(args.seed)
    print(f"{'kernel':40s} {'python [s]':>12s} {'compiled [s]':>13s} {'speedup':>8s}")
    for name, fn in cases(rng):
        if fn(py) != fn(cc):
            print(f"{name}: backends disagree")
            return 1
        tp = _best(lambda: fn(py), args.repeat)
        tc = _best(lambda: fn(cc), args.repeat)
        print(f"{name:40s} {tp:12.4f} {tc:13.4f} {tp / tc:8.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
