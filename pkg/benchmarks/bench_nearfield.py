"""Compare the compiled near-field kernel against the numpy fallback.

Usage: python benchmarks/bench_nearfield.py [--points N] [--side S] [--repeat R]
"""

import argparse
import time

import numpy as np

from starris import _nearfield_py
from starris.surface import Aperture

try:
    from starris import _nearfield
except ImportError:
    _nearfield = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=40_000)
    ap.add_argument("--side", type=int, default=16, help="aperture is side x side elements")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    aperture = Aperture.square(args.side, 1.0)
    elems = aperture.element_positions
    rng = np.random.default_rng(0)
    pts = rng.uniform(-50, 50, (args.points, 3))
    pts[:, 2] = np.abs(pts[:, 2]) + 1.0
    w = np.exp(1j * rng.uniform(0, 2 * np.pi, len(elems)))

    print(f"{args.points} points x {len(elems)} elements, best of {args.repeat}")
    t_py, ref = best_of(lambda: _nearfield_py.near_field_sum(pts, elems, w, 1.0, 1.0, True), args.repeat)
    print(f"numpy   {t_py:8.3f} s")
    if _nearfield is None:
        print("cython  not built")
        return
    t_cy, got = best_of(lambda: _nearfield.near_field_sum(pts, elems, w, 1.0, 1.0, True), args.repeat)
    err = np.max(np.abs(got[0] - ref[0]) / np.abs(ref[0]))
    print(f"cython  {t_cy:8.3f} s  speedup {t_py / t_cy:5.2f}x  max rel diff {err:.1e}")


if __name__ == "__main__":
    main()
