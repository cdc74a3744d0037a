"""Compare the compiled kernels with the numpy fallback.

    python3 benchmarks/bench_kernels.py [--points N] [--repeat R]

Both backends are imported directly, so the comparison does not depend on
ISOFLECT_PURE_PYTHON.  Results are checked for agreement before timing.
"""

import argparse
import timeit

import numpy as np

from isoflect import _kernels_py

try:
    from isoflect import _ckernels
except ImportError:  # extension not built
    _ckernels = None


def cases(points: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    w = np.sqrt(rng.uniform(0, 1, points)) * np.exp(1j * rng.uniform(0, 2 * np.pi, points))
    inner = 0.999 * w
    return [
        ("sc_map_many n=2", lambda m: m.sc_map_many(2, w)),
        ("sc_map_many n=4", lambda m: m.sc_map_many(4, w)),
        ("polygon_height_many n=2", lambda m: m.polygon_height_many(2, inner)),
        ("sc_vertex_radius n=3", lambda m: m.sc_vertex_radius(3)),
    ]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--points", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    backends = [("numpy", _kernels_py)]
    if _ckernels is not None:
        backends.append(("cython", _ckernels))
    else:
        print("compiled kernels not available; timing the fallback only")
    print(f"{'kernel':28s}" + "".join(f"{name:>12s}" for name, _ in backends) + "     speedup   max|diff|")
    for label, fn in cases(args.points):
        results = [np.asarray(fn(mod)) for _, mod in backends]
        times = [min(timeit.repeat(lambda m=mod: fn(m), number=1, repeat=args.repeat)) for _, mod in backends]
        diff = float(np.max(np.abs(results[-1] - results[0]))) if len(results) > 1 else 0.0
        speed = times[0] / times[-1] if len(times) > 1 else 1.0
        print(f"{label:28s}" + "".join(f"{t * 1e3:10.2f}ms" for t in times) + f"  {speed:9.1f}x  {diff:9.2e}")


if __name__ == "__main__":
    main()
