"""Time the numba and numpy overlap kernels on random box sets.

    python3 benchmarks/bench_kernels.py [--sizes 20 100 400] [--repeat 20]
"""

from __future__ import annotations

import argparse
import math
import timeit

import numpy as np

from scenesmith import _kernels


def random_rows(n: int, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    yaw = rng.uniform(-math.pi, math.pi, n)
    z0 = rng.uniform(0, 1, n)
    return np.column_stack([
        rng.uniform(0, 10, n), rng.uniform(0, 10, n),
        rng.uniform(0.05, 0.75, n), rng.uniform(0.05, 0.75, n),
        np.cos(yaw), np.sin(yaw), z0, z0 + rng.uniform(0.05, 1, n),
    ])


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[20, 100, 400])
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args()
    backends = {"numpy": _kernels.overlap_pairs_numpy}
    if _kernels.HAVE_NUMBA:
        backends["numba"] = _kernels.overlap_pairs_numba
    else:
        print("numba not available; timing numpy only")
    print(f"{'boxes':>6} " + " ".join(f"{name:>12}" for name in backends) + "   (ms per all-pairs scan)")
    for n in args.sizes:
        boxes = random_rows(n)
        row = []
        for fn in backends.values():
            fn(boxes, 1e-3)  # warm up / compile
            best = min(timeit.repeat(lambda: fn(boxes, 1e-3), number=1, repeat=args.repeat))
            row.append(best * 1000)
        print(f"{n:>6} " + " ".join(f"{t:>12.3f}" for t in row))


if __name__ == "__main__":
    main()
