"""Compare the numba and numpy paths of every hot kernel.

    python benchmarks/bench_kernels.py [--size-scale 1.0] [--repeat 3]

Prints one row per kernel: best-of-repeat wall time for each path, the
speedup, and whether both paths returned identical results.
"""

import argparse
import time

import numpy as np

from ergolab import kernels
from ergolab.packing import covering_grid, greedy_cover


def _best(fn, repeat):
    best = np.inf
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def _same(a, b):
    if isinstance(a, np.ndarray):
        return bool(np.array_equal(a, b) or np.allclose(a, b, rtol=0, atol=1e-12))
    return a == b


def cases(scale):
    rng = np.random.default_rng(0)
    T = int(2_000_000 * scale)
    bits = rng.integers(0, 2, size=T + 52, dtype=np.uint8)
    tau = rng.random(T)

    r, s = 1.0, 1.0 / 64
    cand = rng.uniform(-r, r, size=(int(40_000 * scale), 2))
    cand = cand[np.linalg.norm(cand, axis=1) <= r - s]
    cover = greedy_cover(2, r, s).centers
    grid = covering_grid(2, r, s / 8)

    yield "doubling_orbit", (lambda: kernels.doubling_orbit_nb(bits, T)), (lambda: kernels.doubling_orbit_np(bits, T))
    yield ("affine_recursion", (lambda: kernels.affine_recursion_nb(tau, 0.5, 0.5)),
           (lambda: kernels.affine_recursion_np(tau, 0.5, 0.5)))
    empty = np.zeros((0, 2))
    yield ("greedy_extend", (lambda: kernels.greedy_extend_nb(empty, cand, s, r)),
           (lambda: kernels.greedy_extend_np(empty, cand, s, r)))
    yield ("uncovered_count", (lambda: kernels.uncovered_count_nb(cover, grid, s, r)),
           (lambda: kernels.uncovered_count_np(cover, grid, s, r)))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size-scale", type=float, default=1.0)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    print(f"{'kernel':<18}{'numba [s]':>12}{'numpy [s]':>12}{'speedup':>10}  agree")
    for name, nb, np_ in cases(args.size_scale):
        nb()  # compile outside the timed region
        t_nb, r_nb = _best(nb, args.repeat)
        t_np, r_np = _best(np_, args.repeat)
        print(f"{name:<18}{t_nb:>12.4f}{t_np:>12.4f}{t_np / t_nb:>10.1f}  {_same(r_nb, r_np)}")


if __name__ == "__main__":
    main()
