"""Compare the compiled and NumPy kernels on the circle case.

    python3 benchmarks/bench_kernels.py [--sizes 63 127 255] [--repeat 5]
"""

import argparse
import logging
import time

import numpy as np

from gfm_poisson import _kernels_py
from gfm_poisson.cases import get_case
from gfm_poisson.grid import Grid
from gfm_poisson.stencil import assemble_stencil_system

try:
    from gfm_poisson import _kernels as _kernels_c
except ImportError:
    _kernels_c = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def bench(size, repeat):
    case = get_case("circle")
    s = assemble_stencil_system(case, Grid(*case.domain, size, size))
    ops = (s.diag, s.west, s.east, s.south, s.north)
    x = np.random.default_rng(0).standard_normal(s.rhs.shape)
    out = {}
    for name, mod in (("python", _kernels_py), ("cython", _kernels_c)):
        if mod is None:
            continue
        mv = best_of(lambda: [mod.matvec5(*ops, x) for _ in range(100)], repeat) / 100

        def solve():
            sol = np.zeros_like(s.rhs)
            return mod.cg5(*ops, s.rhs, sol, 1e-10, 100000, True, None)
        iters = solve()[0]
        cg = best_of(solve, repeat)
        out[name] = (mv, cg, iters)
    return out


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--sizes", type=int, nargs="+", default=[63, 127, 255])
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args()
    logging.disable(logging.WARNING)
    if _kernels_c is None:
        print("compiled kernels not built; showing the NumPy backend only")
    print(f"{'I=J':>5} {'backend':>8} {'matvec_us':>10} {'cg_ms':>9} {'iters':>6} {'speedup':>8}")
    for n in args.sizes:
        res = bench(n, args.repeat)
        base = res["python"][1]
        for name, (mv, cg, it) in res.items():
            print(f"{n:>5} {name:>8} {mv * 1e6:>10.1f} {cg * 1e3:>9.2f} {it:>6} {base / cg:>8.2f}")


if __name__ == "__main__":
    main()
