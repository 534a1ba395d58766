"""Compare the compiled and pure-Python kernel backends.

    python benchmarks/bench_kernels.py [--n 1024 4096 16384] [--repeat 200]

Prints per-call timings of ``evaluate`` and ``flow_step`` for each backend
and each nonlinearity, plus the wall time of a full ground-state solve.
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from nlsvirial import RadialGrid
from nlsvirial import _kernels_py
from nlsvirial.model import Nonlinearity

try:
    from nlsvirial import _kernels as _kernels_cy
except ImportError:
    _kernels_cy = None

CASES = [Nonlinearity.saturable(), Nonlinearity.square_root(), Nonlinearity.power_law(2.0)]

SOLVE_SNIPPET = """
import time
from nlsvirial import Nonlinearity
from nlsvirial.solver import ground_state
t = time.perf_counter()
r = ground_state(Nonlinearity.saturable(), 30.0)
print(time.perf_counter() - t, r.iters)
"""


def bench_kernels(mod, grid, nl, repeat):
    u = np.exp(-0.5 * grid.r ** 2)
    u[-1] = 0.0
    W = grid.weights()
    c = grid.face_coefficients
    up, lo = grid.laplacian_coefficients
    out = np.empty_like(u)
    p = nl.p or 0.0
    t_eval = timeit.timeit(lambda: mod.evaluate(u, nl.code, p, 30.0, W, c, up, lo),
                           number=repeat) / repeat
    t_step = timeit.timeit(lambda: mod.flow_step(u, nl.code, p, 30.0, 0.05, 1.0, W, up, lo, out),
                           number=repeat) / repeat
    return t_eval, t_step


def bench_solve(backend):
    env = dict(os.environ, NLSVIRIAL_BACKEND=backend)
    res = subprocess.run([sys.executable, "-c", SOLVE_SNIPPET], env=env,
                         capture_output=True, text=True, check=True)
    secs, iters = res.stdout.split()
    return float(secs), int(iters)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, nargs="+", default=[1024, 4096, 16384])
    ap.add_argument("--repeat", type=int, default=200)
    args = ap.parse_args()
    backends = [("python", _kernels_py)]
    if _kernels_cy is not None:
        backends.insert(0, ("cython", _kernels_cy))
    else:
        print("compiled extension not built; timing the python backend only")

    print(f"{'n':>7} {'kind':<14} {'backend':<8} {'evaluate us':>12} {'flow_step us':>13}")
    for n in args.n:
        grid = RadialGrid(24.0, n)
        for nl in CASES:
            for name, mod in backends:
                te, ts = bench_kernels(mod, grid, nl, args.repeat)
                print(f"{n:>7} {nl.label():<14} {name:<8} {te * 1e6:>12.1f} {ts * 1e6:>13.1f}")

    print("\nfull solve, saturable Gamma=30, default grid")
    for name, _ in backends:
        secs, iters = bench_solve(name)
        print(f"  {name:<8} {secs:8.3f} s  ({iters} iterations)")


if __name__ == "__main__":
    main()
