"""Time the compiled time loop against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 3] [--sizes 2000,8000,20000]

Both back ends integrate the same run; the table reports the best wall
time of each, the speed-up and the largest pointwise difference.  The run
converges to an equilibrium, so rounding differences stay small (a chaotic
run would amplify them).
"""

import argparse
import time

import numpy as np

from fracsunflower import InitialData, SolverConfig, SystemParams, integrate
from fracsunflower._backend import BACKEND


def best_time(fn, repeat):
    best = np.inf
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--sizes", default="2000,8000,20000", help="step counts, comma separated")
    args = ap.parse_args()
    if BACKEND != "cython":
        raise SystemExit("compiled kernel not built; run `pip install --no-build-isolation -e .` first")

    params = SystemParams(l=14.0, m=5.6, alpha=0.85, tau=4.0)
    init = InitialData(history_value=6.9, x0_prime=2.5)
    k = 100
    print(f"{'steps':>8} {'cython [s]':>11} {'python [s]':>11} {'speed-up':>9} {'max |diff|':>11}")
    for steps in (int(s) for s in args.sizes.split(",")):
        cfg = SolverConfig(k=k, T=steps * params.tau / k)
        tc, a = best_time(lambda: integrate(params, init, cfg, backend="cython"), args.repeat)
        tp, b = best_time(lambda: integrate(params, init, cfg, backend="python"), args.repeat)
        diff = float(np.max(np.abs(a.x - b.x)))
        print(f"{steps:>8} {tc:>11.4f} {tp:>11.4f} {tp / tc:>9.2f} {diff:>11.2e}")


if __name__ == "__main__":
    main()
