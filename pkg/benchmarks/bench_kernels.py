"""Compiled vs pure-Python kernel timings.

    python3 benchmarks/bench_kernels.py [--units 200]
"""

import argparse
import math
import time

from randlyap import _backend
from randlyap.figure8 import GgsParams, fig8_lyapunov_run
from randlyap.noise import BoxIndexDist, RngStream
from randlyap.ottyorke import FlowParams, run_oy_experiment


def _time(fn, repeat=3):
    best = math.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--units", type=int, default=200, help="Ott-Yorke unit times (h = 0.001)")
    ap.add_argument("--steps", type=int, default=200_000, help="figure-8 steps")
    args = ap.parse_args()

    cases = {
        f"oy-ftle T={args.units}": lambda: run_oy_experiment(FlowParams(T=args.units), RngStream(0)),
        f"fig8 steps={args.steps}": lambda: fig8_lyapunov_run(
            GgsParams(), BoxIndexDist.geometric(0.5), (0.0, 1.0), args.steps, RngStream(0)
        ),
    }
    names = _backend.available()
    print(f"{'case':<28}" + "".join(f"{n:>12}" for n in names) + ("     speedup" if len(names) > 1 else ""))
    for label, fn in cases.items():
        row = []
        for n in names:
            prev = _backend.use_backend(n)
            try:
                row.append(_time(fn, repeat=1 if n == "python" else 3))
            finally:
                _backend.use_backend(prev)
        line = f"{label:<28}" + "".join(f"{t:>11.3f}s" for t in row)
        if len(row) > 1:
            line += f"{row[1] / row[0]:>11.1f}x"
        print(line)


if __name__ == "__main__":
    main()
