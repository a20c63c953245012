"""Timing comparison between the compiled stepper and the numpy fallback.

Both backends march the same RK4 scheme; this module times one
representative endpoint-value batch against each and reports the
speedup together with the largest deviation between their results,
which should sit at rounding level.  Run as ``python -m delaysl.bench``.
"""

from __future__ import annotations

import argparse
import os
import time

import numpy as np

from ._backend import get_backend
from .delay_solver import PI, DelaySetup, endpoint_values, grid_breakpoints
from .gridfn import sample_function

__all__ = ["run", "main"]


def _sample_problem(a: float, segment_nodes: int):
    def q(x):
        return np.where(x > a, np.sin(3.0 * x), 0.0).astype(complex)

    return sample_function(q, grid_breakpoints(a, 0.0, PI), segment_nodes)


def run(batch: int = 64, steps_per_a: int = 512, repeats: int = 3) -> int:
    a = PI / 4.0
    setup = DelaySetup(a=a, nu=1, segment_nodes=129, steps_per_delay=steps_per_a)
    q = _sample_problem(a, setup.segment_nodes)
    lam = np.linspace(1.0, 380.0, batch) + 0.5j
    saved = os.environ.get("DELAYSL_BACKEND")
    times = {}
    values = {}
    try:
        for name in ("compiled", "pure"):
            try:
                get_backend(name)
            except ImportError:
                print(f"{name:>8}: not available")
                continue
            os.environ["DELAYSL_BACKEND"] = name
            best = float("inf")
            for _ in range(repeats):
                t0 = time.perf_counter()
                ys, _ = endpoint_values(q, setup, 0, lam)
                best = min(best, time.perf_counter() - t0)
            times[name] = best
            values[name] = ys
            print(f"{name:>8}: {1e3 * best:9.2f} ms for {batch} spectral points")
    finally:
        if saved is None:
            os.environ.pop("DELAYSL_BACKEND", None)
        else:
            os.environ["DELAYSL_BACKEND"] = saved
    if len(times) == 2:
        gap = float(np.max(np.abs(values["compiled"] - values["pure"])))
        print(f"speedup: {times['pure'] / times['compiled']:.1f}x, max deviation {gap:.3e}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="delaysl.bench", description="Compare the stepper backends."
    )
    parser.add_argument("--batch", type=int, default=64, help="spectral points per solve")
    parser.add_argument("--steps", type=int, default=512, help="RK4 steps per delay length")
    parser.add_argument("--repeats", type=int, default=3, help="timing repeats (best wins)")
    args = parser.parse_args(argv)
    return run(batch=args.batch, steps_per_a=args.steps, repeats=args.repeats)


if __name__ == "__main__":
    raise SystemExit(main())
