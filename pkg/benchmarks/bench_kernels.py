#!/usr/bin/env python3
"""Benchmark the compiled lattice kernel against the numpy fallback.

Runs the rescaled-family weighted accumulation (the hot loop of the
sharpness experiments) at a few dyadic scales on both backends and prints
the timings plus the relative value agreement.

Usage: python benchmarks/bench_kernels.py [--dmax 5]
"""

import argparse
import importlib
import os
import time
from fractions import Fraction

import numpy as np


def run_once(delta_log2: int, backend: str):
    os.environ.pop("QSDEC_FORCE_NUMPY", None)
    if backend == "numpy":
        os.environ["QSDEC_FORCE_NUMPY"] = "1"
    import qsdec.kernels
    import qsdec.decnum.ratios

    importlib.reload(qsdec.kernels)
    importlib.reload(qsdec.decnum.ratios)
    from qsdec.decnum.families import example_family_rescaled
    from qsdec.quadforms import parabola

    fam = example_family_rescaled(parabola(1), Fraction(1, 2**delta_log2))
    t0 = time.time()
    rep = qsdec.decnum.ratios.dec_ratio(fam, 6.0, method="rescaled")
    dt = time.time() - t0
    assert rep["method"] == "rescaled"
    return rep["ratio"], dt, rep["backend"]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--dmin", type=int, default=3)
    ap.add_argument("--dmax", type=int, default=5)
    args = ap.parse_args()

    print(f"{'delta':>8} {'cython (s)':>12} {'numpy (s)':>12} {'speedup':>9} {'rel diff':>10}")
    for k in range(args.dmin, args.dmax + 1):
        vals = {}
        times = {}
        for backend in ("cython", "numpy"):
            try:
                v, dt, used = run_once(k, backend)
            except ImportError:
                print(f"  2^-{k}: backend {backend} unavailable")
                continue
            if used != backend:
                print(f"  2^-{k}: requested {backend}, got {used} (extension missing?)")
            vals[backend], times[backend] = v, dt
        if len(vals) == 2:
            rel = abs(vals["cython"] / vals["numpy"] - 1)
            print(f"{'2^-' + str(k):>8} {times['cython']:12.3f} {times['numpy']:12.3f} "
                  f"{times['numpy'] / max(times['cython'], 1e-9):9.2f} {rel:10.2e}")


if __name__ == "__main__":
    main()
