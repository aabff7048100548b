"""Benchmark the compiled boundary-operator assembly against the pure-NumPy
fallback.

Usage:  python3 benchmarks/bench_kernels.py [--n 4 8] [--threads 1 4]

Reports wall time per backend and the maximum relative Frobenius difference
between the two operator sets (they should agree to ~1e-13).
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from fembem.kernels import assemble_operators, get_backend
from fembem.meshes import cube_mesh, extract_boundary
from fembem.tracespace import TraceSpaces


def bench(n, threads, k=2.0):
    surf = extract_boundary(cube_mesh(1.0, n))
    spaces = TraceSpaces(surf, 1)
    results = {}
    for backend in ("python", "cython"):
        try:
            get_backend(backend)
        except ImportError:
            print(f"  {backend:7s}  (unavailable, skipped)")
            continue
        t0 = time.perf_counter()
        ops = assemble_operators(spaces, k, backend=backend, threads=threads)
        dt = time.perf_counter() - t0
        results[backend] = (dt, ops)
        print(f"  {backend:7s}  {dt:8.2f} s   "
              f"({len(surf.triangles)} panels, {threads} thread(s))")
    if len(results) == 2:
        (_, a), (_, b) = results["python"], results["cython"]
        diff = max(np.linalg.norm(a[x] - b[x]) / np.linalg.norm(a[x])
                   for x in a)
        speedup = results["python"][0] / results["cython"][0]
        print(f"  max relative difference {diff:.2e}, speedup {speedup:.1f}x")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, nargs="+", default=[4, 8])
    ap.add_argument("--threads", type=int, nargs="+", default=[1])
    args = ap.parse_args()
    for n in args.n:
        for t in args.threads:
            print(f"n = {n}:")
            bench(n, t)


if __name__ == "__main__":
    main()
