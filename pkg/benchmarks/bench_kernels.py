#!/usr/bin/env python3
"""Benchmark the compiled propagation kernels against the pure-Python twins.

Micro-benchmarks run both kernel modules in-process on identical inputs;
`--solve` additionally times the full four-case eigenvalue regression per
backend by re-running the CLI bench in a subprocess (QSHOOT_PURE=1 selects
the fallback there).
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from qshoot import _kernels_py
from qshoot import engine
from qshoot.potentials import Cornell, HybridLog

try:
    from qshoot import _kernels
except ImportError:
    _kernels = None


def _time(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_scalar(mod, n_points, repeats):
    mesh = engine.RadialMesh(1e-5, 42.4264, n_points)
    g = engine.scalar_coefficient(Cornell(0.1, 0.5), 1, 1.0, mesh)
    y = np.empty(n_points)
    return _time(lambda: mod.propagate_scalar(g, 2.2, mesh.h, 1e-10, 2e-5, y),
                 repeats)


def bench_coupled(mod, n_points, repeats):
    mesh = engine.RadialMesh(1e-5, 30.0, n_points)
    pot = HybridLog(1.0, 0.5, 2.0, 0.1, l=1, m=1.0)
    g = engine.matrix_coefficient(pot, 1.0, mesh)
    u0 = 1e-5 * np.eye(2)
    du0 = np.eye(2)
    traj = np.empty((n_points, 2, 2))
    det = np.empty(n_points)
    return _time(lambda: mod.propagate_coupled(g, 1.1, mesh.h, u0, du0,
                                               traj, det), repeats)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--points", type=int, default=20001)
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--solve", action="store_true",
                        help="also run the full eigenvalue bench per backend")
    args = parser.parse_args()

    mods = [("python", _kernels_py)]
    if _kernels is not None:
        mods.insert(0, ("compiled", _kernels))
    else:
        print("compiled extension not built; benchmarking the fallback only")

    print("%-10s %-22s %-22s" % ("backend", "scalar step loop [ms]",
                                 "coupled 2x2 loop [ms]"))
    results = {}
    for name, mod in mods:
        ts = bench_scalar(mod, args.points, args.repeats) * 1e3
        tc = bench_coupled(mod, args.points, max(1, args.repeats // 2)) * 1e3
        results[name] = (ts, tc)
        print("%-10s %-22.3f %-22.3f" % (name, ts, tc))
    if len(results) == 2:
        print("%-10s %-22s %-22s" % (
            "speedup",
            "%.1fx" % (results["python"][0] / results["compiled"][0]),
            "%.1fx" % (results["python"][1] / results["compiled"][1])))

    if args.solve:
        for name, env_extra in (("compiled", {}), ("python", {"QSHOOT_PURE": "1"})):
            if name == "compiled" and _kernels is None:
                continue
            env = dict(os.environ, **env_extra)
            print("\nfull bench, %s backend:" % name)
            t0 = time.perf_counter()
            proc = subprocess.run([sys.executable, "-m", "qshoot.cli", "bench"],
                                  env=env, capture_output=True, text=True)
            sys.stdout.write(proc.stdout)
            if proc.returncode != 0:
                sys.stderr.write(proc.stderr)
            print("total: %.2f s" % (time.perf_counter() - t0))


if __name__ == "__main__":
    main()
