"""Compare the numba kernels with their pure-numpy twins.

    python3 benchmarks/bench_kernels.py [--batch 4225] [--degree 16] [--pipeline]

Kernel timings run in-process (both twins are importable as long as numba is
installed).  ``--pipeline`` additionally times a small vacuum build in two
subprocesses, one with CMCH3_DISABLE_NUMBA=1.
"""
import argparse
import os
import subprocess
import sys
import time

import numpy as np

from cmch3 import kernels, loopalg


def best_of(fn, repeat=5):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def random_loops(rng, batch, N):
    c = np.zeros((batch, 2 * N + 1, 2, 2), dtype=complex)
    c[:, N] = np.eye(2)
    for j in range(-3, 4):
        c[:, N + j] += 0.2 * (rng.standard_normal((batch, 2, 2)) + 1j * rng.standard_normal((batch, 2, 2)))
    return loopalg.project_twisted(c)


def bench(batch, N):
    if not kernels.HAVE_NUMBA:
        print("numba not installed; nothing to compare")
        return
    rng = np.random.default_rng(0)
    a, b = random_loops(rng, batch, N), random_loops(rng, batch, N)
    th = loopalg.circle(64).astype(complex)
    wide = loopalg.resize(a, 2 * N)
    P, _ = kernels.convolve_np(loopalg.star(wide), wide)
    cases = {
        "convolve": (lambda: kernels.convolve_np(a, b), lambda: kernels.convolve_nb(a, b)),
        "evaluate": (lambda: kernels.evaluate_np(a, th), lambda: kernels.evaluate_nb(a, th)),
        "spectral_factor": (lambda: kernels.spectral_factor_np(P, 2 * N),
                            lambda: kernels.spectral_factor_nb(P, 2 * N)),
    }
    print(f"batch={batch} degree={N}")
    print(f"{'kernel':<16}{'numpy [s]':>12}{'numba [s]':>12}{'speedup':>10}{'max diff':>12}")
    for name, (f_np, f_nb) in cases.items():
        r_np, r_nb = f_np(), f_nb()  # also triggers compilation
        diff = max(float(np.max(np.abs(np.asarray(x, dtype=complex) - np.asarray(y, dtype=complex))))
                   for x, y in zip(r_np if isinstance(r_np, tuple) else (r_np,),
                                   r_nb if isinstance(r_nb, tuple) else (r_nb,)))
        t_np, t_nb = best_of(f_np), best_of(f_nb)
        print(f"{name:<16}{t_np:>12.4f}{t_nb:>12.4f}{t_np / t_nb:>10.1f}{diff:>12.2e}")


PIPELINE = """
import math, time
from cmch3 import dpw, _backend
from cmch3.potential import PotentialSpec
from cmch3.gctheory import Grid
spec = PotentialSpec.from_strings("0.5", "0", math.sqrt(3), H=math.sqrt(2))
grid = Grid.centered(0j, (0.5, 0.5), (33, 33))
dpw.build_frame(spec, grid, N=8)
t0 = time.perf_counter()
dpw.build_frame(spec, grid, N=8)
print(_backend.backend_name(), time.perf_counter() - t0)
"""


def bench_pipeline():
    for flag in ("0", "1"):
        env = dict(os.environ, CMCH3_DISABLE_NUMBA=flag)
        out = subprocess.run([sys.executable, "-c", PIPELINE], env=env, capture_output=True, text=True, check=True)
        name, secs = out.stdout.split()
        print(f"pipeline 33x33 N=8 [{name}]: {float(secs):.3f} s")


if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--batch", type=int, default=4225)
    ap.add_argument("--degree", type=int, default=16)
    ap.add_argument("--pipeline", action="store_true")
    args = ap.parse_args()
    bench(args.batch, args.degree)
    if args.pipeline:
        bench_pipeline()
