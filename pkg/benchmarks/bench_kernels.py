"""Compiled vs pure-Python integrator kernels.

Integrates random generators (rates up to 1e4 1/s, Larmor rates up to
1e6 rad/s) over five slowest decay times with each backend and reports the best wall time
of several repeats. Run with ``python benchmarks/bench_kernels.py``.
"""
import argparse
import time

import numpy as np

from alkalispin import _integrate_py
from alkalispin.eigen import build_matrix
from alkalispin.model import RateSet, species_cesium

try:
    from alkalispin import _integrate as _integrate_c
except ImportError:  # extension not built
    _integrate_c = None


def workload(n_draws, seed):
    cs = species_cesium()
    rng = np.random.default_rng(seed)
    jobs = []
    for _ in range(n_draws):
        rates = RateSet(*rng.uniform(0.0, 1e4, 4))
        B = rng.uniform(0.0, 1e6) / cs.gamma_e
        m = build_matrix(cs, rates, B).m
        gamma_min = max(-np.linalg.eigvals(m).real.max(), 1.0)
        span = 5.0 / gamma_min
        jobs.append((np.ascontiguousarray(m), np.array([1.0, 1.0 / 22.0], dtype=complex), np.linspace(0.0, span, 2000)))
    return jobs


def best_of(kernel, jobs, repeats, rtol):
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        for m, y0, t in jobs:
            kernel.dp45(m, y0, t, rtol, 1e-3 * rtol, 0.0, 50_000_000)
        times.append(time.perf_counter() - start)
    return min(times)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--draws", type=int, default=100)
    parser.add_argument("--repeats", type=int, default=3)
    parser.add_argument("--rtol", type=float, default=1e-8)
    parser.add_argument("--seed", type=int, default=1234)
    args = parser.parse_args()

    jobs = workload(args.draws, args.seed)
    t_py = best_of(_integrate_py, jobs, args.repeats, args.rtol)
    print(f"python  : {t_py:8.3f} s")
    if _integrate_c is None:
        print("cython  : not built")
        return
    t_c = best_of(_integrate_c, jobs, args.repeats, args.rtol)
    print(f"cython  : {t_c:8.3f} s")
    print(f"speedup : {t_py / t_c:8.1f}x")
    # same arithmetic in both kernels
    worst = 0.0
    for m, y0, t in jobs:
        a = _integrate_py.dp45(m, y0, t, args.rtol, 1e-3 * args.rtol, 0.0, 50_000_000)[0]
        b = _integrate_c.dp45(m, y0, t, args.rtol, 1e-3 * args.rtol, 0.0, 50_000_000)[0]
        worst = max(worst, float(np.max(np.abs(a - b))))
    print(f"max |python - cython| over {len(jobs)} draws = {worst:.3e}")


if __name__ == "__main__":
    main()
