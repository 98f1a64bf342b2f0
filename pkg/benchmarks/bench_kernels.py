#!/usr/bin/env python3
"""Benchmark the compiled cost kernels against the NumPy fallback.

Times the hot per-cycle workload (the full path x velocity-profile cost
table of one planning cycle) plus the isolated kernel calls, once per
backend. Run from the repository root:

    python benchmarks/bench_kernels.py
"""

import time

import numpy as np

from riskprobe._kernels import pure

try:
    from riskprobe._kernels import _core as compiled
except ImportError:
    compiled = None


def cycle_workload(m_paths=2, n_t=21, n_steps=121, n_others=2, seed=0):
    """Representative arrays for one planning cycle's cost evaluation."""
    rng = np.random.default_rng(seed)
    cells = []
    for _ in range(m_paths * n_t):
        gap = np.abs(rng.normal(10.0, 8.0, size=(n_others, n_steps)))
        sigma_sq = 0.3 + np.abs(rng.normal(1.0, 1.5, size=(n_others, n_steps)))
        damage = 1.0 + np.abs(rng.normal(0.5, 0.5, size=(n_others, n_steps)))
        v = np.abs(rng.normal(8.0, 3.0, size=n_steps))
        kappa = rng.normal(0.0, 0.02, size=n_steps)
        cells.append((gap, sigma_sq, damage, v, kappa))
    return cells


def run_cycle(impl, cells):
    total = 0.0
    for gap, sigma_sq, damage, v, kappa in cells:
        risk, rate, surv = impl.risk_profile(
            gap, sigma_sq, damage, v, kappa,
            0.2, 0.2, 6.0, 0.7, 1.0, 1.0 / 6.0, 0.1,
        )
        total += risk + impl.weighted_trapezoid(v, surv, 0.1)
    return total


def bench(fn, *args, repeat=50, warmup=5):
    for _ in range(warmup):
        fn(*args)
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - start)
    return min(times), sum(times) / len(times)


def main():
    cells = cycle_workload()
    print(f"workload: {len(cells)} cost cells x {cells[0][0].shape[1]} steps "
          f"x {cells[0][0].shape[0]} other vehicles (one planning cycle)")
    print(f"{'backend':<10} {'best ms':>10} {'mean ms':>10}")
    results = {}
    for name, impl in (("pure", pure), ("compiled", compiled)):
        if impl is None:
            print(f"{name:<10} {'not built':>10}")
            continue
        best, mean = bench(run_cycle, impl, cells)
        results[name] = best
        print(f"{name:<10} {best * 1e3:>10.3f} {mean * 1e3:>10.3f}")
    if "compiled" in results:
        print(f"speedup (best): {results['pure'] / results['compiled']:.1f}x")

    # isolated survival kernel
    rates = np.abs(np.random.default_rng(1).normal(0.05, 0.1, size=121))
    print("\nsurvival_trace (121 steps):")
    for name, impl in (("pure", pure), ("compiled", compiled)):
        if impl is None:
            continue
        best, mean = bench(lambda: impl.survival_trace(rates, 1 / 6, 0.1), repeat=2000, warmup=100)
        print(f"{name:<10} {best * 1e6:>10.1f} us (best)")


if __name__ == "__main__":
    main()
