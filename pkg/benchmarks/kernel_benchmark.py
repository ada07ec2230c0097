"""Compare the compiled kernel backend against the pure numpy fallback.

Times the three hot kernels on realistic workloads (protocol-sized point
patterns and wavenumber grids) and prints a table with the speedup. Also
checks that both backends agree numerically, since a fast wrong kernel is
not a kernel.

Run from the repository root:

    python3 benchmarks/kernel_benchmark.py
    python3 benchmarks/kernel_benchmark.py --sizes 100,800 --repeats 5
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from pointspec import _kernels_py
from pointspec.core import regular_grid
from pointspec.models import model_from_spec, simulate
from pointspec.bench import window_for_size
from pointspec.tapers import sine_taper_family

try:
    from pointspec import _kernels
except ImportError:
    _kernels = None


def best_of(repeats, fn, *args):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - start)
    return best


def agreement(a, b):
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b))))


def pattern_workload(sample_size, seed):
    window = window_for_size(sample_size)
    pattern = simulate(model_from_spec("thomas:ms"), window, seed)
    grid = regular_grid(0.006, 0.3, dim=2, exclude_zero=True)
    tapers = sine_taper_family(window, 3)
    weights = np.stack([t.evaluate(pattern.points) for t in tapers], axis=1)
    return pattern, grid, weights


def run(sizes, repeats, t_count, seed):
    backends = [("python", _kernels_py)]
    if _kernels is not None:
        backends.append(("cython", _kernels))
    rows = []
    for n in sizes:
        pattern, grid, weights = pattern_workload(n, seed)
        pts = pattern.points
        # dft: all nine sine-taper columns against the full protocol grid
        results = {}
        for name, mod in backends:
            results[name] = mod.dft_weighted(pts, weights, grid.nodes)
            t = best_of(repeats, mod.dft_weighted, pts, weights, grid.nodes)
            rows.append((f"dft_weighted[n={pts.shape[0]}, m={grid.m}, p=9]", name, t))
        if len(results) == 2:
            gap = agreement(results["python"], results["cython"])
            assert gap < 1e-10, f"backend mismatch in dft_weighted: {gap}"

        # pairwise radial reduction: every ordered pair, Bessel J0 weights
        diff = pts[None, :, :] - pts[:, None, :]
        r = np.linalg.norm(diff, axis=-1)
        iu = np.triu_indices(r.shape[0], k=1)
        r = r[iu]
        w = np.ones_like(r)
        t_nodes = 0.003 * np.arange(1, t_count + 1)
        results = {}
        for name, mod in backends:
            results[name] = mod.pair_radial_sum(r, w, t_nodes, 0.0)
            t = best_of(repeats, mod.pair_radial_sum, r, w, t_nodes, 0.0)
            rows.append((f"pair_radial_sum[pairs={r.shape[0]}, t={t_count}]", name, t))
        if len(results) == 2:
            gap = agreement(results["python"], results["cython"])
            assert gap < 1e-8, f"backend mismatch in pair_radial_sum: {gap}"

    # scalar special function throughput
    x = np.linspace(0.0, 60.0, 2_000_00)
    for order in (0.0, 0.5):
        results = {}
        for name, mod in backends:
            results[name] = mod.bessel_j_values(order, x)
            t = best_of(repeats, mod.bessel_j_values, order, x)
            rows.append((f"bessel_j_values[order={order}, len={x.size}]", name, t))
        if len(results) == 2:
            gap = agreement(results["python"], results["cython"])
            assert gap < 1e-12, f"backend mismatch in bessel_j order {order}: {gap}"
    return rows


def render(rows):
    by_kernel = {}
    for kernel, backend, t in rows:
        by_kernel.setdefault(kernel, {})[backend] = t
    width = max(len(k) for k in by_kernel)
    print(f"{'kernel':<{width}}  {'python':>10}  {'cython':>10}  {'speedup':>8}")
    for kernel, times in by_kernel.items():
        py = times.get("python")
        cy = times.get("cython")
        py_s = f"{py * 1e3:8.2f}ms" if py is not None else "-"
        cy_s = f"{cy * 1e3:8.2f}ms" if cy is not None else "-"
        speed = f"{py / cy:7.1f}x" if py and cy else "-"
        print(f"{kernel:<{width}}  {py_s:>10}  {cy_s:>10}  {speed:>8}")


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", default="100,400", help="comma list of expected point counts")
    parser.add_argument("--repeats", type=int, default=3, help="best-of timing repeats")
    parser.add_argument("--t-count", type=int, default=100, help="radial node count")
    parser.add_argument("--seed", type=int, default=7, help="pattern seed")
    args = parser.parse_args(argv)
    sizes = [int(s) for s in args.sizes.split(",") if s.strip()]
    if _kernels is None:
        print("compiled extension not importable; timing the fallback only")
    rows = run(sizes, args.repeats, args.t_count, args.seed)
    render(rows)


if __name__ == "__main__":
    main()
