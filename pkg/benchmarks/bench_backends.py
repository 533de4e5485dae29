"""Time the hot kernels and a full solve on each available backend.

Usage::

    python3 benchmarks/bench_backends.py
    python3 benchmarks/bench_backends.py --preset m3-sym --batch 100000 --repeats 5

Each kernel is timed as best-of-``--repeats`` wall clock over a random
batch of beliefs drawn once (shared across backends), so the comparison
is apples to apples.  The solve row times ``solve`` end to end, matrix
build included.
"""

import argparse
import time

import numpy as np

from qcdi import build_grid, get_preset, kernels, solve


def _best_of(repeats: int, fn) -> float:
    best = float("inf")
    for _ in range(repeats):
        tic = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - tic)
    return best


def run(preset_name: str, resolution: int | None, batch: int, repeats: int, seed: int):
    preset = get_preset(preset_name)
    model = preset.model
    res = resolution or preset.suggested_resolution
    grid = build_grid(model.hypotheses, res)
    rng = np.random.default_rng(seed)
    beliefs = rng.dirichlet(np.ones(model.hypotheses + 1), size=batch)
    symbols = rng.integers(0, model.alphabet.size, size=batch)
    values = rng.random(grid.n_points)
    ks = grid.points[rng.integers(0, grid.n_points, size=batch)]

    print(f"preset={preset_name} G={res} points={grid.n_points} batch={batch}")
    header = f"{'kernel':<22}" + "".join(f"{b:>14}" for b in kernels.available_backends())
    print(header)
    print("-" * len(header))

    jobs = [
        ("rank", lambda: kernels.rank(ks, grid.G, grid.binom)),
        ("locate", lambda: kernels.locate(beliefs, grid.G, grid.binom)),
        ("nearest", lambda: kernels.nearest(beliefs, grid.G, grid.binom)),
        ("update_batch", lambda: kernels.update_batch(
            beliefs, symbols, model.f, model.p, model.nu)),
        ("expected_next_value", lambda: kernels.expected_next_value(
            beliefs, values, model.f, model.p, model.nu, grid.G, grid.binom)),
        ("solve (tol 1e-6)", lambda: solve(model, preset.costs, grid)),
    ]
    for name, fn in jobs:
        row = f"{name:<22}"
        timings = []
        for backend_name in kernels.available_backends():
            kernels.set_backend(backend_name)
            t = _best_of(repeats, fn)
            timings.append(t)
            row += f"{t * 1e3:>12.2f}ms"
        if len(timings) == 2 and min(timings) > 0:
            row += f"   x{max(timings) / min(timings):.1f}"
        print(row)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--preset", default="m2-sym-fa10")
    ap.add_argument("--resolution", type=int, default=None,
                    help="grid resolution (default: the preset's suggestion)")
    ap.add_argument("--batch", type=int, default=50_000,
                    help="number of beliefs per kernel call")
    ap.add_argument("--repeats", type=int, default=3,
                    help="take the best of this many timed runs")
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()
    previous = kernels.backend()
    try:
        run(args.preset, args.resolution, args.batch, args.repeats, args.seed)
    finally:
        kernels.set_backend(previous)


if __name__ == "__main__":
    main()
