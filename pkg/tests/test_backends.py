"""Equivalence of the compiled and pure-numpy kernel backends."""

import os
import subprocess
import sys

import numpy as np
import pytest

from qcdi import available_backends, build_grid, get_preset, solve
from qcdi.grid import binom_table
from qcdi.kernels import backend, set_backend
from qcdi import _purepy

compiled = pytest.importorskip("qcdi._core")

BOTH = ("python", "compiled")


@pytest.fixture(scope="module")
def workload():
    preset = get_preset("m2-sym-fa10")
    model = preset.model
    G = 37
    binom = binom_table(2, G)
    rng = np.random.default_rng(91)
    beliefs = rng.dirichlet(np.ones(3), size=512)
    symbols = rng.integers(0, 4, size=512)
    values = rng.uniform(0.0, 10.0, size=binom_table(2, G)[G + 2, 2])
    grid = build_grid(2, G)
    assert values.size == grid.n_points
    return model, G, binom, beliefs, symbols, values, grid


def test_rank_bit_identical(workload):
    _, G, binom, _, _, _, grid = workload
    a = _purepy.rank(grid.points, G, binom)
    b = compiled.rank(np.ascontiguousarray(grid.points), G, binom)
    assert np.array_equal(a, b)


def test_locate_bit_identical(workload):
    _, G, binom, beliefs, _, _, _ = workload
    idx_a, wgt_a = _purepy.locate(beliefs, G, binom)
    idx_b, wgt_b = compiled.locate(beliefs, G, binom)
    assert np.array_equal(idx_a, idx_b)
    assert np.array_equal(wgt_a, wgt_b)


def test_nearest_bit_identical(workload):
    _, G, binom, beliefs, _, _, _ = workload
    a = _purepy.nearest(beliefs, G, binom)
    b = compiled.nearest(beliefs, G, binom)
    assert np.array_equal(a, b)


def test_update_batch_bit_identical(workload):
    model, _, _, beliefs, symbols, _, _ = workload
    new_a, tot_a = _purepy.update_batch(beliefs, symbols, model.f, model.p, model.nu)
    new_b, tot_b = compiled.update_batch(beliefs, symbols, model.f, model.p, model.nu)
    assert np.array_equal(new_a, new_b)
    assert np.array_equal(tot_a, tot_b)


def test_expected_next_value_agrees(workload):
    model, G, binom, beliefs, _, values, _ = workload
    a = _purepy.expected_next_value(
        beliefs, values, model.f, model.p, model.nu, G, binom
    )
    b = compiled.expected_next_value(
        beliefs, values, model.f, model.p, model.nu, G, binom
    )
    # accumulation order differs between the implementations
    assert np.max(np.abs(a - b)) <= 1e-13


def test_full_solve_matches_across_backends():
    preset = get_preset("m2-sym-fa10")
    results = {}
    before = backend()
    try:
        for name in BOTH:
            set_backend(name)
            vf, policy = solve(preset.model, preset.costs, 40)
            results[name] = (vf.values, policy.verdicts, vf.iteration_count)
    finally:
        set_backend(before)
    va, pa, ia = results["python"]
    vb, pb, ib = results["compiled"]
    assert ia == ib
    assert np.max(np.abs(va - vb)) <= 1e-12
    assert np.array_equal(pa, pb)


def test_set_backend_round_trip():
    before = backend()
    try:
        prev = set_backend("python")
        assert prev == before
        assert backend() == "python"
        assert set_backend(prev) == "python"
    finally:
        set_backend(before)
    with pytest.raises(ValueError):
        set_backend("fortran")


def test_available_backends_sorted():
    names = available_backends()
    assert names == tuple(sorted(names))
    assert "python" in names


def test_environment_variable_forces_fallback():
    env = dict(os.environ, QCDI_PURE_PYTHON="1")
    out = subprocess.run(
        [sys.executable, "-c", "import qcdi; print(qcdi.backend())"],
        env=env,
        capture_output=True,
        text=True,
        check=True,
    )
    assert out.stdout.strip() == "python"
