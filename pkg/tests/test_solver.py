"""Value iteration, policy extraction, and stopping-region diagnostics."""

import numpy as np
import pytest

from qcdi import (
    CostSpec,
    DiscretizedOperator,
    IterationBudgetExceeded,
    ValidationFailure,
    build_grid,
    component_sizes,
    connected_components,
    extract_policy,
    get_preset,
    h_sup_bound,
    region_analysis,
    solve,
    value_iterate,
)
from qcdi.solver import _effective_runs, essential_component_count, line_convexity


@pytest.fixture(scope="module")
def fa10():
    return get_preset("m2-sym-fa10")


def test_post_change_corners_have_zero_value(fa10):
    vf, _ = solve(fa10.model, fa10.costs, 20)
    corners = vf.grid.vertex_ranks()
    assert vf.values[corners[1]] == 0.0
    assert vf.values[corners[2]] == 0.0
    assert vf.values[corners[0]] > 0.0


def test_values_bracketed_by_zero_and_envelope(fa10):
    vf, _ = solve(fa10.model, fa10.costs, 25)
    op = DiscretizedOperator(fa10.model, fa10.costs, vf.grid)
    assert np.all(vf.values >= 0.0)
    assert np.all(vf.values <= op.h)


def test_huge_delay_cost_stops_everywhere_off_the_start_corner(fa10):
    costs = CostSpec(c=1e9, a=fa10.costs.a)
    vf, policy = solve(fa10.model, costs, 20)
    op = DiscretizedOperator(fa10.model, costs, vf.grid)
    interior = vf.grid.points_float[:, 0] < 1.0
    assert np.array_equal(vf.values[interior], op.h[interior])
    assert np.all(policy.verdicts[interior] > 0)


def test_zero_terminal_costs_collapse_the_problem(fa10):
    costs = CostSpec(c=fa10.costs.c, a=np.zeros_like(fa10.costs.a))
    vf, policy = solve(fa10.model, costs, 15)
    assert np.all(vf.values == 0.0)
    assert np.all(policy.verdicts == 1)


def test_iterates_descend_monotonically(fa10):
    grid = build_grid(2, 30)
    prev = None
    for n in range(1, 6):
        vf = value_iterate(fa10.model, fa10.costs, grid, fixed_iters=n)
        assert vf.iteration_count == n
        if prev is not None:
            assert np.all(vf.values <= prev + 1e-12)
        prev = vf.values


def test_bellman_residual_within_final_delta(fa10):
    vf, _ = solve(fa10.model, fa10.costs, 30, tol=1e-8)
    op = DiscretizedOperator(fa10.model, fa10.costs, vf.grid)
    residual = float(np.max(np.abs(op.bellman(vf.values) - vf.values)))
    assert residual <= vf.final_delta
    assert vf.final_delta <= 1e-8


def test_certified_gap_formula(fa10):
    grid = build_grid(2, 10)
    vf = value_iterate(fa10.model, fa10.costs, grid, fixed_iters=10)
    hsup = h_sup_bound(fa10.costs)
    want = (hsup * hsup / fa10.costs.c + hsup / fa10.model.p) / 10
    assert vf.certified_gap == want


def test_snapshots_are_nested_and_start_full(fa10):
    grid = build_grid(2, 30)
    vf = value_iterate(
        fa10.model, fa10.costs, grid, fixed_iters=8, record_snapshots=8
    )
    assert len(vf.snapshots) == 9
    assert vf.snapshots[0].all()
    for earlier, later in zip(vf.snapshots, vf.snapshots[1:]):
        assert not np.any(later & ~earlier)  # later stop sets only shrink


def test_iteration_budget_raises(fa10):
    grid = build_grid(2, 10)
    with pytest.raises(IterationBudgetExceeded):
        value_iterate(fa10.model, fa10.costs, grid, tol=1e-15, max_iters=2)
    with pytest.raises(ValidationFailure):
        value_iterate(fa10.model, fa10.costs, grid, fixed_iters=0)


def test_operator_rejects_mismatched_grid(fa10):
    with pytest.raises(ValidationFailure):
        DiscretizedOperator(fa10.model, fa10.costs, build_grid(1, 10))
    bad_costs = CostSpec(c=-1.0, a=fa10.costs.a)
    with pytest.raises(ValidationFailure):
        DiscretizedOperator(fa10.model, bad_costs, build_grid(2, 10))


def test_operator_matrix_rows_are_substochastic(fa10):
    # Row g of the sweep matrix holds predictive-mass-weighted interpolation
    # weights; each row sums to one (total predictive mass).
    op = DiscretizedOperator(fa10.model, fa10.costs, build_grid(2, 12))
    row_sums = np.asarray(op.matrix.sum(axis=1)).ravel()
    assert np.max(np.abs(row_sums - 1.0)) <= 1e-12
    assert op.matrix.min() >= -1e-15


def test_component_sizes_handcrafted_masks():
    grid = build_grid(2, 4)
    ranks = {tuple(row): i for i, row in enumerate(grid.points)}
    empty = np.zeros(grid.n_points, dtype=bool)
    assert component_sizes(grid, empty) == ()
    assert essential_component_count(()) == 0

    two_singletons = empty.copy()
    two_singletons[ranks[(4, 0, 0)]] = True
    two_singletons[ranks[(0, 4, 0)]] = True
    assert component_sizes(grid, two_singletons) == (1, 1)
    assert connected_components(grid, two_singletons) == 2
    assert essential_component_count((1, 1)) == 2

    blob_plus_dot = empty.copy()
    blob_plus_dot[grid.points[:, 0] == 0] = True  # the 5-point edge k0 = 0
    blob_plus_dot[ranks[(4, 0, 0)]] = True
    assert component_sizes(grid, blob_plus_dot) == (5, 1)
    assert essential_component_count((5, 1)) == 1


def test_effective_run_counting():
    cases = [
        ([], 0),
        ([False, False], 0),
        ([True], 1),
        ([True, False, True], 1),  # one-cell gap merges
        ([True, False, False, True], 1),  # two singletons: one-cell noise
        ([True, True, False, False, True, True], 2),
        ([True, True, True, False, False, True], 1),  # trailing singleton
        ([True, True, False, True, True], 1),
    ]
    for seq, want in cases:
        assert _effective_runs(np.array(seq, dtype=bool)) == want


def test_line_convexity_handcrafted():
    grid = build_grid(2, 6)
    ranks = {tuple(row): i for i, row in enumerate(grid.points)}
    mask = np.zeros(grid.n_points, dtype=bool)
    for k in [(0, 6, 0), (1, 5, 0), (4, 2, 0), (5, 1, 0)]:
        mask[ranks[k]] = True
    # The k2 = 0 line between coordinates 0 and 1 holds two solid pairs; the
    # eight other touched lines each hold a single cell.
    assert line_convexity(grid, mask) == (1, 9)

    interval = np.zeros(grid.n_points, dtype=bool)
    for k0 in range(3):
        interval[ranks[(k0, 6 - k0, 0)]] = True
    violations, lines = line_convexity(grid, interval)
    assert violations == 0
    assert lines == 1 + 3 + 3  # the shared line plus one per point and pair


def test_region_analysis_report(fa10):
    _, policy = solve(fa10.model, fa10.costs, 60)
    report = region_analysis(policy)
    names = [e.name for e in report.entries]
    assert names == ["stop", "continue", "announce_1", "announce_2"]
    stop = report.entry("stop")
    cont = report.entry("continue")
    assert stop.points + cont.points == policy.grid.n_points
    assert report.entry("announce_1").convex_on_lines
    with pytest.raises(KeyError):
        report.entry("bogus")
    printed = list(report.lines())
    assert len(printed) == 4
    assert all("components=" in line for line in printed)


def test_policy_labels_consistent_with_verdicts(fa10):
    _, policy = solve(fa10.model, fa10.costs, 40)
    stopping = policy.verdicts > 0
    assert np.array_equal(policy.stop_labels.any(axis=1), stopping)
    # the announced label is always within the tie-inclusive label set
    rows = np.flatnonzero(stopping)
    assert np.all(policy.stop_labels[rows, policy.verdicts[rows] - 1])


def test_solve_matches_manual_pipeline(fa10):
    vf_a, pol_a = solve(fa10.model, fa10.costs, 25)
    grid = build_grid(2, 25)
    vf_b = value_iterate(fa10.model, fa10.costs, grid)
    pol_b = extract_policy(vf_b, fa10.model, fa10.costs)
    assert np.array_equal(vf_a.values, vf_b.values)
    assert vf_a.iteration_count == vf_b.iteration_count
    assert np.array_equal(pol_a.verdicts, pol_b.verdicts)
    assert np.array_equal(pol_a.stop_labels, pol_b.stop_labels)


def test_value_function_interpolates(fa10):
    vf, _ = solve(fa10.model, fa10.costs, 30)
    on_grid = vf.interpolate_many(vf.grid.points_float)
    assert np.max(np.abs(on_grid - vf.values)) <= 1e-9
    rng = np.random.default_rng(31)
    pts = rng.dirichlet(np.ones(3), size=20)
    many = vf.interpolate_many(pts)
    for k in range(20):
        assert vf(pts[k]) == many[k]
