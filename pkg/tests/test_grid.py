"""Simplex grid: enumeration order, ranking, interpolation cells, rounding."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qcdi import GridBudgetExceeded, ValidationFailure, build_grid, grid_size
from qcdi.grid import binom_table


def test_grid_size_known_counts():
    assert grid_size(1, 10) == 11
    assert grid_size(2, 4) == 15
    assert grid_size(2, 200) == 20301
    assert grid_size(3, 5) == math.comb(8, 3)


def test_binom_table_matches_comb():
    t = binom_table(3, 12)
    assert t.shape == (16, 5)
    for n in range(t.shape[0]):
        for r in range(t.shape[1]):
            assert t[n, r] == math.comb(n, r)


def test_points_lex_sorted_and_rank_is_position():
    grid = build_grid(2, 7)
    assert grid.n_points == grid_size(2, 7)
    rows = [tuple(row) for row in grid.points]
    assert rows == sorted(rows)
    assert np.all(grid.points.sum(axis=1) == 7)
    assert np.all(grid.points >= 0)
    assert np.array_equal(grid.rank(grid.points), np.arange(grid.n_points))


def test_points_are_read_only():
    grid = build_grid(2, 3)
    with pytest.raises(ValueError):
        grid.points[0, 0] = 99
    with pytest.raises(ValueError):
        grid.points_float[0, 0] = 0.5


def test_vertex_ranks_are_corners():
    grid = build_grid(2, 5)
    vr = grid.vertex_ranks()
    # Lex order puts e_M = (0, .., 0, G) first and e_0 = (G, 0, .., 0) last.
    assert vr[0] == grid.n_points - 1
    assert vr[-1] == 0
    assert np.array_equal(grid.points[vr], 5 * np.eye(3, dtype=np.int64))


def test_locate_weights_reconstruct_the_query():
    grid = build_grid(2, 9)
    rng = np.random.default_rng(11)
    pts = rng.dirichlet(np.ones(3), size=500)
    idx, wgt = grid.locate(pts)
    assert idx.shape == (500, 3) and wgt.shape == (500, 3)
    assert np.all(wgt >= -1e-12)
    assert np.max(np.abs(wgt.sum(axis=1) - 1.0)) <= 1e-12
    rebuilt = np.einsum("nj,njk->nk", wgt, grid.points_float[idx])
    assert np.max(np.abs(rebuilt - pts)) <= 1e-12


def test_locate_is_scale_invariant():
    # Unnormalized posterior weights locate to the same cell as the belief.
    grid = build_grid(2, 9)
    rng = np.random.default_rng(12)
    pts = rng.dirichlet(np.ones(3), size=100)
    idx_a, wgt_a = grid.locate(pts)
    idx_b, wgt_b = grid.locate(0.37 * pts)
    assert np.array_equal(idx_a, idx_b)
    assert np.max(np.abs(wgt_a - wgt_b)) <= 1e-12


def test_locate_exact_dyadic_grid_points_get_unit_weight():
    # With G a power of two every coordinate k/G is exact, so the query lands
    # bit-exactly on the lattice: the point's own rank carries weight exactly
    # 1.0 and every other chain vertex exactly 0.0.
    grid = build_grid(2, 8)
    idx, wgt = grid.locate(grid.points_float)
    own = idx == np.arange(grid.n_points)[:, None]
    assert np.all(np.sum(wgt * own, axis=1) == 1.0)
    assert np.all(wgt[~own] == 0.0)


def test_locate_grid_points_concentrate_on_themselves():
    # Non-dyadic G: coordinates round, but the mass must still concentrate on
    # the point's own rank.
    grid = build_grid(2, 7)
    idx, wgt = grid.locate(grid.points_float)
    top = np.argmax(wgt, axis=1)
    rows = np.arange(grid.n_points)
    assert np.array_equal(idx[rows, top], rows)
    assert np.all(wgt[rows, top] >= 1.0 - 1e-9)


def test_locate_fractional_ties_go_to_higher_coordinate():
    # (0.25, 0.5, 0.25) at G=2 has cumulative fractional parts (0.5, 0.5);
    # the tie inserts the higher cumulative index first, so the intermediate
    # cell vertex is (0, 2, 0), not (1, 0, 1).
    grid = build_grid(2, 2)
    idx, wgt = grid.locate([[0.25, 0.5, 0.25]])
    ranks = {tuple(grid.points[r]): r for r in range(grid.n_points)}
    assert idx[0, 1] == ranks[(0, 2, 0)]
    assert ranks[(1, 0, 1)] not in idx[0]
    rebuilt = wgt[0] @ grid.points_float[idx[0]]
    assert np.max(np.abs(rebuilt - [0.25, 0.5, 0.25])) <= 1e-15


def test_nearest_rounds_by_largest_remainder():
    grid = build_grid(2, 10)
    rng = np.random.default_rng(13)
    pts = rng.dirichlet(np.ones(3), size=400)
    ks = grid.points[grid.nearest(pts)]
    assert np.all(ks.sum(axis=1) == 10)
    assert np.max(np.abs(ks - 10.0 * pts)) <= 1.0 + 1e-9


def test_nearest_ties_go_to_lower_coordinate():
    grid = build_grid(2, 1)
    r = grid.nearest([[0.5, 0.5, 0.0]])
    assert tuple(grid.points[r[0]]) == (1, 0, 0)


def test_nearest_is_a_closest_grid_point():
    grid = build_grid(2, 6)
    rng = np.random.default_rng(14)
    pts = rng.dirichlet(np.ones(3), size=200)
    chosen = grid.points_float[grid.nearest(pts)]
    for p, c in zip(pts, chosen):
        dists = np.sum((grid.points_float - p) ** 2, axis=1)
        assert np.sum((c - p) ** 2) <= dists.min() + 1e-12


def test_nearest_fixes_grid_points():
    grid = build_grid(2, 7)
    assert np.array_equal(
        grid.nearest(grid.points_float), np.arange(grid.n_points)
    )


def test_directed_neighbors_match_brute_force():
    grid = build_grid(2, 6)
    ranks = {tuple(row): i for i, row in enumerate(grid.points)}
    for a in range(3):
        for b in range(3):
            if a == b:
                assert (a, b) not in grid.directed_neighbors
                continue
            table = grid.directed_neighbors[(a, b)]
            for i, k in enumerate(grid.points):
                k = list(k)
                if k[a] >= 1:
                    k[a] -= 1
                    k[b] += 1
                    assert table[i] == ranks[tuple(k)]
                else:
                    assert table[i] == -1


def test_build_grid_budget_and_validation():
    with pytest.raises(GridBudgetExceeded):
        build_grid(3, 100, budget=1000)
    with pytest.raises(ValidationFailure):
        build_grid(0, 10)
    with pytest.raises(ValidationFailure):
        build_grid(2, 0)


def test_query_width_validation():
    grid = build_grid(2, 4)
    with pytest.raises(ValidationFailure):
        grid.rank([[1, 3]])
    with pytest.raises(ValidationFailure):
        grid.locate([[0.5, 0.5]])
    with pytest.raises(ValidationFailure):
        grid.nearest([[0.25, 0.25, 0.25, 0.25]])


@settings(max_examples=50, deadline=None)
@given(
    M=st.integers(min_value=1, max_value=3),
    G=st.integers(min_value=1, max_value=12),
)
def test_rank_bijection_property(M, G):
    grid = build_grid(M, G)
    assert np.array_equal(grid.rank(grid.points), np.arange(grid.n_points))


@settings(max_examples=50, deadline=None)
@given(
    M=st.integers(min_value=1, max_value=3),
    G=st.integers(min_value=1, max_value=25),
    seed=st.integers(min_value=0, max_value=2**32 - 1),
)
def test_locate_convexity_property(M, G, seed):
    grid = build_grid(M, G)
    rng = np.random.default_rng(seed)
    pts = rng.dirichlet(np.ones(M + 1), size=32)
    idx, wgt = grid.locate(pts)
    assert np.all(wgt >= -1e-12)
    assert np.max(np.abs(wgt.sum(axis=1) - 1.0)) <= 1e-12
    assert np.all((idx >= 0) & (idx < grid.n_points))
    rebuilt = np.einsum("nj,njk->nk", wgt, grid.points_float[idx])
    assert np.max(np.abs(rebuilt - pts)) <= 1e-11


@settings(max_examples=50, deadline=None)
@given(
    M=st.integers(min_value=1, max_value=3),
    G=st.integers(min_value=1, max_value=25),
    seed=st.integers(min_value=0, max_value=2**32 - 1),
)
def test_nearest_within_one_unit_property(M, G, seed):
    grid = build_grid(M, G)
    rng = np.random.default_rng(seed)
    pts = rng.dirichlet(np.ones(M + 1), size=32)
    ks = grid.points[grid.nearest(pts)]
    assert np.all(ks.sum(axis=1) == G)
    assert np.max(np.abs(ks - G * pts)) <= 1.0 + 1e-9
