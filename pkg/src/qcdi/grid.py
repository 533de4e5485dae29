"""Regular grid on the probability simplex with a matching triangulation.

Resolution ``G`` places one point at every integer composition
``(k_0, .., k_M)`` of ``G``; the point is the belief ``k / G``.  Points are
kept in lexicographic order of the composition so ranks are stable across
runs and platforms, and the triangulation used for interpolation is the
standard simplicial subdivision whose cells the kernels in
:mod:`qcdi.kernels` locate in O(M log M) per query.
"""

from __future__ import annotations

from functools import cached_property
from math import comb

import numpy as np

from . import kernels
from .errors import GridBudgetExceeded, ValidationFailure

POINT_BUDGET = 5_000_000


def grid_size(M: int, G: int) -> int:
    """Number of grid points: C(G + M, M)."""

    return comb(G + M, M)


def binom_table(M: int, G: int) -> np.ndarray:
    """Pascal table ``t[n, r] = C(n, r)`` for ``n <= G + M``, ``r <= M + 1``."""

    rows = G + M + 1
    cols = M + 2
    t = np.zeros((rows, cols), dtype=np.int64)
    t[:, 0] = 1
    for n in range(1, rows):
        t[n, 1:] = t[n - 1, 1:] + t[n - 1, : cols - 1]
    return t


def _enumerate_compositions(G: int, parts: int) -> np.ndarray:
    if parts == 1:
        return np.array([[G]], dtype=np.int64)
    blocks = []
    for k0 in range(G + 1):
        tail = _enumerate_compositions(G - k0, parts - 1)
        head = np.full((tail.shape[0], 1), k0, dtype=np.int64)
        blocks.append(np.hstack([head, tail]))
    return np.vstack(blocks)


class SimplexGrid:
    """Lexicographically ordered resolution-``G`` grid on the belief simplex."""

    def __init__(self, M: int, G: int, points: np.ndarray):
        self.M = int(M)
        self.G = int(G)
        self.points = points
        self.n_points = points.shape[0]
        self.binom = binom_table(self.M, self.G)

    @cached_property
    def points_float(self) -> np.ndarray:
        out = self.points.astype(np.float64) / float(self.G)
        out.setflags(write=False)
        return out

    def rank(self, ks) -> np.ndarray:
        """Lexicographic position of composition rows ``ks``."""

        ks = np.atleast_2d(np.asarray(ks, dtype=np.int64))
        if ks.shape[1] != self.M + 1:
            raise ValidationFailure(
                [f"compositions must have {self.M + 1} parts, got {ks.shape[1]}"]
            )
        return kernels.rank(ks, self.G, self.binom)

    def locate(self, points) -> tuple[np.ndarray, np.ndarray]:
        """Cell vertices and convex weights for each belief row."""

        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        if pts.shape[1] != self.M + 1:
            raise ValidationFailure(
                [f"beliefs must have {self.M + 1} entries, got {pts.shape[1]}"]
            )
        return kernels.locate(pts, self.G, self.binom)

    def nearest(self, points) -> np.ndarray:
        """Rank of the closest grid point to each belief row."""

        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        if pts.shape[1] != self.M + 1:
            raise ValidationFailure(
                [f"beliefs must have {self.M + 1} entries, got {pts.shape[1]}"]
            )
        return kernels.nearest(pts, self.G, self.binom)

    def vertex_ranks(self) -> np.ndarray:
        """Ranks of the simplex corners e_0 .. e_M."""

        ks = (np.eye(self.M + 1, dtype=np.int64)) * self.G
        return self.rank(ks)

    @cached_property
    def directed_neighbors(self) -> dict:
        """Neighbor tables: (a, b) -> rank of ``k - e_a + e_b`` (-1 if off-grid).

        Two grid points are adjacent when they differ by moving one unit of
        mass between a pair of coordinates; this is the edge structure used
        for connectivity and line-convexity diagnostics.
        """

        tables = {}
        n = self.n_points
        for a in range(self.M + 1):
            valid = self.points[:, a] >= 1
            for b in range(self.M + 1):
                if a == b:
                    continue
                out = np.full(n, -1, dtype=np.int64)
                shifted = self.points[valid].copy()
                shifted[:, a] -= 1
                shifted[:, b] += 1
                out[valid] = kernels.rank(shifted, self.G, self.binom)
                tables[(a, b)] = out
        return tables

    def __repr__(self) -> str:
        return f"SimplexGrid(M={self.M}, G={self.G}, n_points={self.n_points})"


def build_grid(M: int, G: int, budget: int = POINT_BUDGET) -> SimplexGrid:
    """Enumerate the resolution-``G`` grid; refuse if it would exceed ``budget``."""

    if M < 1 or G < 1:
        raise ValidationFailure([f"need M >= 1 and G >= 1, got M={M}, G={G}"])
    n = grid_size(M, G)
    if n > budget:
        raise GridBudgetExceeded(
            f"grid would hold {n} points, over the budget of {budget}"
        )
    points = _enumerate_compositions(G, M + 1)
    points.setflags(write=False)
    return SimplexGrid(M, G, points)
