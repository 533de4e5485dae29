"""CSV and SVG exports of solved policies, trajectories, and reports.

All CSV writers take open text files (or anything with ``write``) so the
CLI can stream to stdout; SVG rendering is limited to two post-change
regimes, where the belief simplex projects onto a triangle.
"""

from __future__ import annotations

import csv

import numpy as np

from .errors import ValidationFailure
from .grid import _enumerate_compositions
from .model import CostSpec
from .projection import project2_many, project_for
from .solver import Policy, ValueFunction

# Region fill colors by announcement label (1-based), then continuation.
_FILLS = ("#4c9f70", "#7d6bb5", "#d98e32", "#b5556b")
_CONT_FILL = "#f7f5ef"


def write_policy_csv(fh, vf: ValueFunction, policy: Policy) -> None:
    """Rows ``k_0..k_M, value, verdict, label`` in grid order."""

    grid = vf.grid
    writer = csv.writer(fh)
    writer.writerow(
        [f"k_{i}" for i in range(grid.M + 1)] + ["value", "verdict", "label"]
    )
    verdicts = policy.verdicts
    for g in range(grid.n_points):
        row = [int(k) for k in grid.points[g]]
        writer.writerow(
            row + [repr(float(vf.values[g])), int(verdicts[g] > 0), int(verdicts[g])]
        )


def write_region_raster(fh, policy: Policy) -> None:
    """Rows ``k_0..k_M, projected coords, verdict, label`` for plotting."""

    grid = policy.grid
    project = project_for(grid.M)
    writer = csv.writer(fh)
    coord_names = {2: ["x", "y"], 3: ["x", "y", "z"]}.get(grid.M, [])
    writer.writerow(
        [f"k_{i}" for i in range(grid.M + 1)] + coord_names + ["verdict", "label"]
    )
    coords = project(grid.points_float) if project is not None else None
    verdicts = policy.verdicts
    for g in range(grid.n_points):
        row = [int(k) for k in grid.points[g]]
        if coords is not None:
            row += [f"{c:.10g}" for c in coords[g]]
        writer.writerow(row + [int(verdicts[g] > 0), int(verdicts[g])])


def write_trajectory_csv(fh, result) -> None:
    """Rows ``stage, pi_0..pi_M, stopped, decision`` for one recorded run."""

    if not result.trajectory:
        raise ValidationFailure(["run was not recorded with a trajectory"])
    m_plus = len(result.trajectory[0].pi)
    writer = csv.writer(fh)
    writer.writerow(
        ["stage"] + [f"pi_{i}" for i in range(m_plus)] + ["stopped", "decision"]
    )
    last = len(result.trajectory) - 1
    for stage, belief in enumerate(result.trajectory):
        stopped = int(stage == last)
        writer.writerow(
            [stage]
            + [repr(float(v)) for v in belief.pi]
            + [stopped, result.decision if stopped else 0]
        )


def _tie_locus(costs: CostSpec) -> list:
    """Projected endpoints of the announcement-indifference line, if any.

    For two announcements the locus ``h_1 = h_2`` is the zero set of a
    linear function; intersecting with the simplex edges gives at most two
    points.  Returns [] when the locus misses the simplex or the costs are
    identical everywhere (locus is the whole triangle).
    """

    g = costs.a[:, 0] - costs.a[:, 1]
    if np.allclose(g, 0.0):
        return []
    corners = np.eye(3)
    pts = []
    for r in range(3):
        for s in range(r + 1, 3):
            gr, gs = float(g[r]), float(g[s])
            if gr == 0.0:
                pts.append(corners[r])
            if gr != gs:
                t = gr / (gr - gs)
                if 0.0 < t < 1.0:
                    pts.append((1.0 - t) * corners[r] + t * corners[s])
    if len(pts) < 2:
        return []
    arr = np.unique(np.round(np.vstack(pts), 12), axis=0)
    if arr.shape[0] < 2:
        return []
    proj = project2_many(arr)
    # Keep the two extreme points of the (collinear) intersection.
    order = np.lexsort((proj[:, 1], proj[:, 0]))
    return [proj[order[0]], proj[order[-1]]]


def _triangle_cells(grid) -> tuple[np.ndarray, np.ndarray]:
    """Vertex ranks of the up- and down-oriented cells of the triangle grid."""

    G = grid.G
    eye = np.eye(3, dtype=np.int64)
    up_base = _enumerate_compositions(G - 1, 3)
    up = np.stack(
        [grid.rank(up_base + eye[j]) for j in range(3)], axis=1
    )
    if G >= 2:
        down_base = _enumerate_compositions(G - 2, 3) + 1
        down = np.stack(
            [grid.rank(down_base - eye[j]) for j in range(3)], axis=1
        )
    else:
        down = np.empty((0, 3), dtype=np.int64)
    return up, down


def write_region_svg(fh, policy: Policy, costs: CostSpec, *,
                     trajectory=None, width: int = 640) -> None:
    """Draw the stopping regions of a two-regime policy as an SVG triangle.

    Each small cell of the grid triangulation is filled when all three of
    its corners stop, colored by the lowest announced label among them; the
    announcement-indifference locus is dashed; an optional belief
    trajectory is drawn as a polyline with dots.
    """

    grid = policy.grid
    if grid.M != 2:
        raise ValidationFailure(
            [f"SVG rendering needs exactly 2 post-change regimes, got M={grid.M}"]
        )
    span_x = 2.0 / np.sqrt(3.0)
    pad = 0.08
    scale = width / (span_x + 2 * pad)
    height = int(round(scale * (1.0 + 2 * pad)))

    proj = project2_many(grid.points_float)

    def to_px(xy) -> tuple[float, float]:
        return ((xy[0] + pad) * scale, height - (xy[1] + pad) * scale)

    def pts_attr(ranks) -> str:
        return " ".join(
            "{:.2f},{:.2f}".format(*to_px(proj[r])) for r in ranks
        )

    verdicts = policy.verdicts
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    corners = grid.vertex_ranks()
    parts.append(
        f'<polygon points="{pts_attr(corners)}" fill="{_CONT_FILL}" stroke="none"/>'
    )
    up, down = _triangle_cells(grid)
    for cells in (up, down):
        cell_verd = verdicts[cells]
        stopped = (cell_verd > 0).all(axis=1)
        for tri in cells[stopped]:
            label = int(verdicts[tri].min())
            fill = _FILLS[(label - 1) % len(_FILLS)]
            parts.append(
                f'<polygon points="{pts_attr(tri)}" fill="{fill}" '
                f'stroke="{fill}" stroke-width="0.4"/>'
            )
    parts.append(
        f'<polygon points="{pts_attr(corners)}" fill="none" '
        'stroke="#222" stroke-width="1.5"/>'
    )
    locus = _tie_locus(costs)
    if locus:
        (x1, y1), (x2, y2) = to_px(locus[0]), to_px(locus[1])
        parts.append(
            f'<line x1="{x1:.2f}" y1="{y1:.2f}" x2="{x2:.2f}" y2="{y2:.2f}" '
            'stroke="#222" stroke-width="1.2" stroke-dasharray="7,5"/>'
        )
    labels = ("no change", "regime 1", "regime 2")
    offsets = ((-8.0, 16.0), (10.0, 16.0), (0.0, -10.0))
    for corner_rank, text, (dx, dy) in zip(corners, labels, offsets):
        x, y = to_px(proj[corner_rank])
        parts.append(
            f'<text x="{x + dx:.2f}" y="{y + dy:.2f}" font-family="sans-serif" '
            f'font-size="13" text-anchor="middle" fill="#222">{text}</text>'
        )
    if trajectory:
        path = np.asarray([np.asarray(b, dtype=np.float64) for b in trajectory])
        pxy = [to_px(xy) for xy in project2_many(path)]
        pts = " ".join(f"{x:.2f},{y:.2f}" for x, y in pxy)
        parts.append(
            f'<polyline points="{pts}" fill="none" stroke="#c33" '
            'stroke-width="1.6"/>'
        )
        for i, (x, y) in enumerate(pxy):
            r = 4.0 if i in (0, len(pxy) - 1) else 2.2
            parts.append(
                f'<circle cx="{x:.2f}" cy="{y:.2f}" r="{r}" fill="#c33"/>'
            )
    parts.append("</svg>")
    fh.write("\n".join(parts))
    fh.write("\n")
