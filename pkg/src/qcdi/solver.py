"""Value iteration on a simplex grid and stopping-region extraction.

The optimal-stopping value function solves

    V(pi) = min( h(pi), c * (1 - pi_0) + (T V)(pi) )

with ``h`` the terminal-cost envelope and ``T`` the one-step expectation
operator from :mod:`qcdi.posterior`.  On a grid the expectation of an
interpolated function is linear in the grid values, so one Bellman sweep is
``min(h, delay + A @ v)`` for a sparse row-stochastic matrix ``A`` that is
precomputed once: entry ``A[g, r]`` collects, over symbols ``x``, the
predictive mass ``D(pi_g, x)`` times the interpolation weight that the
posterior of ``pi_g`` after ``x`` puts on grid point ``r``.

Iterating from ``v = h`` descends monotonically; because the sweep is a
sup-norm nonexpansion the iterate deltas never increase, so when the last
delta is at most ``tol`` the returned iterate has Bellman residual at most
``tol`` as well.  The distance to the un-truncated optimum is certified by
``(hsup^2 / c + hsup / p) / N`` after ``N`` sweeps.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import kernels
from .errors import IterationBudgetExceeded, QcdiError, ValidationFailure
from .grid import SimplexGrid, build_grid
from .model import Belief, CostSpec, ModelSpec, h_sup_bound, validate

# Default absolute slack when testing "stop is at least as good as continuing";
# scaled by (1 + hsup) to stay meaningful across cost magnitudes.
STOP_EPS_SCALE = 1e-8

# Slack when testing which announcements attain the terminal envelope.
TIE_EPS_SCALE = 1e-9


def default_stop_eps(costs: CostSpec) -> float:
    return STOP_EPS_SCALE * (1.0 + h_sup_bound(costs))


def default_tie_eps(costs: CostSpec) -> float:
    return TIE_EPS_SCALE * (1.0 + h_sup_bound(costs))


class DiscretizedOperator:
    """Grid discretization of the Bellman sweep for one instance."""

    def __init__(self, model: ModelSpec, costs: CostSpec, grid: SimplexGrid):
        report = validate(model, costs)
        report.raise_if_failed()
        if grid.M != model.hypotheses:
            raise ValidationFailure(
                [f"grid has M={grid.M} but model has M={model.hypotheses}"]
            )
        self.model = model
        self.costs = costs
        self.grid = grid
        pts = grid.points_float
        self.h_all = pts @ costs.a
        self.h = self.h_all.min(axis=1)
        self.labels = np.argmin(self.h_all, axis=1).astype(np.int64) + 1
        self.delay = costs.c * (1.0 - pts[:, 0])
        self.matrix = self._build_matrix()

    def _build_matrix(self) -> sp.csr_matrix:
        grid = self.grid
        model = self.model
        pts = grid.points_float
        n = grid.n_points
        mp1 = grid.M + 1
        d0 = (1.0 - model.p) * pts[:, 0]
        mix = pts[:, 1:] + np.outer(pts[:, 0] * model.p, model.nu)
        rows_parts, cols_parts, data_parts = [], [], []
        dx = np.empty((n, mp1))
        base_rows = np.arange(n, dtype=np.int64)
        for sym in range(model.alphabet.size):
            dx[:, 0] = d0 * model.f[0, sym]
            dx[:, 1:] = mix * model.f[1:, sym]
            tot = dx.sum(axis=1)
            live = tot > 0.0
            if not live.any():
                continue
            idx, wgt = kernels.locate(dx[live], grid.G, grid.binom)
            contrib = wgt * tot[live, None]
            rows_parts.append(np.repeat(base_rows[live], mp1))
            cols_parts.append(idx.ravel())
            data_parts.append(contrib.ravel())
        mat = sp.coo_matrix(
            (
                np.concatenate(data_parts),
                (np.concatenate(rows_parts), np.concatenate(cols_parts)),
            ),
            shape=(n, n),
        )
        return mat.tocsr()

    def continuation(self, values: np.ndarray) -> np.ndarray:
        """Cost of taking one more observation against ``values`` afterwards."""

        return self.delay + self.matrix @ values

    def bellman(self, values: np.ndarray) -> np.ndarray:
        """One sweep: pointwise min of stopping now and continuing."""

        return np.minimum(self.h, self.continuation(values))

    def stop_mask(self, values: np.ndarray, eps: float) -> np.ndarray:
        """Grid points where stopping is within ``eps`` of the sweep optimum."""

        return self.h <= self.continuation(values) + eps


@dataclass
class ValueFunction:
    """Solved grid values plus convergence metadata; callable on beliefs."""

    grid: SimplexGrid
    values: np.ndarray
    iteration_count: int
    certified_gap: float
    final_delta: float
    snapshots: list = field(default_factory=list, repr=False)

    def interpolate_many(self, points) -> np.ndarray:
        idx, wgt = self.grid.locate(points)
        return np.einsum("ij,ij->i", self.values[idx], wgt)

    def __call__(self, belief) -> float:
        pi = np.asarray(belief, dtype=np.float64)
        return float(self.interpolate_many(pi[None, :])[0])


def interpolate(vf: ValueFunction, belief) -> float:
    """Value of the interpolated function at one belief."""

    return vf(belief)


def bellman(model: ModelSpec, costs: CostSpec, grid: SimplexGrid,
            values: np.ndarray) -> np.ndarray:
    """One Bellman sweep of ``values``; builds the operator each call.

    Use :class:`DiscretizedOperator` directly when sweeping repeatedly.
    """

    return DiscretizedOperator(model, costs, grid).bellman(values)


def _default_iteration_cap(model: ModelSpec, costs: CostSpec, tol: float) -> int:
    hsup = h_sup_bound(costs)
    certified = (hsup * hsup / costs.c + hsup / model.p)
    # The certified-rate iteration count is a crude worst case; the sup-norm
    # stop usually triggers orders of magnitude earlier.
    return max(1000, int(np.ceil(10.0 * certified / max(tol, 1e-12))))


def value_iterate(
    model: ModelSpec,
    costs: CostSpec,
    grid: SimplexGrid,
    *,
    tol: float = 1e-6,
    fixed_iters: int | None = None,
    max_iters: int | None = None,
    record_snapshots: int = 0,
    eps_stop: float | None = None,
    operator: DiscretizedOperator | None = None,
) -> ValueFunction:
    """Iterate the Bellman sweep from the terminal envelope.

    Stops after ``fixed_iters`` sweeps when given, otherwise when the
    sup-norm iterate delta reaches ``tol`` (raising if ``max_iters`` sweeps
    do not get there).  ``record_snapshots = N`` keeps the stopping-set
    masks of iterates 0..N, which truncated strategies replay.
    """

    op = operator or DiscretizedOperator(model, costs, grid)
    if eps_stop is None:
        eps_stop = default_stop_eps(costs)
    v = op.h.copy()
    snapshots: list = []
    if record_snapshots > 0:
        snapshots.append(np.ones(grid.n_points, dtype=bool))
    cap = fixed_iters if fixed_iters is not None else (
        max_iters if max_iters is not None else _default_iteration_cap(model, costs, tol)
    )
    if cap < 1:
        raise ValidationFailure([f"iteration cap must be >= 1, got {cap}"])
    n_iters = 0
    delta = np.inf
    while True:
        cont = op.continuation(v)
        v_next = np.minimum(op.h, cont)
        if not np.all(np.isfinite(v_next)):
            raise QcdiError("non-finite value encountered during iteration")
        delta = float(np.max(np.abs(v - v_next)))
        n_iters += 1
        if record_snapshots > 0 and len(snapshots) <= record_snapshots:
            snapshots.append(op.h <= cont + eps_stop)
        v = v_next
        if fixed_iters is not None:
            if n_iters >= fixed_iters:
                break
        elif delta <= tol:
            break
        elif n_iters >= cap:
            raise IterationBudgetExceeded(
                f"delta {delta:.3e} above tol {tol:.3e} after {n_iters} sweeps"
            )
    hsup = h_sup_bound(costs)
    certified = (hsup * hsup / costs.c + hsup / model.p) / n_iters
    return ValueFunction(
        grid=grid,
        values=v,
        iteration_count=n_iters,
        certified_gap=certified,
        final_delta=delta,
        snapshots=snapshots,
    )


@dataclass
class Policy:
    """Stop/continue verdicts with announcement labels on a grid.

    ``verdicts[g]`` is 0 to continue or ``j >= 1`` to stop and announce the
    lowest-index minimizer of the terminal costs.  ``stop_labels[g, j-1]``
    is True when announcing ``j`` is within tie tolerance of optimal at a
    stopping point; these tie-inclusive sets are what the per-announcement
    region diagnostics inspect.
    """

    grid: SimplexGrid
    verdicts: np.ndarray
    stop_labels: np.ndarray
    eps_stop: float
    tie_eps: float
    region_snapshots: list = field(default_factory=list, repr=False)

    def stop_mask(self) -> np.ndarray:
        return self.verdicts > 0

    def label_set(self, j: int) -> np.ndarray:
        """Tie-inclusive stopping set of announcement ``j``."""

        return self.stop_labels[:, j - 1]


def extract_policy(
    vf: ValueFunction,
    model: ModelSpec,
    costs: CostSpec,
    *,
    eps_stop: float | None = None,
    tie_eps: float | None = None,
    operator: DiscretizedOperator | None = None,
) -> Policy:
    """Read the stopping region and labels off a solved value function.

    A point stops when its terminal envelope is within ``eps_stop`` of the
    one-more-observation cost.  Points where some announcement already beats
    continuing for sure (its cost is at most ``min(h, delay)``) are forced
    to stop: the optimality equation implies they stop, and marking them
    explicitly protects the corners from interpolation noise.
    """

    op = operator or DiscretizedOperator(model, costs, vf.grid)
    if eps_stop is None:
        eps_stop = default_stop_eps(costs)
    if tie_eps is None:
        tie_eps = default_tie_eps(costs)
    stop = op.stop_mask(vf.values, eps_stop)
    sure = op.h_all <= (np.minimum(op.h, op.delay) + tie_eps)[:, None]
    stop |= sure.any(axis=1)
    verdicts = np.where(stop, op.labels, 0).astype(np.uint8)
    stop_labels = stop[:, None] & (op.h_all <= (op.h + tie_eps)[:, None])
    return Policy(
        grid=vf.grid,
        verdicts=verdicts,
        stop_labels=stop_labels,
        eps_stop=float(eps_stop),
        tie_eps=float(tie_eps),
        region_snapshots=list(vf.snapshots),
    )


# --- region diagnostics --------------------------------------------------


def component_sizes(grid: SimplexGrid, mask: np.ndarray) -> tuple[int, ...]:
    """Sizes of the connected components of ``mask`` under one-unit-move
    edges, largest first."""

    tables = list(grid.directed_neighbors.values())
    comp = np.full(grid.n_points, -1, dtype=np.int64)
    sizes = []
    for seed in np.flatnonzero(mask):
        if comp[seed] >= 0:
            continue
        comp[seed] = len(sizes)
        size = 1
        frontier = np.array([seed], dtype=np.int64)
        while frontier.size:
            gathered = []
            for tbl in tables:
                cand = tbl[frontier]
                cand = cand[cand >= 0]
                cand = cand[mask[cand] & (comp[cand] < 0)]
                if cand.size:
                    comp[cand] = len(sizes)
                    size += cand.size
                    gathered.append(cand)
            frontier = np.concatenate(gathered) if gathered else np.empty(0, np.int64)
        sizes.append(size)
    return tuple(sorted(sizes, reverse=True))


def connected_components(grid: SimplexGrid, mask: np.ndarray) -> int:
    """Number of connected components of ``mask`` under one-unit-move edges."""

    return len(component_sizes(grid, mask))


def essential_component_count(sizes: tuple[int, ...]) -> int:
    """Component count after discarding single-point components.

    A set one grid cell wide can intersect the grid graph as an isolated
    point even when the underlying region is connected (the graph step
    along a ridge can exceed one unit move), so singleton components are
    resolution artifacts at the one-cell scale — the same scale forgiven
    by :func:`_effective_runs`.  Singletons are dropped only when a larger
    component exists; a region made entirely of isolated points keeps its
    raw count."""

    solid = [s for s in sizes if s > 1]
    return len(solid) if solid else len(sizes)


def _effective_runs(seq: np.ndarray) -> int:
    """Count membership runs along a line, forgiving one-cell jitter.

    Runs separated by a single gap cell are merged, then single-cell runs
    are dropped when longer ones exist (a region grazing the line can leave
    an isolated cell).  At least one run is reported if any cell is set.
    """

    padded = np.concatenate([[False], seq, [False]])
    starts = np.flatnonzero(~padded[:-1] & padded[1:])
    ends = np.flatnonzero(padded[:-1] & ~padded[1:])
    if starts.size == 0:
        return 0
    runs = [[int(s), int(e)] for s, e in zip(starts, ends)]
    merged = [runs[0]]
    for s, e in runs[1:]:
        if s - merged[-1][1] <= 1:
            merged[-1][1] = e
        else:
            merged.append([s, e])
    if len(merged) == 1:
        return 1
    solid = [r for r in merged if r[1] - r[0] > 1]
    return max(len(solid), 1)


def line_convexity(grid: SimplexGrid, mask: np.ndarray) -> tuple[int, int]:
    """Check ``mask`` is an interval along every grid line.

    A grid line fixes all coordinates but a pair (a, b) and varies mass
    between them.  Returns ``(violations, lines_checked)`` where a violation
    is a line with more than one effective membership run.
    """

    points = grid.points
    mp1 = grid.M + 1
    violations = 0
    lines = 0
    for a in range(mp1):
        for b in range(a + 1, mp1):
            others = [i for i in range(mp1) if i not in (a, b)]
            keys = [points[:, i] for i in others]
            order = np.lexsort((points[:, a], *keys))
            if others:
                key_mat = points[np.ix_(order, others)]
                changed = np.any(key_mat[1:] != key_mat[:-1], axis=1)
                bounds = np.concatenate(
                    [[0], np.flatnonzero(changed) + 1, [order.size]]
                )
            else:
                bounds = np.array([0, order.size])
            line_mask = mask[order]
            for lo, hi in zip(bounds[:-1], bounds[1:]):
                seq = line_mask[lo:hi]
                if not seq.any():
                    continue
                lines += 1
                if _effective_runs(seq) > 1:
                    violations += 1
    return violations, lines


@dataclass(frozen=True)
class RegionStats:
    name: str
    points: int
    component_sizes: tuple
    line_violations: int
    lines_checked: int

    @property
    def components(self) -> int:
        return len(self.component_sizes)

    @property
    def essential_components(self) -> int:
        return essential_component_count(self.component_sizes)

    @property
    def convex_on_lines(self) -> bool:
        return self.line_violations == 0


@dataclass(frozen=True)
class RegionReport:
    grid_M: int
    grid_G: int
    entries: tuple

    def entry(self, name: str) -> RegionStats:
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)

    def lines(self):
        for e in self.entries:
            comp = f"components={e.components}"
            if e.essential_components != e.components:
                comp += f" (essential={e.essential_components})"
            yield (
                f"{e.name}: points={e.points} {comp} "
                f"line_violations={e.line_violations}/{e.lines_checked}"
            )


def region_analysis(policy: Policy) -> RegionReport:
    """Connectivity and line-convexity diagnostics of the stopping sets.

    Covers the overall stopping region, its complement, and each
    tie-inclusive announcement set.  The overall region may genuinely be
    disconnected for some cost structures, so no verdict is attached here;
    callers assert what their instance warrants.
    """

    grid = policy.grid
    entries = []
    stop = policy.stop_mask()
    named = [("stop", stop, False), ("continue", ~stop, False)]
    for j in range(1, policy.stop_labels.shape[1] + 1):
        named.append((f"announce_{j}", policy.label_set(j), True))
    for name, mask, check_lines in named:
        sizes = component_sizes(grid, mask)
        if check_lines:
            viol, lines = line_convexity(grid, mask)
        else:
            viol, lines = 0, 0
        entries.append(
            RegionStats(
                name=name,
                points=int(mask.sum()),
                component_sizes=sizes,
                line_violations=viol,
                lines_checked=lines,
            )
        )
    return RegionReport(grid_M=grid.M, grid_G=grid.G, entries=tuple(entries))


def solve(
    model: ModelSpec,
    costs: CostSpec,
    resolution: int | SimplexGrid,
    *,
    tol: float = 1e-6,
    fixed_iters: int | None = None,
    max_iters: int | None = None,
    record_snapshots: int = 0,
    eps_stop: float | None = None,
    tie_eps: float | None = None,
    budget: int | None = None,
) -> tuple[ValueFunction, Policy]:
    """Build (or accept) a grid, iterate to convergence, extract the policy."""

    if isinstance(resolution, SimplexGrid):
        grid = resolution
    else:
        kwargs = {} if budget is None else {"budget": budget}
        grid = build_grid(model.hypotheses, int(resolution), **kwargs)
    op = DiscretizedOperator(model, costs, grid)
    vf = value_iterate(
        model,
        costs,
        grid,
        tol=tol,
        fixed_iters=fixed_iters,
        max_iters=max_iters,
        record_snapshots=record_snapshots,
        eps_stop=eps_stop,
        operator=op,
    )
    policy = extract_policy(
        vf, model, costs, eps_stop=eps_stop, tie_eps=tie_eps, operator=op
    )
    return vf, policy
