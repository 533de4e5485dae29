"""Online stopping strategies driven by the posterior belief.

A strategy watches the belief after each observation and decides to take
another sample or to stop and announce a regime.  Announcements always pick
the lowest-index minimizer of the expected terminal cost at the stopping
belief, so strategies differ only in their stopping rule:

* ``OptimalStopRule`` stops when the terminal envelope is within a small
  slack of the cost of one more observation measured against a solved value
  function (evaluated at the exact belief, not a grid projection).
* ``TruncatedStopRule`` replays recorded per-iterate stopping sets: with
  budget ``N`` and ``n`` observations already taken it stops when the
  nearest grid point lies in the set of iterate ``N - n``; iterate 0 stops
  everywhere, so at most ``N`` observations are ever taken.
* ``ThresholdStopRule`` stops once the no-change mass drops to a threshold.
* ``FixedSampleStopRule`` stops after a fixed number of observations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import HorizonGuardTripped, ImpossibleObservation, StreamExhausted, ValidationFailure
from .model import Belief, CostSpec, ModelSpec, initial_belief
from .posterior import EpisodeBlock
from .solver import Policy, ValueFunction, default_stop_eps

HORIZON_GUARD = 100_000


class OptimalStopRule:
    """Bellman test at the exact belief against a solved value function."""

    def __init__(self, model: ModelSpec, costs: CostSpec, vf: ValueFunction,
                 eps_stop: float | None = None):
        if vf.grid.M != model.hypotheses or costs.M != model.hypotheses:
            raise ValidationFailure(["model, costs, and value grid disagree on M"])
        self.model = model
        self.costs = costs
        self.vf = vf
        self.eps_stop = default_stop_eps(costs) if eps_stop is None else float(eps_stop)

    def stop_mask(self, beliefs: np.ndarray, stage: int) -> np.ndarray:
        h = (beliefs @ self.costs.a).min(axis=1)
        cont = self.costs.c * (1.0 - beliefs[:, 0]) + kernels.expected_next_value(
            beliefs,
            self.vf.values,
            self.model.f,
            self.model.p,
            self.model.nu,
            self.vf.grid.G,
            self.vf.grid.binom,
        )
        return h <= cont + self.eps_stop


class TruncatedStopRule:
    """Replay of recorded stopping sets with a hard observation budget."""

    def __init__(self, policy_or_grid, snapshots=None, budget: int | None = None):
        if isinstance(policy_or_grid, Policy):
            grid = policy_or_grid.grid
            snaps = policy_or_grid.region_snapshots
        else:
            grid = policy_or_grid
            snaps = snapshots
        if snaps is None or len(snaps) == 0:
            raise ValidationFailure(["no recorded stopping sets to replay"])
        self.grid = grid
        self.snapshots = [np.asarray(s, dtype=bool) for s in snaps]
        self.budget = len(self.snapshots) - 1 if budget is None else int(budget)
        if not (0 <= self.budget < len(self.snapshots)):
            raise ValidationFailure(
                [
                    f"budget {self.budget} needs snapshots 0..{self.budget}, "
                    f"have {len(self.snapshots)}"
                ]
            )
        if not self.snapshots[0].all():
            raise ValidationFailure(["iterate-0 stopping set must cover the simplex"])

    def stop_mask(self, beliefs: np.ndarray, stage: int) -> np.ndarray:
        remaining = self.budget - stage
        if remaining <= 0:
            return np.ones(beliefs.shape[0], dtype=bool)
        nearest = kernels.nearest(beliefs, self.grid.G, self.grid.binom)
        return self.snapshots[remaining][nearest]


class ThresholdStopRule:
    """Stop once the no-change posterior mass is at or below a threshold."""

    def __init__(self, threshold: float):
        self.threshold = float(threshold)

    def stop_mask(self, beliefs: np.ndarray, stage: int) -> np.ndarray:
        return beliefs[:, 0] <= self.threshold


class FixedSampleStopRule:
    """Stop unconditionally after ``n_obs`` observations."""

    def __init__(self, n_obs: int):
        if n_obs < 0:
            raise ValidationFailure([f"sample size must be >= 0, got {n_obs}"])
        self.n_obs = int(n_obs)

    def stop_mask(self, beliefs: np.ndarray, stage: int) -> np.ndarray:
        return np.full(beliefs.shape[0], stage >= self.n_obs)


@dataclass(frozen=True)
class RunResult:
    """Outcome of one episode: stopping stage, announcement, and realized costs.

    ``delay``, ``false_alarm``, ``misidentified``, and ``loss`` are filled
    when the true change time and regime are known; the loss charges the
    delay rate per post-change observation plus the terminal cost of the
    announcement against the truth.
    """

    tau: int
    decision: int
    theta: int | None = None
    mu: int | None = None
    delay: int | None = None
    false_alarm: bool | None = None
    misidentified: bool | None = None
    loss: float | None = None
    trajectory: tuple = ()


def terminal_decision(belief, costs: CostSpec) -> int:
    """Lowest-index announcement minimizing expected terminal cost."""

    values = np.asarray(belief, dtype=np.float64) @ costs.a
    return int(np.argmin(values)) + 1


def _finish(tau: int, decision: int, theta, mu, costs: CostSpec,
            trajectory) -> RunResult:
    if theta is None:
        return RunResult(tau=tau, decision=decision, trajectory=tuple(trajectory))
    theta = int(theta)
    delay = max(tau - theta, 0)
    false_alarm = tau < theta
    truth = 0 if false_alarm else int(mu)
    loss = costs.c * delay + float(costs.a[truth, decision - 1])
    misidentified = (not false_alarm) and decision != int(mu)
    return RunResult(
        tau=tau,
        decision=decision,
        theta=theta,
        mu=None if mu is None else int(mu),
        delay=delay,
        false_alarm=false_alarm,
        misidentified=misidentified,
        loss=loss,
        trajectory=tuple(trajectory),
    )


def run_rule(
    rule,
    model: ModelSpec,
    costs: CostSpec,
    observations,
    *,
    theta: int | None = None,
    mu: int | None = None,
    record_trajectory: bool = False,
) -> RunResult:
    """Drive one episode of any stopping rule over an observation sequence.

    The rule is consulted before the first observation (stopping at stage 0
    costs no delay) and after each update.  Raises ``StreamExhausted`` when
    the sequence ends first.
    """

    belief = initial_belief(model).pi.copy()
    trajectory = [Belief(belief)] if record_trajectory else []
    stage = 0
    if bool(rule.stop_mask(belief[None, :], 0)[0]):
        return _finish(0, terminal_decision(belief, costs), theta, mu, costs, trajectory)
    for sym in observations:
        new, tot = kernels.update_batch(
            belief[None, :], np.array([int(sym)]), model.f, model.p, model.nu
        )
        if tot[0] <= 0.0:
            raise ImpossibleObservation(
                f"symbol {int(sym)} has zero predictive probability at stage {stage + 1}"
            )
        belief = new[0]
        stage += 1
        if record_trajectory:
            trajectory.append(Belief(belief))
        if bool(rule.stop_mask(belief[None, :], stage)[0]):
            return _finish(
                stage, terminal_decision(belief, costs), theta, mu, costs, trajectory
            )
        if stage >= HORIZON_GUARD:
            raise HorizonGuardTripped([0], HORIZON_GUARD)
    raise StreamExhausted(f"stream ended after {stage} observations without stopping")


def run_optimal(
    model: ModelSpec,
    costs: CostSpec,
    vf: ValueFunction,
    observations,
    *,
    theta: int | None = None,
    mu: int | None = None,
    eps_stop: float | None = None,
    record_trajectory: bool = False,
) -> RunResult:
    """Run the Bellman-test strategy on one observation sequence."""

    rule = OptimalStopRule(model, costs, vf, eps_stop=eps_stop)
    return run_rule(
        rule,
        model,
        costs,
        observations,
        theta=theta,
        mu=mu,
        record_trajectory=record_trajectory,
    )


def run_truncated(
    model: ModelSpec,
    costs: CostSpec,
    policy_or_grid,
    observations,
    *,
    snapshots=None,
    budget: int | None = None,
    theta: int | None = None,
    mu: int | None = None,
    record_trajectory: bool = False,
) -> RunResult:
    """Run the recorded-set strategy; stops after at most ``budget`` samples."""

    rule = TruncatedStopRule(policy_or_grid, snapshots=snapshots, budget=budget)
    return run_rule(
        rule,
        model,
        costs,
        observations,
        theta=theta,
        mu=mu,
        record_trajectory=record_trajectory,
    )


def simulate_block(
    model: ModelSpec,
    costs: CostSpec,
    rule,
    seed: int,
    block_index: int,
    *,
    size: int | None = None,
    active: np.ndarray | None = None,
    horizon_guard: int = HORIZON_GUARD,
):
    """Run one block of episodes in lockstep; returns per-episode outcomes.

    Episodes advance together stage by stage so the block's symbol batches
    are drawn in the canonical order whatever the rule does.  ``active``
    masks out slots that should not run (partial final block).  Returns
    ``(thetas, mus, taus, decisions)`` with ``tau = -1`` on inactive slots.
    """

    block = EpisodeBlock(model, seed, block_index, **({} if size is None else {"size": size}))
    n = block.size
    beliefs = np.tile(initial_belief(model).pi, (n, 1))
    taus = np.full(n, -1, dtype=np.int64)
    decisions = np.zeros(n, dtype=np.int64)
    running = np.ones(n, dtype=bool) if active is None else active.copy()

    def settle(mask_rows):
        vals = beliefs[mask_rows] @ costs.a
        decisions[mask_rows] = np.argmin(vals, axis=1) + 1
        taus[mask_rows] = block.stage

    idx = np.flatnonzero(running)
    if idx.size:
        stopped = rule.stop_mask(beliefs[idx], 0)
        settle(idx[stopped])
        running[idx[stopped]] = False
    while running.any():
        if block.stage >= horizon_guard:
            raise HorizonGuardTripped(
                block.block_index * n + np.flatnonzero(running), horizon_guard
            )
        symbols = block.next_symbols()
        idx = np.flatnonzero(running)
        new, tot = kernels.update_batch(
            beliefs[idx], symbols[idx], model.f, model.p, model.nu
        )
        dead = tot <= 0.0
        if dead.any():
            raise ImpossibleObservation(
                f"zero predictive probability in episodes "
                f"{(block.block_index * n + idx[dead]).tolist()[:8]}"
            )
        beliefs[idx] = new
        stopped = rule.stop_mask(beliefs[idx], block.stage)
        settle(idx[stopped])
        running[idx[stopped]] = False
    return block.thetas, block.mus, taus, decisions
