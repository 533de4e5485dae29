"""Monte Carlo risk estimation, strategy comparison, posterior diagnostics.

Episodes come from the block sampler in :mod:`qcdi.posterior`, so two
estimates with the same master seed see identical change times, regimes,
and observation streams (common random numbers); comparisons between
strategies pair episode by episode.  Accumulation uses a deterministic
pairwise reduction so totals are reproducible bit-for-bit and stable at
millions of episodes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ValidationFailure
from .model import Belief, CostSpec, ModelSpec, initial_belief, validate
from .posterior import BLOCK_SIZE, EpisodeBlock, apply_T, predictive_pmf
from .strategy import HORIZON_GUARD, simulate_block


def pairwise_sum(values: np.ndarray) -> float:
    """Deterministic pairwise reduction (halves the rounding depth of a loop)."""

    arr = np.asarray(values, dtype=np.float64).ravel().copy()
    n = arr.size
    if n == 0:
        return 0.0
    while n > 1:
        half = n // 2
        arr[:half] += arr[n - half : n]
        n -= half
    return float(arr[0])


@dataclass(frozen=True)
class RiskEstimate:
    """Sample mean of the realized loss with its standard error.

    ``mean`` always equals ``delay_mean + false_alarm_mean + misid_mean``
    because the total is accumulated from the same component sums.
    """

    mean: float
    se: float
    delay_mean: float
    false_alarm_mean: float
    misid_mean: float
    episodes: int
    seed: int
    mean_tau: float


def _episode_losses(model, costs, rule, episodes, seed, horizon_guard):
    report = validate(model, costs)
    report.raise_if_failed()
    if episodes < 2:
        raise ValidationFailure([f"need at least 2 episodes, got {episodes}"])
    losses = np.empty(episodes, dtype=np.float64)
    delay_part = np.empty(episodes, dtype=np.float64)
    fa_part = np.empty(episodes, dtype=np.float64)
    mis_part = np.empty(episodes, dtype=np.float64)
    taus = np.empty(episodes, dtype=np.int64)
    n_blocks = (episodes + BLOCK_SIZE - 1) // BLOCK_SIZE
    for b in range(n_blocks):
        lo = b * BLOCK_SIZE
        hi = min(episodes, (b + 1) * BLOCK_SIZE)
        active = np.zeros(BLOCK_SIZE, dtype=bool)
        active[: hi - lo] = True
        thetas, mus, tau_b, dec_b = simulate_block(
            model, costs, rule, seed, b, active=active, horizon_guard=horizon_guard
        )
        sel = slice(0, hi - lo)
        out = slice(lo, hi)
        delay = np.maximum(tau_b[sel] - thetas[sel], 0)
        false_alarm = tau_b[sel] < thetas[sel]
        truth = np.where(false_alarm, 0, mus[sel])
        terminal = costs.a[truth, dec_b[sel] - 1]
        delay_part[out] = costs.c * delay
        fa_part[out] = np.where(false_alarm, terminal, 0.0)
        mis_part[out] = np.where(false_alarm, 0.0, terminal)
        losses[out] = delay_part[out] + fa_part[out] + mis_part[out]
        taus[out] = tau_b[sel]
    return losses, delay_part, fa_part, mis_part, taus


def estimate_risk(
    model: ModelSpec,
    costs: CostSpec,
    rule,
    episodes: int,
    seed: int,
    *,
    horizon_guard: int = HORIZON_GUARD,
) -> RiskEstimate:
    """Estimate the Bayes risk of a stopping rule by simulation."""

    losses, delay_part, fa_part, mis_part, taus = _episode_losses(
        model, costs, rule, episodes, seed, horizon_guard
    )
    n = float(episodes)
    delay_mean = pairwise_sum(delay_part) / n
    fa_mean = pairwise_sum(fa_part) / n
    mis_mean = pairwise_sum(mis_part) / n
    mean = delay_mean + fa_mean + mis_mean
    centered = losses - mean
    var = pairwise_sum(centered * centered) / (n - 1.0)
    se = float(np.sqrt(max(var, 0.0) / n))
    return RiskEstimate(
        mean=mean,
        se=se,
        delay_mean=delay_mean,
        false_alarm_mean=fa_mean,
        misid_mean=mis_mean,
        episodes=episodes,
        seed=seed,
        mean_tau=pairwise_sum(taus.astype(np.float64)) / n,
    )


@dataclass(frozen=True)
class DominanceRow:
    """Paired comparison of one alternative against the reference rule."""

    name: str
    risk: float
    se: float
    diff: float
    diff_se: float
    slack: float
    upper_bound: float | None
    consistent: bool


@dataclass(frozen=True)
class DominanceReport:
    reference: str
    reference_risk: float
    reference_se: float
    episodes: int
    seed: int
    rows: tuple

    @property
    def all_consistent(self) -> bool:
        return all(r.consistent for r in self.rows)

    def lines(self):
        yield (
            f"reference {self.reference}: risk={self.reference_risk:.6f} "
            f"se={self.reference_se:.6f} ({self.episodes} episodes)"
        )
        for r in self.rows:
            bound = "" if r.upper_bound is None else f" bound={r.upper_bound:.6f}"
            flag = "ok" if r.consistent else "VIOLATION"
            yield (
                f"{r.name}: risk={r.risk:.6f} diff={r.diff:+.6f} "
                f"diff_se={r.diff_se:.6f}{bound} [{flag}]"
            )


def dominance_check(
    model: ModelSpec,
    costs: CostSpec,
    reference_rule,
    alternatives: dict,
    episodes: int,
    seed: int,
    *,
    reference_name: str = "optimal",
    slack: float = 0.0,
    upper_bounds: dict | None = None,
    horizon_guard: int = HORIZON_GUARD,
) -> DominanceReport:
    """Check no alternative beats the reference beyond noise and slack.

    All rules see the same episodes (common random numbers), so each
    comparison uses the paired-difference standard error.  An alternative is
    consistent when ``risk_alt - risk_ref >= -(3 * diff_se + slack)``; when
    ``upper_bounds[name]`` is given, the excess must also stay below that
    bound plus the same allowance.
    """

    ref_losses, *_ = _episode_losses(
        model, costs, reference_rule, episodes, seed, horizon_guard
    )
    n = float(episodes)
    ref_mean = pairwise_sum(ref_losses) / n
    ref_centered = ref_losses - ref_mean
    ref_se = float(
        np.sqrt(max(pairwise_sum(ref_centered * ref_centered) / (n - 1.0), 0.0) / n)
    )
    rows = []
    for name, rule in alternatives.items():
        alt_losses, *_ = _episode_losses(
            model, costs, rule, episodes, seed, horizon_guard
        )
        alt_mean = pairwise_sum(alt_losses) / n
        alt_centered = alt_losses - alt_mean
        alt_se = float(
            np.sqrt(max(pairwise_sum(alt_centered * alt_centered) / (n - 1.0), 0.0) / n)
        )
        diff = alt_losses - ref_losses
        diff_mean = alt_mean - ref_mean
        diff_centered = diff - diff_mean
        diff_se = float(
            np.sqrt(max(pairwise_sum(diff_centered * diff_centered) / (n - 1.0), 0.0) / n)
        )
        allowance = 3.0 * diff_se + slack
        consistent = diff_mean >= -allowance
        upper = None if upper_bounds is None else upper_bounds.get(name)
        if upper is not None and consistent:
            consistent = diff_mean <= upper + allowance
        rows.append(
            DominanceRow(
                name=name,
                risk=alt_mean,
                se=alt_se,
                diff=diff_mean,
                diff_se=diff_se,
                slack=slack,
                upper_bound=upper,
                consistent=consistent,
            )
        )
    return DominanceReport(
        reference=reference_name,
        reference_risk=ref_mean,
        reference_se=ref_se,
        episodes=episodes,
        seed=seed,
        rows=tuple(rows),
    )


# --- posterior diagnostics ------------------------------------------------


@dataclass(frozen=True)
class DiagnosticsRow:
    quantity: str
    stage: int
    observed: float
    se: float
    bound: float | None
    consistent: bool


@dataclass(frozen=True)
class DiagnosticsReport:
    episodes: int
    seed: int
    rows: tuple

    @property
    def all_consistent(self) -> bool:
        return all(r.consistent for r in self.rows)

    def lines(self):
        for r in self.rows:
            bound = "" if r.bound is None else f" bound={r.bound:.6g}"
            flag = "ok" if r.consistent else "VIOLATION"
            yield (
                f"{r.quantity} @ stage {r.stage}: value={r.observed:.6g} "
                f"se={r.se:.6g}{bound} [{flag}]"
            )


def _mean_se(values: np.ndarray) -> tuple[float, float]:
    n = float(values.size)
    mean = pairwise_sum(values) / n
    centered = values - mean
    se = float(np.sqrt(max(pairwise_sum(centered * centered) / (n - 1.0), 0.0) / n))
    return mean, se


def posterior_diagnostics(
    model: ModelSpec,
    episodes: int,
    seed: int,
    *,
    stages: tuple = (1, 2, 5, 10),
    dissipation_stage: int | None = None,
    dissipation_level: float = 1e-3,
) -> DiagnosticsReport:
    """Simulation checks of the posterior's martingale structure.

    Verifies that the no-change mass is a supermartingale dominated by
    ``(1-p)^n``, that each post-change coordinate is a submartingale (mean
    increments nonnegative within noise), and optionally that the no-change
    mass has dissipated by a given stage.  Three standard errors of slack
    are allowed on the sampled means.
    """

    report = validate(model)
    report.raise_if_failed()
    if episodes < 2:
        raise ValidationFailure([f"need at least 2 episodes, got {episodes}"])
    stages = tuple(sorted(set(int(s) for s in stages)))
    last_stage = max(
        stages[-1] if stages else 0,
        dissipation_stage if dissipation_stage is not None else 0,
    )
    want_inc = set(stages[:-1]) if stages else set()

    pi0_at = {s: np.empty(episodes) for s in stages}
    inc_at = {s: np.empty((episodes, model.hypotheses)) for s in want_inc}
    dissipated = np.empty(episodes, dtype=bool) if dissipation_stage else None

    n_blocks = (episodes + BLOCK_SIZE - 1) // BLOCK_SIZE
    for b in range(n_blocks):
        lo = b * BLOCK_SIZE
        hi = min(episodes, (b + 1) * BLOCK_SIZE)
        take = hi - lo
        block = EpisodeBlock(model, seed, b)
        beliefs = np.tile(initial_belief(model).pi, (block.size, 1))
        prev = {s: None for s in want_inc}
        for stage in range(1, last_stage + 1):
            symbols = block.next_symbols()
            if stage - 1 in want_inc:
                prev[stage - 1] = beliefs[:, 1:].copy()
            beliefs, tot = kernels.update_batch(
                beliefs, symbols, model.f, model.p, model.nu
            )
            if np.any(tot <= 0.0):
                raise ValidationFailure(
                    [f"zero predictive probability at stage {stage} of block {b}"]
                )
            if stage in pi0_at:
                pi0_at[stage][lo:hi] = beliefs[:take, 0]
            for s, snap in prev.items():
                if snap is not None and stage == s + 1:
                    inc_at[s][lo:hi] = beliefs[:take, 1:] - snap[:take]
                    prev[s] = None
            if dissipation_stage is not None and stage == dissipation_stage:
                dissipated[lo:hi] = beliefs[:take, 0] < dissipation_level
    rows = []
    decay = 1.0 - model.p
    for s in stages:
        mean, se = _mean_se(pi0_at[s])
        bound = (1.0 - model.p0) * decay**s
        # The bound is attained with equality in expectation, so leave
        # absolute headroom for roundoff when the sample is deterministic.
        rows.append(
            DiagnosticsRow(
                quantity="no_change_mass",
                stage=s,
                observed=mean,
                se=se,
                bound=bound,
                consistent=mean <= bound + 3.0 * se + 1e-9,
            )
        )
    for s in sorted(want_inc):
        for i in range(model.hypotheses):
            mean, se = _mean_se(inc_at[s][:, i])
            rows.append(
                DiagnosticsRow(
                    quantity=f"regime_{i + 1}_increment",
                    stage=s,
                    observed=mean,
                    se=se,
                    bound=None,
                    consistent=mean >= -(3.0 * se + 1e-9),
                )
            )
    if dissipation_stage is not None:
        frac = float(np.count_nonzero(dissipated)) / episodes
        se = float(np.sqrt(max(frac * (1.0 - frac), 1e-12) / episodes))
        rows.append(
            DiagnosticsRow(
                quantity=f"mass_below_{dissipation_level:g}",
                stage=dissipation_stage,
                observed=frac,
                se=se,
                bound=0.999,
                consistent=frac >= 0.999 - 3.0 * se,
            )
        )
    return DiagnosticsReport(episodes=episodes, seed=seed, rows=tuple(rows))


def expectation_identity_gap(
    model: ModelSpec,
    belief: Belief,
    coeffs: np.ndarray,
    episodes: int,
    seed: int,
) -> tuple[float, float]:
    """Monte Carlo check of the one-step expectation operator.

    Draws next symbols from the predictive law at ``belief``, averages the
    linear functional ``coeffs . next_belief``, and returns the difference
    to the operator value together with its standard error.
    """

    coeffs = np.asarray(coeffs, dtype=np.float64)
    gen = np.random.default_rng(np.random.SeedSequence((int(seed), 0)))
    pmf = predictive_pmf(belief, model)
    cdf = np.cumsum(pmf)
    cdf /= cdf[-1]
    u = gen.random(episodes)
    symbols = np.searchsorted(cdf[:-1], u, side="right").astype(np.int64)
    beliefs = np.tile(belief.pi, (episodes, 1))
    nxt, tot = kernels.update_batch(beliefs, symbols, model.f, model.p, model.nu)
    if np.any(tot <= 0.0):
        raise ValidationFailure(["predictive draw produced an impossible symbol"])
    vals = nxt @ coeffs
    mean, se = _mean_se(vals)
    exact = apply_T(lambda b: float(b.pi @ coeffs), belief, model)
    return mean - exact, se
