"""Posterior belief dynamics, one-step expectation operator, and sampling.

The belief after observing symbol ``x`` has unnormalized weights

    D_0 = (1 - p) * pi_0 * f_0(x)
    D_i = (pi_i + pi_0 * p * nu_i) * f_i(x)        for i = 1 .. M

whose total ``D = sum_i D_i`` is the predictive probability of ``x``, so the
totals over the alphabet sum to one.  ``apply_T`` is the induced one-step
expectation operator ``(T f)(pi) = sum_x D(pi, x) f(posterior(pi, x))``.

Episode sampling is deterministic per ``(master seed, episode index)`` and
independent of how many episodes are drawn: episodes live in blocks of
``BLOCK_SIZE``; block ``b`` uses ``PCG64(SeedSequence((seed, b)))`` and draws
one uniform batch for the change times, one for the regimes, then one batch
per stage for the symbols of every slot in the block, stopped or not.  The
stage batches are what give common random numbers across strategies.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ImpossibleObservation, ValidationFailure
from .model import Belief, ModelSpec

BLOCK_SIZE = 1024


@dataclass(frozen=True)
class UnnormalizedWeights:
    """Posterior weights before normalization; ``total`` is predictive mass."""

    d: np.ndarray
    total: float


@dataclass(frozen=True)
class EpisodeSample:
    """One sampled episode: change time, regime, and an observation prefix."""

    theta: int
    mu: int
    observations: np.ndarray


def _check_symbol(model: ModelSpec, symbol: int) -> int:
    sym = int(symbol)
    if not (0 <= sym < model.alphabet.size):
        raise ValidationFailure(
            [f"symbol {sym} outside alphabet of size {model.alphabet.size}"]
        )
    return sym


def weights(belief: Belief, symbol: int, model: ModelSpec) -> UnnormalizedWeights:
    """Unnormalized posterior weights for one observed symbol."""

    sym = _check_symbol(model, symbol)
    pi = belief.pi
    if pi.size != model.hypotheses + 1:
        raise ValidationFailure(
            [f"belief has {pi.size} entries, model wants {model.hypotheses + 1}"]
        )
    d = np.empty_like(pi)
    d[0] = (1.0 - model.p) * pi[0] * model.f[0, sym]
    d[1:] = (pi[1:] + pi[0] * model.p * model.nu) * model.f[1:, sym]
    return UnnormalizedWeights(d=d, total=float(d.sum()))


def update(belief: Belief, symbol: int, model: ModelSpec) -> Belief:
    """Posterior belief after one symbol; rejects zero-probability symbols."""

    w = weights(belief, symbol, model)
    if w.total <= 0.0:
        raise ImpossibleObservation(
            f"symbol {int(symbol)} has zero predictive probability at {belief!r}"
        )
    return Belief(w.d / w.total)


def predictive_pmf(belief: Belief, model: ModelSpec) -> np.ndarray:
    """Predictive distribution of the next symbol at the given belief."""

    out = np.empty(model.alphabet.size)
    for sym in range(model.alphabet.size):
        out[sym] = weights(belief, sym, model).total
    return out


def apply_T(f, belief: Belief, model: ModelSpec) -> float:
    """One-step expectation ``E[f(next belief) | belief]``.

    ``f`` is any callable on beliefs (a solved value function qualifies).
    Symbols with zero predictive mass contribute nothing.
    """

    total = 0.0
    for sym in range(model.alphabet.size):
        w = weights(belief, sym, model)
        if w.total > 0.0:
            total += w.total * float(f(Belief(w.d / w.total)))
    return total


# --- episode sampling ---------------------------------------------------


def _theta_quantile(u: np.ndarray, p0: float, p: float) -> np.ndarray:
    """Inverse CDF of the zero-modified geometric change-time law."""

    t = np.zeros(u.shape, dtype=np.int64)
    tail = u >= p0
    if tail.any():
        w = (u[tail] - p0) / (1.0 - p0)
        # smallest t >= 1 with 1 - (1-p)^t >= w
        raw = np.ceil(np.log1p(-w) / np.log1p(-p))
        t[tail] = np.maximum(raw.astype(np.int64), 1)
    return t


def _mu_quantile(u: np.ndarray, nu: np.ndarray) -> np.ndarray:
    cdf = np.cumsum(nu)
    return np.searchsorted(cdf[:-1], u, side="right").astype(np.int64) + 1


class EpisodeBlock:
    """One block of episodes with lazily drawn per-stage symbol batches.

    ``next_symbols()`` advances every slot by one stage and returns the
    block's symbol vector for that stage.  Draw order is fixed (see module
    docstring), so slot ``i`` is reproducible regardless of consumers.
    """

    def __init__(self, model: ModelSpec, seed: int, block_index: int,
                 size: int = BLOCK_SIZE):
        if np.any(model.nu <= 0.0):
            warnings.warn(
                "nu has zero-mass regimes; they will never be sampled",
                stacklevel=2,
            )
        self.model = model
        self.size = int(size)
        self.block_index = int(block_index)
        self._gen = np.random.default_rng(
            np.random.SeedSequence((int(seed), int(block_index)))
        )
        self.thetas = _theta_quantile(self._gen.random(self.size), model.p0, model.p)
        self.mus = _mu_quantile(self._gen.random(self.size), model.nu)
        self._cdfs = np.cumsum(model.f, axis=1)
        self.stage = 0

    def next_symbols(self) -> np.ndarray:
        """Symbols of stage ``self.stage + 1`` for every slot in the block."""

        u = self._gen.random(self.size)
        self.stage += 1
        regime = np.where(self.stage < self.thetas, 0, self.mus)
        cdf = self._cdfs[regime]
        return (u[:, None] >= cdf[:, :-1]).sum(axis=1).astype(np.int64)


def sample_episodes(model: ModelSpec, horizon: int, seed: int, count: int,
                    start: int = 0):
    """Arrays ``(thetas, mus, observations)`` for episodes start..start+count-1.

    ``observations`` has shape (count, horizon).  Episode ``start + i`` here
    is identical to what any other consumer of the same seed sees.
    """

    if count < 1 or horizon < 0 or start < 0:
        raise ValidationFailure(
            [f"bad sampling request: count={count}, horizon={horizon}, start={start}"]
        )
    thetas = np.empty(count, dtype=np.int64)
    mus = np.empty(count, dtype=np.int64)
    obs = np.empty((count, horizon), dtype=np.int64)
    first_block = start // BLOCK_SIZE
    last_block = (start + count - 1) // BLOCK_SIZE
    for b in range(first_block, last_block + 1):
        block = EpisodeBlock(model, seed, b)
        lo = max(start, b * BLOCK_SIZE)
        hi = min(start + count, (b + 1) * BLOCK_SIZE)
        sel = slice(lo - b * BLOCK_SIZE, hi - b * BLOCK_SIZE)
        out = slice(lo - start, hi - start)
        thetas[out] = block.thetas[sel]
        mus[out] = block.mus[sel]
        for n in range(horizon):
            obs[out, n] = block.next_symbols()[sel]
    return thetas, mus, obs


def sample_episode(model: ModelSpec, horizon: int, seed: int,
                   index: int = 0) -> EpisodeSample:
    """One episode identified by ``(seed, index)``."""

    thetas, mus, obs = sample_episodes(model, horizon, seed, 1, start=index)
    return EpisodeSample(theta=int(thetas[0]), mu=int(mus[0]), observations=obs[0])


def chain_update(model: ModelSpec, beliefs: np.ndarray,
                 symbols: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Batched single-stage update; thin wrapper over the active kernel."""

    return kernels.update_batch(beliefs, symbols, model.f, model.p, model.nu)


def write_episodes_csv(fh, episodes, start_id: int = 0) -> None:
    """Dump episodes as rows ``episode_id, theta, mu, stage, symbol``."""

    writer = csv.writer(fh)
    writer.writerow(["episode_id", "theta", "mu", "stage", "symbol"])
    for offset, ep in enumerate(episodes):
        for stage, sym in enumerate(ep.observations, start=1):
            writer.writerow([start_id + offset, ep.theta, ep.mu, stage, int(sym)])
