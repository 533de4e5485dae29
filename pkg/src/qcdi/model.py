"""Problem instances: change-point prior, observation model, and costs.

An instance describes a discrete-time process that starts in a pre-change
regime with symbol distribution ``f_0`` and switches at a random time
``theta`` to one of ``M`` post-change regimes ``f_1 .. f_M``, the regime
``mu`` being drawn once from the prior ``nu``.  The change time has a
zero-modified geometric law: ``P(theta = 0) = p0`` and
``P(theta = t) = (1 - p0) (1 - p)^(t-1) p`` for ``t >= 1``.

Costs are linear: ``c`` per observation taken after the change, and a
terminal charge ``a[i][j]`` for announcing regime ``j`` while the truth is
``i`` (``i = 0`` meaning the change has not happened yet).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

import numpy as np

from .errors import ValidationFailure

CONFIG_FORMAT = "qcdi-instance-v1"

# Probability vectors must sum to one within this tolerance to validate.
PROB_TOL = 1e-12

# Belief vectors may drift this far from unit sum before being rejected.
BELIEF_TOL = 1e-9


@dataclass(frozen=True)
class ObservationAlphabet:
    """Finite alphabet ``{0, .., size-1}`` the observations live on."""

    size: int

    def __post_init__(self):
        if int(self.size) < 1:
            raise ValidationFailure(["alphabet size must be at least 1"])
        object.__setattr__(self, "size", int(self.size))


def _readonly(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=np.float64)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class ModelSpec:
    """Observation model and change-point prior.

    ``f`` stacks the symbol distributions as rows: row 0 is the pre-change
    distribution, row ``i >= 1`` belongs to post-change regime ``i``.
    """

    alphabet: ObservationAlphabet
    hypotheses: int
    p0: float
    p: float
    nu: np.ndarray
    f: np.ndarray
    name: str = ""

    def __post_init__(self):
        m = int(self.hypotheses)
        object.__setattr__(self, "hypotheses", m)
        object.__setattr__(self, "p0", float(self.p0))
        object.__setattr__(self, "p", float(self.p))
        nu = _readonly(np.atleast_1d(self.nu))
        f = _readonly(np.atleast_2d(self.f))
        if nu.shape != (m,):
            raise ValidationFailure(
                [f"nu has shape {nu.shape}, expected ({m},)"]
            )
        if f.shape != (m + 1, self.alphabet.size):
            raise ValidationFailure(
                [
                    f"f has shape {f.shape}, expected "
                    f"({m + 1}, {self.alphabet.size})"
                ]
            )
        object.__setattr__(self, "nu", nu)
        object.__setattr__(self, "f", f)

    @property
    def M(self) -> int:
        return self.hypotheses


@dataclass(frozen=True)
class CostSpec:
    """Delay cost rate and terminal decision charges.

    ``a`` has one row per true state ``i = 0 .. M`` and one column per
    announced regime ``j = 1 .. M`` (column index ``j - 1``).
    """

    c: float
    a: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "c", float(self.c))
        a = _readonly(np.atleast_2d(self.a))
        if a.ndim != 2 or a.shape[0] != a.shape[1] + 1:
            raise ValidationFailure(
                [f"a has shape {a.shape}, expected (M+1, M)"]
            )
        object.__setattr__(self, "a", a)

    @property
    def M(self) -> int:
        return self.a.shape[1]


class Belief:
    """Point on the probability simplex over ``{change not yet} + M regimes``.

    Entry 0 is the posterior mass of "no change so far"; entry ``i`` is the
    mass of "change happened and the regime is ``i``".  Construction
    renormalizes so the entries sum to 1.0 up to one rounding step (the
    residue is absorbed into the largest entry) and rejects input that is
    negative or drifted more than ``BELIEF_TOL`` away from unit sum.
    """

    __slots__ = ("pi",)

    def __init__(self, pi):
        arr = np.array(pi, dtype=np.float64)
        if arr.ndim != 1 or arr.size < 2:
            raise ValidationFailure(
                [f"belief must be a 1-d vector of length >= 2, got shape {arr.shape}"]
            )
        if np.any(arr < 0.0) or not np.all(np.isfinite(arr)):
            raise ValidationFailure(["belief entries must be finite and nonnegative"])
        total = float(arr.sum())
        if abs(total - 1.0) > BELIEF_TOL:
            raise ValidationFailure(
                [f"belief sums to {total!r}, more than {BELIEF_TOL} from 1"]
            )
        arr /= total
        # Absorb the rounding residue into the largest entry.  This brings
        # the sum within one ulp of 1.0 (bit-exactness is not achievable in
        # general because the summation order is not under our control);
        # downstream kernels renormalize where unit mass matters.
        arr[int(np.argmax(arr))] += 1.0 - arr.sum()
        arr.setflags(write=False)
        self.pi = arr

    @property
    def M(self) -> int:
        return self.pi.size - 1

    def __getitem__(self, i: int) -> float:
        return float(self.pi[i])

    def __len__(self) -> int:
        return self.pi.size

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.pi if not copy else self.pi.copy()
        return self.pi.astype(dtype)

    def __repr__(self) -> str:
        body = ", ".join(f"{v:.6g}" for v in self.pi)
        return f"Belief([{body}])"

    def __eq__(self, other) -> bool:
        if not isinstance(other, Belief):
            return NotImplemented
        return np.array_equal(self.pi, other.pi)


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    issues: tuple

    def raise_if_failed(self) -> None:
        if not self.ok:
            raise ValidationFailure(self.issues)


def _check_pmf(vec: np.ndarray, label: str, issues: list, strict_support=False):
    if np.any(vec < 0.0) or not np.all(np.isfinite(vec)):
        issues.append(f"{label} has negative or non-finite entries")
        return
    total = float(vec.sum())
    if abs(total - 1.0) > PROB_TOL:
        issues.append(f"{label} sums to {total!r}, expected 1 within {PROB_TOL}")
    if strict_support and np.any(vec <= 0.0):
        issues.append(f"{label} must be strictly positive")


def validate(model: ModelSpec, costs: CostSpec | None = None) -> ValidationReport:
    """Check structural requirements; report every violation found.

    Returns a report instead of raising so misconfigured instances can be
    inspected.  Call ``report.raise_if_failed()`` to escalate.
    """

    issues: list = []
    if model.alphabet.size < 2:
        issues.append("alphabet needs at least 2 symbols to carry information")
    if model.hypotheses < 1:
        issues.append("need at least one post-change regime")
    if not (0.0 <= model.p0 <= 1.0):
        issues.append(f"p0 = {model.p0!r} outside [0, 1]")
    if not (0.0 < model.p < 1.0):
        issues.append(f"p = {model.p!r} outside (0, 1)")
    _check_pmf(model.nu, "nu", issues, strict_support=True)
    for i in range(model.hypotheses + 1):
        _check_pmf(model.f[i], f"f_{i}", issues)
    if costs is not None:
        if costs.M != model.hypotheses:
            issues.append(
                f"cost matrix is for M={costs.M} but model has M={model.hypotheses}"
            )
        if not (costs.c > 0.0) or not np.isfinite(costs.c):
            issues.append(f"delay cost c = {costs.c!r} must be positive and finite")
        if np.any(costs.a < 0.0) or not np.all(np.isfinite(costs.a)):
            issues.append("terminal costs must be finite and nonnegative")
        else:
            for j in range(1, costs.M + 1):
                if costs.a[j, j - 1] != 0.0:
                    issues.append(
                        f"a[{j}][{j}] = {costs.a[j, j - 1]!r}, correct "
                        "identification must cost 0"
                    )
    return ValidationReport(ok=not issues, issues=tuple(issues))


def initial_belief(model: ModelSpec) -> Belief:
    """Belief at stage 0 before any observation: ``(1-p0, p0*nu)``."""

    arr = np.empty(model.hypotheses + 1)
    arr[0] = 1.0 - model.p0
    arr[1:] = model.p0 * model.nu
    return Belief(arr)


@dataclass(frozen=True)
class TerminalCosts:
    """Expected terminal charge of each announcement at a given belief."""

    values: np.ndarray
    minimum: float
    label: int


def terminal_costs(belief: Belief, costs: CostSpec) -> TerminalCosts:
    """Expected cost of announcing each regime ``j`` right now.

    The label is the lowest-index minimizer, matching the deterministic
    tie-break used by strategies.
    """

    if belief.M != costs.M:
        raise ValidationFailure(
            [f"belief has M={belief.M} but costs have M={costs.M}"]
        )
    values = belief.pi @ costs.a
    label = int(np.argmin(values)) + 1
    return TerminalCosts(values=values, minimum=float(values[label - 1]), label=label)


def h_sup_bound(costs: CostSpec) -> float:
    """Upper bound for the terminal cost envelope: ``min_j max_i a[i][j]``.

    The envelope ``h`` is a minimum over announcements of linear functions,
    so it is bounded by the best column's worst row.
    """

    return float(np.min(np.max(costs.a, axis=0)))


def instance_to_dict(model: ModelSpec, costs: CostSpec) -> dict:
    return {
        "format": CONFIG_FORMAT,
        "name": model.name,
        "alphabet_size": model.alphabet.size,
        "hypotheses": model.hypotheses,
        "p0": model.p0,
        "p": model.p,
        "nu": model.nu.tolist(),
        "f": model.f.tolist(),
        "delay_cost": costs.c,
        "terminal_cost": costs.a.tolist(),
    }


def parse_instance(doc: dict) -> tuple[ModelSpec, CostSpec]:
    if not isinstance(doc, dict):
        raise ValidationFailure(["instance document must be a JSON object"])
    fmt = doc.get("format")
    if fmt != CONFIG_FORMAT:
        raise ValidationFailure(
            [f"unsupported instance format {fmt!r}, expected {CONFIG_FORMAT!r}"]
        )
    missing = [
        k
        for k in (
            "alphabet_size",
            "hypotheses",
            "p0",
            "p",
            "nu",
            "f",
            "delay_cost",
            "terminal_cost",
        )
        if k not in doc
    ]
    if missing:
        raise ValidationFailure([f"missing keys: {', '.join(missing)}"])
    model = ModelSpec(
        alphabet=ObservationAlphabet(doc["alphabet_size"]),
        hypotheses=doc["hypotheses"],
        p0=doc["p0"],
        p=doc["p"],
        nu=doc["nu"],
        f=doc["f"],
        name=str(doc.get("name", "")),
    )
    costs = CostSpec(c=doc["delay_cost"], a=doc["terminal_cost"])
    return model, costs


def save_instance(path, model: ModelSpec, costs: CostSpec) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(instance_to_dict(model, costs), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_instance(path) -> tuple[ModelSpec, CostSpec]:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationFailure([f"not valid JSON: {exc}"]) from exc
    return parse_instance(doc)


def instance_digest(model: ModelSpec, costs: CostSpec) -> str:
    """Stable sha256 of the instance, used to pair stored policies with configs."""

    doc = instance_to_dict(model, costs)
    doc.pop("name", None)
    blob = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()
