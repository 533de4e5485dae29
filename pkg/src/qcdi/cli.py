"""Command-line interface.

Subcommands cover the full workflow: write a preset instance config, solve
it on a grid, inspect the stopping regions, replay single episodes, run
Monte Carlo evaluation, and sanity-check an instance.  Failure classes map
to distinct exit codes so scripts can branch on them:

    0  success
    2  usage errors (argparse)
    3  missing input file
    4  invalid instance or config
    5  resource budget exceeded (grid size, iteration cap)
    6  runtime guard tripped (horizon, impossible observation)
    7  malformed or mismatched policy file
    1  anything unexpected

Errors print a single JSON line to stderr: ``{"error": <class>, "message": ...}``.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import kernels
from .errors import (
    GridBudgetExceeded,
    HorizonGuardTripped,
    ImpossibleObservation,
    IterationBudgetExceeded,
    QcdiError,
    StoreFormatError,
    StreamExhausted,
    ValidationFailure,
)
from .evaluation import dominance_check, estimate_risk, posterior_diagnostics
from .export import (
    write_policy_csv,
    write_region_raster,
    write_region_svg,
    write_trajectory_csv,
)
from .model import (
    initial_belief,
    instance_to_dict,
    load_instance,
    save_instance,
    validate,
)
from .posterior import sample_episode
from .presets import get_preset, preset_names
from .solver import region_analysis, solve
from .store import load_policy, save_policy
from .strategy import (
    FixedSampleStopRule,
    OptimalStopRule,
    ThresholdStopRule,
    TruncatedStopRule,
    run_rule,
)

_EXIT_CODES = (
    (FileNotFoundError, 3),
    (ValidationFailure, 4),
    ((GridBudgetExceeded, IterationBudgetExceeded), 5),
    ((HorizonGuardTripped, ImpossibleObservation, StreamExhausted), 6),
    (StoreFormatError, 7),
)


def _fail(exc: BaseException) -> int:
    for types, code in _EXIT_CODES:
        if isinstance(exc, types):
            payload = {"error": type(exc).__name__, "message": str(exc)}
            print(json.dumps(payload), file=sys.stderr)
            return code
    payload = {"error": type(exc).__name__, "message": str(exc)}
    print(json.dumps(payload), file=sys.stderr)
    return 1


def _parse_rule(token: str, model, costs, loaded):
    """Build a stopping rule from a CLI token like ``truncated:10``."""

    name, _, arg = token.partition(":")
    if name == "optimal":
        return OptimalStopRule(model, costs, loaded.value_function)
    if name == "truncated":
        budget = int(arg) if arg else None
        return TruncatedStopRule(loaded.policy, budget=budget)
    if name == "threshold":
        if not arg:
            raise ValidationFailure(["threshold rule needs a level, e.g. threshold:0.2"])
        return ThresholdStopRule(float(arg))
    if name == "fixed":
        if not arg:
            raise ValidationFailure(["fixed rule needs a sample count, e.g. fixed:10"])
        return FixedSampleStopRule(int(arg))
    raise ValidationFailure([f"unknown strategy token {token!r}"])


def _cmd_preset(args) -> int:
    if args.list or args.name is None:
        for name in preset_names():
            print(name)
        return 0
    preset = get_preset(args.name)
    if args.output:
        save_instance(args.output, preset.model, preset.costs)
        print(f"wrote {args.output}")
    else:
        json.dump(
            instance_to_dict(preset.model, preset.costs),
            sys.stdout,
            indent=2,
            sort_keys=True,
        )
        print()
    return 0


def _cmd_solve(args) -> int:
    model, costs = load_instance(args.config)
    validate(model, costs).raise_if_failed()
    vf, policy = solve(
        model,
        costs,
        args.resolution,
        tol=args.tol,
        fixed_iters=args.iters,
        record_snapshots=args.snapshots,
        budget=args.budget,
    )
    save_policy(args.output, model, costs, vf, policy)
    start = initial_belief(model)
    print(f"grid: M={vf.grid.M} G={vf.grid.G} points={vf.grid.n_points}")
    print(f"iterations: {vf.iteration_count}")
    print(f"final_delta: {vf.final_delta:.3e}")
    print(f"certified_gap: {vf.certified_gap:.6f}")
    print(f"value_at_initial_belief: {vf(start):.6f}")
    print(f"stopping_points: {int(policy.stop_mask().sum())}/{vf.grid.n_points}")
    print(f"policy_file: {args.output}")
    return 0


def _cmd_regions(args) -> int:
    loaded = load_policy(args.policy)
    report = region_analysis(loaded.policy)
    for line in report.lines():
        print(line)
    if args.csv:
        with open(args.csv, "w", encoding="utf-8", newline="") as fh:
            write_policy_csv(fh, loaded.value_function, loaded.policy)
        print(f"values_csv: {args.csv}")
    if args.raster:
        with open(args.raster, "w", encoding="utf-8", newline="") as fh:
            write_region_raster(fh, loaded.policy)
        print(f"raster_csv: {args.raster}")
    if args.svg:
        with open(args.svg, "w", encoding="utf-8") as fh:
            write_region_svg(fh, loaded.policy, loaded.costs)
        print(f"svg: {args.svg}")
    return 0


def _cmd_simulate(args) -> int:
    loaded = load_policy(args.policy)
    model, costs = loaded.model, loaded.costs
    rule = _parse_rule(args.strategy, model, costs, loaded)
    episode = sample_episode(model, args.horizon, args.seed, args.index)
    result = run_rule(
        rule,
        model,
        costs,
        episode.observations,
        theta=episode.theta,
        mu=episode.mu,
        record_trajectory=True,
    )
    print(f"episode: seed={args.seed} index={args.index}")
    print(f"theta: {episode.theta}")
    print(f"mu: {episode.mu}")
    print(f"tau: {result.tau}")
    print(f"decision: {result.decision}")
    print(f"delay: {result.delay}")
    print(f"false_alarm: {result.false_alarm}")
    print(f"misidentified: {result.misidentified}")
    print(f"loss: {result.loss:.6f}")
    if args.trajectory:
        with open(args.trajectory, "w", encoding="utf-8", newline="") as fh:
            write_trajectory_csv(fh, result)
        print(f"trajectory_csv: {args.trajectory}")
    if args.svg:
        with open(args.svg, "w", encoding="utf-8") as fh:
            write_region_svg(
                fh, loaded.policy, costs, trajectory=result.trajectory
            )
        print(f"svg: {args.svg}")
    return 0


def _cmd_evaluate(args) -> int:
    loaded = load_policy(args.policy)
    model, costs = loaded.model, loaded.costs
    reference = OptimalStopRule(model, costs, loaded.value_function)
    estimate = estimate_risk(
        model, costs, reference, args.episodes, args.seed,
        horizon_guard=args.horizon_guard,
    )
    start = initial_belief(model)
    solved = loaded.value_function(start)
    gap = loaded.value_function.certified_gap
    print(f"episodes: {estimate.episodes}")
    print(f"risk_estimate: {estimate.mean:.6f}")
    print(f"risk_se: {estimate.se:.6f}")
    print(
        "risk_components: "
        f"delay={estimate.delay_mean:.6f} "
        f"false_alarm={estimate.false_alarm_mean:.6f} "
        f"misidentification={estimate.misid_mean:.6f}"
    )
    print(f"mean_stopping_time: {estimate.mean_tau:.3f}")
    print(f"solved_value: {solved:.6f}")
    print(f"certified_gap: {gap:.6f}")
    print(f"abs_difference: {abs(estimate.mean - solved):.6f}")
    if args.alternatives:
        tokens = [t for t in args.alternatives.split(",") if t]
        alternatives = {
            tok: _parse_rule(tok, model, costs, loaded) for tok in tokens
        }
        report = dominance_check(
            model,
            costs,
            reference,
            alternatives,
            args.episodes,
            args.seed,
            slack=gap,
            horizon_guard=args.horizon_guard,
        )
        for line in report.lines():
            print(line)
        if not report.all_consistent:
            return 1
    return 0


def _cmd_check(args) -> int:
    model, costs = load_instance(args.config)
    report = validate(model, costs)
    if not report.ok:
        for issue in report.issues:
            print(f"invalid: {issue}")
        raise ValidationFailure(report.issues)
    print("instance: valid")
    diag = posterior_diagnostics(
        model,
        args.episodes,
        args.seed,
        stages=tuple(int(s) for s in args.stages.split(",") if s),
    )
    for line in diag.lines():
        print(line)
    return 0 if diag.all_consistent else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qcdi",
        description="solve, inspect, and simulate quickest change detection "
        "and identification strategies",
    )
    parser.add_argument(
        "--backend",
        choices=("python", "compiled"),
        help="force a numerical backend (default: compiled when available)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("preset", help="list presets or write one as a config")
    p.add_argument("name", nargs="?", help="preset name")
    p.add_argument("--list", action="store_true", help="list preset names")
    p.add_argument("-o", "--output", help="write config JSON here")
    p.set_defaults(func=_cmd_preset)

    p = sub.add_parser("solve", help="value-iterate an instance on a grid")
    p.add_argument("-c", "--config", required=True, help="instance config JSON")
    p.add_argument("-G", "--resolution", type=int, required=True)
    p.add_argument("--tol", type=float, default=1e-6, help="sup-norm stop tolerance")
    p.add_argument("--iters", type=int, default=None, help="fixed sweep count")
    p.add_argument("--snapshots", type=int, default=0,
                   help="record stopping sets of iterates 0..N")
    p.add_argument("--budget", type=int, default=None, help="grid point budget")
    p.add_argument("-o", "--output", required=True, help="policy file to write")
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("regions", help="region report and exports of a policy")
    p.add_argument("-p", "--policy", required=True, help="policy file")
    p.add_argument("--csv", help="write grid values CSV here")
    p.add_argument("--raster", help="write projected raster CSV here")
    p.add_argument("--svg", help="write region SVG here (M=2 only)")
    p.set_defaults(func=_cmd_regions)

    p = sub.add_parser("simulate", help="replay one sampled episode")
    p.add_argument("-p", "--policy", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--index", type=int, default=0, help="episode index")
    p.add_argument("--horizon", type=int, default=10_000,
                   help="observations to sample")
    p.add_argument("--strategy", default="optimal",
                   help="optimal | truncated[:N] | threshold:x | fixed:n")
    p.add_argument("--trajectory", help="write belief trajectory CSV here")
    p.add_argument("--svg", help="write regions+trajectory SVG here (M=2)")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("evaluate", help="Monte Carlo risk of the solved strategy")
    p.add_argument("-p", "--policy", required=True)
    p.add_argument("--episodes", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--horizon-guard", type=int, default=100_000)
    p.add_argument("--alternatives", default="",
                   help="comma list: truncated:N,threshold:x,fixed:n")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("check", help="validate an instance and its sampler")
    p.add_argument("-c", "--config", required=True)
    p.add_argument("--episodes", type=int, default=20_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--stages", default="1,2,5,10")
    p.set_defaults(func=_cmd_check)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.backend:
        kernels.set_backend(args.backend)
    try:
        return args.func(args)
    except QcdiError as exc:
        return _fail(exc)
    except FileNotFoundError as exc:
        return _fail(exc)


if __name__ == "__main__":
    sys.exit(main())
