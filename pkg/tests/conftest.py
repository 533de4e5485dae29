"""Shared fixtures: a session-wide solve cache and the acceptance summary.

Solves are memoized per (preset, resolution, solver options) because many
tests inspect the same handful of solved instances; a full session reuses
each solve instead of repeating the minute of grid work.

Tests named ``test_criterion_<n>`` feed a one-line-per-criterion summary
printed at the end of the run, so the acceptance status is readable without
scrolling through the full pytest output.
"""

from __future__ import annotations

import re

import pytest

from qcdi import get_preset, region_analysis, solve

CRITERION_TITLES = {
    1: "stopping/continuation region connectivity at G=200",
    2: "optimality-equation residual at tol 1e-6",
    3: "iterate truncation bound 300/N",
    4: "Monte Carlo risk matches solved value at the initial belief",
    5: "single-regime stopping interval and 1-D oracle risk",
    6: "certain-change face values against depth-6 enumeration",
    7: "posterior martingale and expectation-identity suite",
    8: "stopping-set structure: nesting, vertices, subsets, line convexity",
    9: "midpoint concavity and value bounds on every preset",
}

_outcomes: dict = {}
_notes: dict = {}

_CRIT_RE = re.compile(r"test_criterion_(\d+)")


@pytest.fixture(scope="session")
def solved():
    """Memoized ``solve`` keyed on preset name, resolution, and options."""

    cache: dict = {}

    def get(name: str, resolution: int | None = None, **kw):
        preset = get_preset(name)
        res = preset.suggested_resolution if resolution is None else int(resolution)
        key = (name, res, tuple(sorted(kw.items())))
        if key not in cache:
            cache[key] = solve(preset.model, preset.costs, res, **kw)
        return cache[key]

    return get


@pytest.fixture(scope="session")
def region_report(solved):
    """Memoized region analysis of a cached solve."""

    cache: dict = {}

    def get(name: str, resolution: int | None = None, **kw):
        preset = get_preset(name)
        res = preset.suggested_resolution if resolution is None else int(resolution)
        key = (name, res, tuple(sorted(kw.items())))
        if key not in cache:
            _, policy = solved(name, res, **kw)
            cache[key] = region_analysis(policy)
        return cache[key]

    return get


@pytest.fixture
def criterion_note(request):
    """Recorder for detail lines shown under a criterion's summary entry."""

    match = _CRIT_RE.search(request.node.name)
    number = int(match.group(1)) if match else None

    def note(line: str) -> None:
        if number is not None:
            _notes.setdefault(number, []).append(str(line))

    return note


def pytest_runtest_logreport(report):
    match = _CRIT_RE.search(report.nodeid)
    if match is None:
        return
    number = int(match.group(1))
    if report.when == "call":
        _outcomes[number] = report.outcome
    elif report.when == "setup" and report.outcome != "passed":
        _outcomes[number] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_outcomes):
        status = "PASS" if _outcomes[number] == "passed" else "FAIL"
        title = CRITERION_TITLES.get(number, "")
        terminalreporter.write_line(f"criterion {number}: {status} — {title}")
        for line in _notes.get(number, ()):
            terminalreporter.write_line(f"    {line}")
