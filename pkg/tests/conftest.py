"""Shared fixtures: hand-built schedules, deterministic instance corpora, and
a terminal summary line per acceptance criterion."""

from __future__ import annotations

import random
import re

import pytest

from dagexplore.core import DagInstance, WorkTable
from dagexplore.generators import (
    branching_paths,
    crossed_paths,
    disjoint_paths,
    random_layered_dag,
    subset_lattice_atlas,
    uniform_sources,
    worst_case_instance,
)

# --- hand-built schedules for the two-processor and four-processor examples ---


@pytest.fixture
def two_proc_instance() -> DagInstance:
    """Three isolated sources, weights [2, 1, 1]."""
    return worst_case_instance(2, 2)


@pytest.fixture
def two_proc_optimal_table() -> WorkTable:
    """Heavy vertex on p1 for slots 1-2, the unit vertices stacked on p2: T=2."""
    return WorkTable.from_slots(
        {0: {(1, 1), (2, 1)}, 1: {(1, 2)}, 2: {(2, 2)}}, processors=2
    )


@pytest.fixture
def two_proc_deferred_table() -> WorkTable:
    """Unit vertices first on both processors, heavy vertex last: T=3."""
    return WorkTable.from_slots(
        {1: {(1, 1)}, 2: {(1, 2)}, 0: {(2, 1), (3, 1)}}, processors=2
    )


@pytest.fixture
def four_proc_instance() -> DagInstance:
    """Five isolated sources, weights [4, 3, 3, 3, 3]."""
    return worst_case_instance(4, 4)


@pytest.fixture
def four_proc_deferred_table() -> WorkTable:
    """The three-unit vertices run first; the heavy one waits until slot 4: T=7."""
    slots = {v: {(t, v) for t in (1, 2, 3)} for v in (1, 2, 3, 4)}
    slots[0] = {(t, 1) for t in (4, 5, 6, 7)}
    return WorkTable.from_slots(slots, processors=4)


@pytest.fixture
def diamond_instance() -> DagInstance:
    """0 -> {1, 2} -> 3 with the detour through 1 ten times heavier."""
    return DagInstance.from_weights(
        "diamond", [1, 10, 1, 1], [(0, 1), (0, 2), (1, 3), (2, 3)]
    )


# --- deterministic corpora -----------------------------------------------------


def random_instance(rng: random.Random, max_vertices: int = 8) -> DagInstance:
    """Arbitrary small instance: random weights, random forward edges."""
    n = rng.randint(1, max_vertices)
    weights = [rng.randint(0, 6) for _ in range(n)]
    edges = [
        (parent, child)
        for child in range(1, n)
        for parent in range(child)
        if rng.random() < 0.3
    ]
    return DagInstance.from_weights(f"random-{rng.getrandbits(32):08x}", weights, edges)


def _worst_case_sample(rng: random.Random) -> DagInstance:
    r = rng.randint(2, 6)
    return worst_case_instance(r, r * rng.randint(1, 3))


def _uniform_sample(rng: random.Random) -> DagInstance:
    return uniform_sources(rng.randint(1, 9), rng.randint(0, 6))


def _paths_sample(rng: random.Random) -> DagInstance:
    chains = [
        [rng.randint(0, 5) for _ in range(rng.randint(1, 4))]
        for _ in range(rng.randint(1, 3))
    ]
    return disjoint_paths([len(chain) for chain in chains], chains)


def _crossed_sample(rng: random.Random) -> DagInstance:
    chains = [[rng.randint(0, 4), rng.randint(0, 4)], [rng.randint(0, 4), rng.randint(0, 4)]]
    return crossed_paths(disjoint_paths([2, 2], chains), [(0, 3)])


def _branching_sample(rng: random.Random) -> DagInstance:
    base = disjoint_paths([2], [[rng.randint(0, 4), rng.randint(0, 4)]])
    return branching_paths(base, [(0, [rng.randint(0, 4) for _ in range(rng.randint(1, 3))])])


def _layered_sample(rng: random.Random) -> DagInstance:
    return random_layered_dag(
        rng.getrandbits(30), rng.randint(1, 4), rng.randint(1, 4), 5, rng.random()
    )


def _lattice_sample(rng: random.Random) -> DagInstance:
    return subset_lattice_atlas(rng.randint(1, 3), rng.choice(["const:2", "depth", "random:7"]))


_FAMILY_SAMPLERS = (
    _worst_case_sample,
    _uniform_sample,
    _paths_sample,
    _crossed_sample,
    _branching_sample,
    _layered_sample,
    _lattice_sample,
)


def family_corpus(seed: int, count: int) -> list[DagInstance]:
    """Deterministic sample drawn across every generator family."""
    rng = random.Random(seed)
    return [_FAMILY_SAMPLERS[index % len(_FAMILY_SAMPLERS)](rng) for index in range(count)]


# --- acceptance criterion reporting --------------------------------------------

_CRITERION_PATTERN = re.compile(r"test_criterion_(\d+)")
_DESCRIPTIONS: dict[int, str] = {}
_OUTCOMES: dict[int, str] = {}
_DETAILS: dict[int, str] = {}


@pytest.fixture
def criterion_detail(request):
    """Lets an acceptance test attach a one-line detail to its summary row."""

    def record(detail: str) -> None:
        match = _CRITERION_PATTERN.search(request.node.name)
        if match:
            _DETAILS[int(match.group(1))] = detail

    return record


def pytest_collection_modifyitems(items):
    for item in items:
        match = _CRITERION_PATTERN.search(item.name)
        if match:
            number = int(match.group(1))
            doc = (item.function.__doc__ or "").strip().splitlines()
            _DESCRIPTIONS[number] = doc[0] if doc else item.name


def pytest_runtest_logreport(report):
    match = _CRITERION_PATTERN.search(report.nodeid)
    if not match:
        return
    number = int(match.group(1))
    if report.when == "setup" and report.skipped:
        _OUTCOMES[number] = "SKIP"
    elif report.when == "call":
        _OUTCOMES[number] = "PASS" if report.outcome == "passed" else "FAIL"


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _OUTCOMES:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for number in sorted(_OUTCOMES):
        outcome = _OUTCOMES[number]
        description = _DESCRIPTIONS.get(number, "")
        detail = _DETAILS.get(number, "")
        line = f"criterion {number:2d}: {outcome}  {description}"
        if detail:
            line += f"  [{detail}]"
        terminalreporter.write_line(line)
