"""Deterministic discrete-event simulator for work-conserving online
schedulers, plus exhaustive worst-case analysis over dispatch orders."""

from __future__ import annotations

import random
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from itertools import combinations

from .core import DagExploreError, DagInstance, Family, SizeCapError, WorkTable, total_idle
from .offline import offline_lower_bound

EXHAUSTIVE_MAX_VERTICES = 10


class ScriptOrderError(DagExploreError, ValueError):
    """Raised when a scripted dispatch order names a vertex that is not ready."""

    def __init__(self, vertex: int) -> None:
        self.vertex = vertex
        super().__init__(
            f"scripted order dispatches vertex {vertex} before any of its parents can finish"
        )


class Discipline(str, Enum):
    FIFO = "fifo"
    LIFO = "lifo"
    RANDOM = "random"
    MAX_WEIGHT_LAST = "max-weight-last"
    SCRIPTED = "scripted"


@dataclass(frozen=True)
class FrontierPolicy:
    """Discipline for picking the next vertex from the ready set.

    FIFO and LIFO are oblivious queue/stack orders; RANDOM is fully determined
    by its seed. MAX_WEIGHT_LAST peeks at the hidden weights and defers the
    heaviest vertex; it models the adversary, not a legal online algorithm.
    SCRIPTED replays a fixed dispatch order and fails if the order is not
    realizable.
    """

    discipline: Discipline
    seed: int | None = None
    order: tuple[int, ...] | None = None

    @staticmethod
    def fifo() -> FrontierPolicy:
        return FrontierPolicy(Discipline.FIFO)

    @staticmethod
    def lifo() -> FrontierPolicy:
        return FrontierPolicy(Discipline.LIFO)

    @staticmethod
    def random(seed: int) -> FrontierPolicy:
        return FrontierPolicy(Discipline.RANDOM, seed=seed)

    @staticmethod
    def max_weight_last() -> FrontierPolicy:
        return FrontierPolicy(Discipline.MAX_WEIGHT_LAST)

    @staticmethod
    def scripted(order: tuple[int, ...] | list[int]) -> FrontierPolicy:
        return FrontierPolicy(Discipline.SCRIPTED, order=tuple(order))

    @property
    def label(self) -> str:
        if self.discipline is Discipline.RANDOM:
            return f"random:{self.seed}"
        if self.discipline is Discipline.SCRIPTED:
            return "scripted:" + "-".join(str(v) for v in self.order or ())
        return self.discipline.value

    @staticmethod
    def parse(text: str) -> FrontierPolicy:
        kind, _, arg = text.partition(":")
        kind = kind.strip().lower()
        if kind == "fifo":
            return FrontierPolicy.fifo()
        if kind == "lifo":
            return FrontierPolicy.lifo()
        if kind == "random":
            return FrontierPolicy.random(int(arg) if arg else 0)
        if kind in ("max-weight-last", "maxlast"):
            return FrontierPolicy.max_weight_last()
        if kind == "scripted":
            if not arg:
                raise ValueError("scripted policy needs an order, e.g. scripted:1-2-0")
            return FrontierPolicy.scripted(tuple(int(v) for v in arg.replace(",", "-").split("-")))
        raise ValueError(f"unknown policy {text!r}")


@dataclass(frozen=True)
class SimResult:
    table: WorkTable
    completion: int
    dispatches: tuple[tuple[int, int, int], ...]  # (start slot, vertex, processor)
    idle: int


class _Selector:
    """Per-run policy state bound to one instance."""

    def __init__(self, policy: FrontierPolicy, instance: DagInstance) -> None:
        self._policy = policy
        self._weight = instance.weight
        self._rng = random.Random(policy.seed) if policy.discipline is Discipline.RANDOM else None
        self._script: list[int] = []
        if policy.discipline is Discipline.SCRIPTED:
            order = policy.order or ()
            if sorted(order) != sorted(self._weight):
                raise ValueError("scripted order must be a permutation of the vertex ids")
            self._script = list(reversed(order))

    def choose(self, ready: dict[int, None], absorbed: set[int]) -> int:
        discipline = self._policy.discipline
        if discipline is Discipline.FIFO:
            return next(iter(ready))
        if discipline is Discipline.LIFO:
            return next(reversed(ready))
        if discipline is Discipline.RANDOM:
            assert self._rng is not None
            return self._rng.choice(list(ready))
        if discipline is Discipline.MAX_WEIGHT_LAST:
            return min(ready, key=lambda v: (self._weight[v], v))
        # Scripted: zero-weight vertices never reach the ready set, so skip
        # entries that already completed implicitly.
        while self._script and self._script[-1] not in ready and self._script[-1] in absorbed:
            self._script.pop()
        if not self._script or self._script[-1] not in ready:
            raise ScriptOrderError(self._script[-1] if self._script else -1)
        return self._script.pop()


def _absorb(instance: DagInstance, entered: set[int], seeds: list[int]) -> list[int]:
    """Mark vertices as having become ready; zero-weight vertices complete
    instantly and cascade to their children. Returns the positive-weight
    vertices to enqueue, ascending. Mutates ``entered``."""
    weight = instance.weight
    positives: list[int] = []
    stack = sorted(seeds, reverse=True)
    while stack:
        vertex = stack.pop()
        if vertex in entered:
            continue
        entered.add(vertex)
        if weight[vertex] == 0:
            for child in reversed(instance.children[vertex]):
                if child not in entered:
                    stack.append(child)
        else:
            positives.append(vertex)
    return sorted(positives)


def simulate(instance: DagInstance, r: int, policy: FrontierPolicy) -> SimResult:
    """Run one work-conserving online schedule to completion.

    Whenever a processor is free and the ready set is nonempty the policy
    picks a vertex, which occupies that processor for exactly its weight in
    contiguous slots. A vertex becomes ready the first time a parent finishes;
    it enters the ready set at most once. Zero-weight vertices complete
    instantly at their ready time and never occupy a slot. Fully deterministic:
    simultaneous completions are handled in ascending processor id and
    simultaneous ready insertions in ascending vertex id.
    """
    instance.require_valid()
    if r < 1:
        raise ValueError(f"processor count must be >= 1, got {r}")
    selector = _Selector(policy, instance)
    weight = instance.weight

    entered: set[int] = set()
    ready: dict[int, None] = {}
    slots: dict[int, set[tuple[int, int]]] = {vertex: set() for vertex in weight}
    busy: dict[int, tuple[int, int]] = {}  # processor -> (end boundary, vertex)
    dispatches: list[tuple[int, int, int]] = []
    horizon = 0

    def dispatch(now: int) -> None:
        nonlocal horizon
        while ready and len(busy) < r:
            proc = min(p for p in range(1, r + 1) if p not in busy)
            vertex = selector.choose(ready, entered)
            del ready[vertex]
            end = now + weight[vertex]
            busy[proc] = (end, vertex)
            for t in range(now + 1, end + 1):
                slots[vertex].add((t, proc))
            dispatches.append((now + 1, vertex, proc))
            horizon = max(horizon, end)

    for vertex in _absorb(instance, entered, list(instance.sources)):
        ready[vertex] = None
    dispatch(0)

    while busy:
        now = min(end for end, _ in busy.values())
        newly: list[int] = []
        for proc in sorted(busy):
            end, vertex = busy[proc]
            if end != now:
                continue
            del busy[proc]
            newly.extend(c for c in instance.children[vertex] if c not in entered)
        for vertex in _absorb(instance, entered, newly):
            ready[vertex] = None
        dispatch(now)

    table = WorkTable.from_slots(slots, processors=r, horizon=horizon)
    return SimResult(
        table=table,
        completion=horizon,
        dispatches=tuple(dispatches),
        idle=total_idle(table),
    )


def worst_case_closed_form(r: int, t_star: int) -> int:
    """Worst online completion time on the hard family: ``t_star * (2 - 1/r)``."""
    if t_star % r:
        raise ValueError(f"t_star={t_star} must be divisible by r={r}")
    return 2 * t_star - t_star // r


def worst_case_online(instance: DagInstance, r: int, *, branch_order: str = "fifo") -> int:
    """Worst completion time over all realizable work-conserving dispatch orders.

    Instances with at most ``EXHAUSTIVE_MAX_VERTICES`` vertices are enumerated
    exhaustively (branching over every dispatch choice point). Larger instances
    are accepted only when tagged as the generated worst-case family for the
    same ``r``, where the closed form applies. ``branch_order`` picks the
    exploration order of equivalent branches and must not affect the result.
    """
    instance.require_valid()
    if r < 1:
        raise ValueError(f"processor count must be >= 1, got {r}")
    if instance.n_vertices <= EXHAUSTIVE_MAX_VERTICES:
        return _exhaustive_worst(instance, r, branch_order=branch_order)
    tag = instance.family
    if tag is not None and tag.family is Family.WORST_CASE and tag.param("r") == r:
        return worst_case_closed_form(r, tag.param("t_star"))
    raise SizeCapError(
        f"exhaustive worst case capped at {EXHAUSTIVE_MAX_VERTICES} vertices and "
        f"{instance.name!r} has {instance.n_vertices}; only tagged worst-case family "
        "instances have a closed form"
    )


def _exhaustive_worst(instance: DagInstance, r: int, branch_order: str) -> int:
    if branch_order not in ("fifo", "lifo"):
        raise ValueError(f"branch_order must be 'fifo' or 'lifo', got {branch_order!r}")
    reverse = branch_order == "lifo"
    weight = instance.weight
    children = instance.children

    entered0: set[int] = set()
    ready0 = frozenset(_absorb(instance, entered0, list(instance.sources)))
    memo: dict[tuple, int] = {}

    def dfs(now: int, busy: frozenset[tuple[int, int]], ready: frozenset[int], entered: frozenset[int]) -> int:
        key = (now, busy, ready, entered)
        cached = memo.get(key)
        if cached is not None:
            return cached

        free = r - len(busy)
        if ready and free:
            take = min(free, len(ready))
            worst = 0
            for chosen in combinations(sorted(ready, reverse=reverse), take):
                new_busy = busy | {(now + weight[v], v) for v in chosen}
                worst = max(worst, dfs(now, new_busy, ready - set(chosen), entered))
            memo[key] = worst
            return worst

        if not busy:
            memo[key] = now
            return now

        boundary = min(end for end, _ in busy)
        finishing = [v for end, v in busy if end == boundary]
        remaining = frozenset(item for item in busy if item[0] != boundary)
        seeds = [c for v in finishing for c in children[v] if c not in entered]
        next_entered = set(entered)
        newly = _absorb(instance, next_entered, seeds)
        result = dfs(boundary, remaining, ready | frozenset(newly), frozenset(next_entered))
        memo[key] = result
        return result

    return dfs(0, frozenset(), ready0, frozenset(entered0))


def competitive_ratio(instance: DagInstance, r: int) -> Fraction:
    """Exact ratio of the worst online completion time to the offline bound."""
    worst = worst_case_online(instance, r)
    bound = offline_lower_bound(instance, r)
    if bound == 0:
        return Fraction(0) if worst == 0 else Fraction(worst)
    return Fraction(worst, bound)


def uniform_sources_ratio_formula(m: int, r: int) -> Fraction:
    """Ratio predicted for ``m`` equal-weight sources: ``floor((m-1)/r) * (r-1)/(m-1) + 1``.

    Recorded for comparison against the exhaustive worst case, not asserted;
    the exhaustive value is authoritative.
    """
    if m < 2 or r < 1:
        raise ValueError("needs m >= 2 and r >= 1")
    return Fraction((m - 1) // r) * Fraction(r - 1, m - 1) + 1


__all__ = [
    "Discipline",
    "EXHAUSTIVE_MAX_VERTICES",
    "FrontierPolicy",
    "ScriptOrderError",
    "SimResult",
    "competitive_ratio",
    "simulate",
    "uniform_sources_ratio_formula",
    "worst_case_closed_form",
    "worst_case_online",
]
