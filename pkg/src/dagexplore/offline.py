"""Offline scheduling machinery: path-work bounds, a greedy preemptive
scheduler, and an exhaustive oracle for tiny instances."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .core import DagInstance, SizeCapError, WorkTable

BRUTE_FORCE_MAX_VERTICES = 8
BRUTE_FORCE_MAX_PROCESSORS = 3


@dataclass(frozen=True)
class PathWork:
    """Minimum source-to-vertex path work and the predecessor attaining it.

    For a source ``v`` the work is its own weight and the predecessor is
    ``None``; otherwise the work is ``weight(v)`` plus the smallest path work
    among the parents, ties broken toward the lowest parent id.
    """

    work: dict[int, int]
    predecessor: dict[int, int | None]

    @property
    def max_work(self) -> int:
        return max(self.work.values(), default=0)

    def tree_children(self) -> dict[int, tuple[int, ...]]:
        """Children map of the predecessor forest."""
        children: dict[int, list[int]] = {vertex: [] for vertex in self.work}
        for vertex, parent in self.predecessor.items():
            if parent is not None:
                children[parent].append(vertex)
        return {vertex: tuple(sorted(cs)) for vertex, cs in children.items()}


def min_path_work(instance: DagInstance) -> PathWork:
    """Single topological pass computing every vertex's minimum path work."""
    instance.require_valid()
    work: dict[int, int] = {}
    predecessor: dict[int, int | None] = {}
    for vertex in instance.topological_order:
        parents = instance.parents[vertex]
        if not parents:
            work[vertex] = instance.weight[vertex]
            predecessor[vertex] = None
        else:
            best = min(parents, key=lambda u: (work[u], u))
            work[vertex] = instance.weight[vertex] + work[best]
            predecessor[vertex] = best
    return PathWork(work=work, predecessor=predecessor)


def offline_lower_bound(instance: DagInstance, r: int) -> int:
    """Completion-time lower bound: max of the deepest path work and the
    volume bound ``ceil(total_weight / r)``."""
    if r < 1:
        raise ValueError(f"processor count must be >= 1, got {r}")
    path = min_path_work(instance)
    return max(path.max_work, math.ceil(instance.total_weight / r))


def offline_schedule(instance: DagInstance, r: int) -> WorkTable:
    """Greedy preemptive offline schedule.

    At each time step the ready or in-progress vertices are ranked by their
    remaining downstream path work along the predecessor forest (ties toward
    the lowest vertex id) and the top ``r`` each receive one slot, processor
    index following rank order. Migration and preemption across steps are
    permitted; the result is valid in OFFLINE mode.
    """
    if r < 1:
        raise ValueError(f"processor count must be >= 1, got {r}")
    path = min_path_work(instance)
    tree = path.tree_children()
    weight = instance.weight
    order = instance.topological_order

    remaining = dict(weight)
    started: set[int] = set()
    completion: dict[int, int] = {}  # boundary time of full completion
    slots: dict[int, set[tuple[int, int]]] = {vertex: set() for vertex in weight}

    def settle(boundary: int, seeds: list[int]) -> None:
        # Zero-weight vertices complete the moment they become ready.
        while seeds:
            vertex = seeds.pop()
            if vertex in completion or weight[vertex] > 0:
                continue
            parents = instance.parents[vertex]
            if parents and not any(u in completion for u in parents):
                continue
            completion[vertex] = boundary
            seeds.extend(instance.children[vertex])

    settle(0, [v for v in order if weight[v] == 0])

    pending = sum(1 for v in weight if weight[v] > 0)
    t = 0
    while pending:
        t += 1
        candidates = []
        for vertex in order:
            if remaining[vertex] == 0 or vertex in completion:
                continue
            if vertex in started:
                candidates.append(vertex)
                continue
            parents = instance.parents[vertex]
            if not parents or any(completion.get(u, t) < t for u in parents):
                candidates.append(vertex)

        # Remaining downstream path work over the predecessor forest.
        down: dict[int, int] = {}
        for vertex in reversed(order):
            down[vertex] = remaining[vertex] + max(
                (down[child] for child in tree[vertex]), default=0
            )

        candidates.sort(key=lambda v: (-down[v], v))
        finished: list[int] = []
        for rank, vertex in enumerate(candidates[:r]):
            slots[vertex].add((t, rank + 1))
            started.add(vertex)
            remaining[vertex] -= 1
            if remaining[vertex] == 0:
                completion[vertex] = t
                pending -= 1
                finished.append(vertex)
        if finished:
            settle(t, [c for v in finished for c in instance.children[v]])

    return WorkTable.from_slots(slots, processors=r, horizon=t)


def brute_force_offline_opt(instance: DagInstance, r: int) -> int:
    """Exhaustive minimum completion time over contiguous non-preemptive
    schedules; an independent oracle for tiny instances.

    Searches every (vertex, processor) placement order with earliest feasible
    starts, which covers all candidate optima for this schedule class. The
    result is at least :func:`offline_lower_bound` and an upper bound on the
    preemptive optimum.
    """
    instance.require_valid()
    if r < 1:
        raise ValueError(f"processor count must be >= 1, got {r}")
    if instance.n_vertices > BRUTE_FORCE_MAX_VERTICES or r > BRUTE_FORCE_MAX_PROCESSORS:
        raise SizeCapError(
            f"brute force capped at {BRUTE_FORCE_MAX_VERTICES} vertices / "
            f"{BRUTE_FORCE_MAX_PROCESSORS} processors, got "
            f"{instance.n_vertices} vertices / r={r}"
        )

    weight = instance.weight
    parents = instance.parents
    positives = tuple(sorted(v for v in weight if weight[v] > 0))
    if not positives:
        return 0

    lower = offline_lower_bound(instance, r)

    def zero_completion(vertex: int, ends: dict[int, int], cache: dict[int, int | None]) -> int | None:
        # Completion boundary of a zero-weight vertex given placed positives.
        if vertex in cache:
            return cache[vertex]
        cache[vertex] = None  # acyclic, but guard resolution order
        if not parents[vertex]:
            result: int | None = 0
        else:
            bounds = [b for b in (ready_bound(u, ends, cache) for u in parents[vertex]) if b is not None]
            result = min(bounds) if bounds else None
        cache[vertex] = result
        return result

    def ready_bound(vertex: int, ends: dict[int, int], cache: dict[int, int | None]) -> int | None:
        if weight[vertex] > 0:
            return ends.get(vertex)
        return zero_completion(vertex, ends, cache)

    def earliest_ready(vertex: int, ends: dict[int, int]) -> int | None:
        if not parents[vertex]:
            return 0
        cache: dict[int, int | None] = {}
        bounds = [b for b in (ready_bound(u, ends, cache) for u in parents[vertex]) if b is not None]
        return min(bounds) if bounds else None

    best = _list_schedule_seed(instance, r)
    if best == lower:
        return best

    seen: set[tuple] = set()

    def dfs(ends: dict[int, int], free: tuple[int, ...], last_start: int, makespan: int) -> None:
        nonlocal best
        if best == lower:
            return
        if len(ends) == len(positives):
            best = min(best, makespan)
            return
        remaining_work = sum(weight[v] for v in positives if v not in ends)
        if math.ceil((sum(free) + remaining_work) / r) >= best:
            return
        key = (tuple(sorted(ends.items())), free, last_start)
        if key in seen:
            return
        seen.add(key)

        for vertex in positives:
            if vertex in ends:
                continue
            ready = earliest_ready(vertex, ends)
            if ready is None:
                continue
            picked: set[int] = set()
            for index, free_at in enumerate(free):
                if free_at in picked:
                    continue  # identical processors: one branch per distinct free time
                picked.add(free_at)
                start = max(free_at, ready, last_start)
                end = start + weight[vertex]
                if end >= best:
                    continue
                ends[vertex] = end
                new_free = tuple(sorted(free[:index] + (end,) + free[index + 1 :]))
                dfs(ends, new_free, start, max(makespan, end))
                del ends[vertex]

    dfs({}, (0,) * r, 0, 0)
    if best < lower:
        raise AssertionError(
            f"brute force found T={best} below the lower bound {lower}; "
            "scheduler constraints are broken"
        )
    return best


def _list_schedule_seed(instance: DagInstance, r: int) -> int:
    """Cheap feasible contiguous schedule to seed the branch-and-bound."""
    weight = instance.weight
    parents = instance.parents
    positives = sorted(v for v in weight if weight[v] > 0)
    ends: dict[int, int] = {}
    free = [0] * r

    def ready_at(vertex: int) -> int | None:
        if not parents[vertex]:
            return 0
        bounds = []
        for u in parents[vertex]:
            if weight[u] > 0:
                if u in ends:
                    bounds.append(ends[u])
            else:
                b = ready_at(u)
                if b is not None:
                    bounds.append(b)
        return min(bounds) if bounds else None

    scheduled: set[int] = set()
    while len(scheduled) < len(positives):
        options = []
        for vertex in positives:
            if vertex in scheduled:
                continue
            ready = ready_at(vertex)
            if ready is None:
                continue
            proc = min(range(r), key=lambda p: free[p])
            start = max(free[proc], ready)
            options.append((start, vertex, proc))
        start, vertex, proc = min(options)
        ends[vertex] = start + weight[vertex]
        free[proc] = ends[vertex]
        scheduled.add(vertex)
    return max(ends.values(), default=0)


__all__ = [
    "BRUTE_FORCE_MAX_PROCESSORS",
    "BRUTE_FORCE_MAX_VERTICES",
    "PathWork",
    "brute_force_offline_opt",
    "min_path_work",
    "offline_lower_bound",
    "offline_schedule",
]
