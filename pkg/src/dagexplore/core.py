"""Value types and validators for vertex-weighted DAG exploration schedules."""

from __future__ import annotations

from collections import Counter
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from heapq import heapify, heappop, heappush


class DagExploreError(Exception):
    """Base class for errors raised by this package."""


class CycleError(DagExploreError, ValueError):
    """Raised when an operation requires an acyclic instance and finds a cycle."""


class InvalidInstanceError(DagExploreError, ValueError):
    """Raised by operations whose precondition is a structurally valid instance."""

    def __init__(self, report: ValidationReport) -> None:
        self.report = report
        summary = "; ".join(v.message for v in report.violations[:3])
        suffix = " ..." if len(report.violations) > 3 else ""
        super().__init__(f"invalid instance: {summary}{suffix}")


class SizeCapError(DagExploreError, ValueError):
    """Raised when an exhaustive operation is asked to exceed its size cap."""


class Family(str, Enum):
    """Instance families produced by the generators module."""

    WORST_CASE = "worst_case"
    UNIFORM_SOURCES = "uniform_sources"
    DISJOINT_PATHS = "disjoint_paths"
    CROSSED_PATHS = "crossed_paths"
    BRANCHING_PATHS = "branching_paths"
    RANDOM_LAYERED = "random_layered"
    SUBSET_LATTICE = "subset_lattice"


@dataclass(frozen=True)
class FamilyTag:
    """Provenance metadata attached to generated instances."""

    family: Family
    params: tuple[tuple[str, int], ...] = ()
    seed: int | None = None

    @staticmethod
    def make(family: Family, seed: int | None = None, **params: int) -> FamilyTag:
        return FamilyTag(family=family, params=tuple(sorted(params.items())), seed=seed)

    def param(self, name: str) -> int:
        for key, value in self.params:
            if key == name:
                return value
        raise KeyError(name)


@dataclass(frozen=True)
class DagInstance:
    """A vertex-weighted DAG: the ground truth hidden from online algorithms.

    ``vertices`` holds ``(id, weight)`` pairs; ids are expected to be the dense
    range ``0..n-1`` and weights nonnegative integers, but the constructor is
    permissive so that :func:`validate_instance` can report problems instead of
    raising. Derived accessors (``parents``, ``topological_order``, ...) assume
    a structurally valid instance.
    """

    name: str
    vertices: tuple[tuple[int, int], ...]
    edges: tuple[tuple[int, int], ...]
    family: FamilyTag | None = None

    @staticmethod
    def from_weights(
        name: str,
        weights: Sequence[int],
        edges: Iterable[tuple[int, int]] = (),
        family: FamilyTag | None = None,
    ) -> DagInstance:
        """Build an instance whose vertex ids are the positions in ``weights``."""
        vertices = tuple((index, int(weight)) for index, weight in enumerate(weights))
        return DagInstance(
            name=name,
            vertices=vertices,
            edges=tuple((int(a), int(b)) for a, b in edges),
            family=family,
        )

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @cached_property
    def weight(self) -> dict[int, int]:
        return {vertex: weight for vertex, weight in self.vertices}

    @property
    def total_weight(self) -> int:
        return sum(weight for _, weight in self.vertices)

    @cached_property
    def parents(self) -> dict[int, tuple[int, ...]]:
        adjacency: dict[int, list[int]] = {vertex: [] for vertex, _ in self.vertices}
        for parent, child in self.edges:
            adjacency[child].append(parent)
        return {vertex: tuple(sorted(ps)) for vertex, ps in adjacency.items()}

    @cached_property
    def children(self) -> dict[int, tuple[int, ...]]:
        adjacency: dict[int, list[int]] = {vertex: [] for vertex, _ in self.vertices}
        for parent, child in self.edges:
            adjacency[parent].append(child)
        return {vertex: tuple(sorted(cs)) for vertex, cs in adjacency.items()}

    @cached_property
    def sources(self) -> tuple[int, ...]:
        return tuple(v for v in sorted(self.weight) if not self.parents[v])

    @cached_property
    def topological_order(self) -> tuple[int, ...]:
        """Deterministic topological order (lowest id first among ready vertices)."""
        indegree = {vertex: len(self.parents[vertex]) for vertex, _ in self.vertices}
        ready = [vertex for vertex, degree in indegree.items() if degree == 0]
        heapify(ready)
        order: list[int] = []
        while ready:
            vertex = heappop(ready)
            order.append(vertex)
            for child in self.children[vertex]:
                indegree[child] -= 1
                if indegree[child] == 0:
                    heappush(ready, child)
        if len(order) != self.n_vertices:
            leftover = sorted(set(self.weight) - set(order))
            raise CycleError(f"instance {self.name!r} contains a cycle through {leftover}")
        return tuple(order)

    def require_valid(self) -> None:
        report = validate_instance(self)
        if not report.valid:
            raise InvalidInstanceError(report)


@dataclass(frozen=True)
class WorkTable:
    """Per-vertex slot assignment over a discrete 1-indexed time grid.

    ``assignments`` maps a vertex id to the set of ``(slot, processor)`` pairs
    it occupies; slots not listed are idle. Vertices with an empty slot set may
    be omitted entirely (the CSV form has no rows for them).
    """

    horizon: int
    processors: int
    assignments: dict[int, frozenset[tuple[int, int]]]

    @staticmethod
    def from_slots(
        slots: Mapping[int, Iterable[tuple[int, int]]],
        processors: int,
        horizon: int | None = None,
    ) -> WorkTable:
        frozen = {vertex: frozenset(pairs) for vertex, pairs in slots.items()}
        if horizon is None:
            horizon = max((t for pairs in frozen.values() for t, _ in pairs), default=0)
        return WorkTable(horizon=horizon, processors=processors, assignments=frozen)

    def slots_of(self, vertex: int) -> frozenset[tuple[int, int]]:
        return self.assignments.get(vertex, frozenset())


class TableMode(str, Enum):
    """Validation strictness: each mode adds constraints on top of the previous."""

    OFFLINE = "offline"
    ONLINE = "online"
    STAYBUSY = "staybusy"


class Rule(str, Enum):
    WORK_SUM = "WORK_SUM"
    PARENT_FIRST = "PARENT_FIRST"
    ONE_VERTEX_PER_PROC = "ONE_VERTEX_PER_PROC"
    ONE_PROC_PER_VERTEX = "ONE_PROC_PER_VERTEX"
    SLOT_RANGE = "SLOT_RANGE"
    CONTIGUOUS = "CONTIGUOUS"
    STAYBUSY = "STAYBUSY"
    VERTEX_IDS = "VERTEX_IDS"
    EDGES = "EDGES"
    WEIGHTS = "WEIGHTS"
    SOURCES = "SOURCES"
    ACYCLIC = "ACYCLIC"


@dataclass(frozen=True)
class Violation:
    rule: Rule
    message: str
    vertex: int | None = None
    time: int | None = None
    processor: int | None = None


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...]

    @property
    def valid(self) -> bool:
        return not self.violations

    def by_rule(self, rule: Rule) -> tuple[Violation, ...]:
        return tuple(v for v in self.violations if v.rule == rule)

    def __str__(self) -> str:
        if self.valid:
            return "valid"
        return "\n".join(f"{v.rule.value}: {v.message}" for v in self.violations)


def validate_instance(instance: DagInstance) -> ValidationReport:
    """Check structural invariants of an instance; all problems become report entries."""
    violations: list[Violation] = []
    ids = [vertex for vertex, _ in instance.vertices]
    n = len(ids)

    for vertex, count in sorted(Counter(ids).items()):
        if count > 1:
            violations.append(
                Violation(Rule.VERTEX_IDS, f"vertex id {vertex} appears {count} times", vertex=vertex)
            )
    id_set = set(ids)
    if id_set != set(range(n)):
        unexpected = sorted(id_set - set(range(n)))
        missing = sorted(set(range(n)) - id_set)
        violations.append(
            Violation(
                Rule.VERTEX_IDS,
                f"ids are not the dense range 0..{n - 1}: unexpected {unexpected}, missing {missing}",
            )
        )

    for vertex, weight in instance.vertices:
        if weight < 0:
            violations.append(
                Violation(Rule.WEIGHTS, f"vertex {vertex} has negative weight {weight}", vertex=vertex)
            )

    seen_edges: set[tuple[int, int]] = set()
    good_edges: list[tuple[int, int]] = []
    for parent, child in instance.edges:
        if parent == child:
            violations.append(Violation(Rule.EDGES, f"self-loop on vertex {parent}", vertex=parent))
            continue
        if parent not in id_set or child not in id_set:
            violations.append(Violation(Rule.EDGES, f"edge ({parent}, {child}) references unknown vertex"))
            continue
        if (parent, child) in seen_edges:
            violations.append(Violation(Rule.EDGES, f"duplicate edge ({parent}, {child})"))
            continue
        seen_edges.add((parent, child))
        good_edges.append((parent, child))

    if n > 0:
        with_parents = {child for _, child in good_edges}
        if len(with_parents) == n:
            violations.append(Violation(Rule.SOURCES, "every vertex has an incoming edge"))

    # Cycle check over well-formed edges only.
    indegree = {vertex: 0 for vertex in id_set}
    children: dict[int, list[int]] = {vertex: [] for vertex in id_set}
    for parent, child in good_edges:
        indegree[child] += 1
        children[parent].append(child)
    queue = [vertex for vertex, degree in indegree.items() if degree == 0]
    visited = 0
    while queue:
        vertex = queue.pop()
        visited += 1
        for child in children[vertex]:
            indegree[child] -= 1
            if indegree[child] == 0:
                queue.append(child)
    if visited != len(id_set):
        leftover = sorted(vertex for vertex, degree in indegree.items() if degree > 0)
        violations.append(Violation(Rule.ACYCLIC, f"cycle detected involving vertices {leftover}"))

    return ValidationReport(tuple(violations))


def completion_time(table: WorkTable) -> int:
    """Largest occupied slot index over all vertices; 0 for an empty table."""
    return max((t for pairs in table.assignments.values() for t, _ in pairs), default=0)


def total_idle(table: WorkTable) -> int:
    """Idle processor-slots up to the completion time.

    Computed two ways that must agree: by the identity ``r*T - occupied`` using
    the table's own slot totals, and by counting unoccupied grid cells. A
    mismatch means two vertices share a ``(slot, processor)`` cell.
    """
    horizon = completion_time(table)
    total_slots = 0
    occupied: set[tuple[int, int]] = set()
    for pairs in table.assignments.values():
        total_slots += len(pairs)
        occupied.update(pairs)
    by_identity = table.processors * horizon - total_slots
    by_count = table.processors * horizon - len(occupied)
    if by_identity != by_count:
        raise DagExploreError(
            f"idle-time identity broken: {by_identity} by slot totals vs {by_count} by "
            "grid count (a (slot, processor) cell is assigned to two vertices)"
        )
    return by_identity


def _completion_boundaries(instance: DagInstance, table: WorkTable) -> dict[int, int | None]:
    """Completion boundary per vertex: end of its last slot, in boundary time.

    A vertex occupying slots ``t1..t2`` completes at boundary ``t2``. A
    zero-weight vertex completes the moment it becomes ready: boundary 0 for a
    source, else the earliest completion boundary among its parents. ``None``
    means the vertex never completes under this table (some ancestor has no
    slots despite positive weight).
    """
    completion: dict[int, int | None] = {}
    for vertex in instance.topological_order:
        slots = table.slots_of(vertex)
        if slots:
            completion[vertex] = max(t for t, _ in slots)
        elif instance.weight[vertex] == 0:
            parents = instance.parents[vertex]
            if not parents:
                completion[vertex] = 0
            else:
                bounds = [completion[u] for u in parents if completion[u] is not None]
                completion[vertex] = min(bounds) if bounds else None
        else:
            completion[vertex] = None
    return completion


def validate_work_table(
    instance: DagInstance,
    table: WorkTable,
    mode: TableMode = TableMode.OFFLINE,
) -> ValidationReport:
    """Check a work table against an instance.

    All modes verify: slot bounds, per-slot processor exclusivity (both
    directions), per-vertex work sums, and that a vertex first occupies a slot
    only strictly after some parent's completion boundary. ONLINE additionally
    requires each vertex's slots to be one contiguous block on a single
    processor; STAYBUSY additionally forbids an idle processor at any slot
    where some ready vertex has not yet started.

    Vertices absent from ``table.assignments`` are treated as having no slots.
    A table naming a vertex outside the instance is a hard error, not a report
    entry.
    """
    mode = TableMode(mode)
    known = set(instance.weight)
    extra = sorted(set(table.assignments) - known)
    if extra:
        raise ValueError(f"work table assigns slots to unknown vertices {extra}")

    violations: list[Violation] = []
    cell_owner: dict[tuple[int, int], int] = {}

    for vertex in sorted(known):
        slots = table.slots_of(vertex)
        times = Counter(t for t, _ in slots)
        for t, p in sorted(slots):
            if not (1 <= t <= table.horizon and 1 <= p <= table.processors):
                violations.append(
                    Violation(
                        Rule.SLOT_RANGE,
                        f"vertex {vertex} occupies ({t}, {p}) outside 1..{table.horizon} x 1..{table.processors}",
                        vertex=vertex,
                        time=t,
                        processor=p,
                    )
                )
            other = cell_owner.setdefault((t, p), vertex)
            if other != vertex:
                violations.append(
                    Violation(
                        Rule.ONE_VERTEX_PER_PROC,
                        f"slot ({t}, {p}) assigned to both vertex {other} and vertex {vertex}",
                        vertex=vertex,
                        time=t,
                        processor=p,
                    )
                )
        for t, count in sorted(times.items()):
            if count > 1:
                violations.append(
                    Violation(
                        Rule.ONE_PROC_PER_VERTEX,
                        f"vertex {vertex} occupies {count} processors in slot {t}",
                        vertex=vertex,
                        time=t,
                    )
                )
        if len(slots) != instance.weight[vertex]:
            violations.append(
                Violation(
                    Rule.WORK_SUM,
                    f"vertex {vertex} occupies {len(slots)} slots but has weight {instance.weight[vertex]}",
                    vertex=vertex,
                )
            )

    completion = _completion_boundaries(instance, table)

    for vertex in instance.topological_order:
        slots = table.slots_of(vertex)
        if not slots or not instance.parents[vertex]:
            continue
        first = min(t for t, _ in slots)
        bounds = [completion[u] for u in instance.parents[vertex] if completion[u] is not None]
        # A parent completing at boundary b frees its children from slot b+1 on.
        if not bounds or min(bounds) >= first:
            earliest = min(bounds) if bounds else None
            violations.append(
                Violation(
                    Rule.PARENT_FIRST,
                    f"vertex {vertex} starts at slot {first} before any parent completes"
                    + (f" (earliest parent completion boundary {earliest})" if earliest is not None else ""),
                    vertex=vertex,
                    time=first,
                )
            )

    if mode in (TableMode.ONLINE, TableMode.STAYBUSY):
        for vertex in sorted(known):
            slots = table.slots_of(vertex)
            if not slots:
                continue
            procs = {p for _, p in slots}
            times = sorted(t for t, _ in slots)
            contiguous = times == list(range(times[0], times[0] + len(times)))
            if len(procs) > 1 or not contiguous:
                violations.append(
                    Violation(
                        Rule.CONTIGUOUS,
                        f"vertex {vertex} is not one contiguous block on a single processor "
                        f"(processors {sorted(procs)}, slots {times})",
                        vertex=vertex,
                    )
                )

    if mode is TableMode.STAYBUSY:
        occupied_at: dict[int, set[int]] = {}
        for pairs in table.assignments.values():
            for t, p in pairs:
                occupied_at.setdefault(t, set()).add(p)
        for vertex in instance.topological_order:
            slots = table.slots_of(vertex)
            if not slots:
                continue  # zero-weight never waits; missing work is flagged by WORK_SUM
            parents = instance.parents[vertex]
            if parents:
                bounds = [completion[u] for u in parents if completion[u] is not None]
                if not bounds:
                    continue
                ready_boundary = min(bounds)
            else:
                ready_boundary = 0
            first = min(t for t, _ in slots)
            for t in range(ready_boundary + 1, first):
                busy = occupied_at.get(t, set())
                if len(busy) < table.processors:
                    free = min(p for p in range(1, table.processors + 1) if p not in busy)
                    violations.append(
                        Violation(
                            Rule.STAYBUSY,
                            f"vertex {vertex} is ready from slot {ready_boundary + 1} but "
                            f"unstarted at slot {t} while processor {free} is idle",
                            vertex=vertex,
                            time=t,
                            processor=free,
                        )
                    )
                    break

    return ValidationReport(tuple(violations))


__all__ = [
    "CycleError",
    "DagExploreError",
    "DagInstance",
    "Family",
    "FamilyTag",
    "InvalidInstanceError",
    "Rule",
    "SizeCapError",
    "TableMode",
    "ValidationReport",
    "Violation",
    "WorkTable",
    "completion_time",
    "total_idle",
    "validate_instance",
    "validate_work_table",
]
