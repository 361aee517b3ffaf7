"""Concurrent online DAG exploration: a coordinator actor owning the
discovered graph and the unprocessed-vertex queue, plus a fixed pool of worker
actors that process vertices and report children by message.

All coordination is message passing over per-actor mailboxes; the coordinator
is the sole reader and writer of the graph and queue, so no state is shared.
The coordinator also stamps every trace event from a single monotonic clock,
which keeps the trace totally ordered by its own processing order.
"""

from __future__ import annotations

import json
import queue
import threading
import time
from bisect import bisect_right
from collections import deque
from dataclasses import dataclass
from enum import Enum
from typing import Any, Protocol, Sequence

from .core import DagExploreError, DagInstance, Rule, ValidationReport, Violation, WorkTable

Key = Any  # descriptor keys must be hashable and stable


class TraceFormatError(DagExploreError, ValueError):
    """Raised for traces that break the event-stream invariants."""


@dataclass(frozen=True)
class Descriptor:
    """Opaque handle for a vertex; ``key`` is the stable identity used for
    deduplication, ``payload`` is whatever the workload needs to process it."""

    key: Key
    payload: Any = None


class Workload(Protocol):
    """Online oracle: costs and children are observable only after processing."""

    def roots(self) -> Sequence[Descriptor]: ...

    def process(self, descriptor: Descriptor) -> tuple[int, Sequence[Descriptor]]:
        """Process one vertex; returns (measured cost in ns, children)."""
        ...


# Message protocol. SamplingResult for a descriptor is sent exactly once;
# Shutdown is the last message a worker receives.


@dataclass(frozen=True)
class Start:
    pass


@dataclass(frozen=True)
class SampleTask:
    descriptor: Descriptor


@dataclass(frozen=True)
class SamplingResult:
    descriptor: Descriptor
    children: tuple[Descriptor, ...]
    cost_ns: int
    worker: int
    error: str | None = None


@dataclass(frozen=True)
class WorkerIdle:
    worker: int


@dataclass(frozen=True)
class Shutdown:
    pass


class TraceKind(str, Enum):
    DISPATCH = "DISPATCH"
    COMPLETE = "COMPLETE"
    ENQUEUE = "ENQUEUE"
    DEDUP_HIT = "DEDUP_HIT"
    WORKER_IDLE = "WORKER_IDLE"
    SHUTDOWN = "SHUTDOWN"


@dataclass(frozen=True)
class TraceEvent:
    ts_ns: int
    kind: TraceKind
    key: Key
    worker: int  # 0 marks coordinator-only events (ENQUEUE, DEDUP_HIT)


@dataclass(frozen=True)
class RunResult:
    """Discovered graph plus the full event trace of one run."""

    keys: tuple[Key, ...]  # dense vertex id -> descriptor key, in discovery order
    costs_ns: tuple[int, ...]
    edges: tuple[tuple[int, int], ...]
    failed: frozenset[int]
    trace: tuple[TraceEvent, ...]
    processors: int

    @property
    def partial(self) -> bool:
        return bool(self.failed)

    def vertex_of(self, key: Key) -> int:
        return self.keys.index(key)

    def discovered_instance(self, name: str = "discovered", cost_unit_ns: int | None = None) -> DagInstance:
        """The discovered DAG with measured costs as weights; pass a
        quantization unit to round costs into work units."""
        if cost_unit_ns is None:
            weights = self.costs_ns
        else:
            if cost_unit_ns <= 0:
                raise ValueError("cost_unit_ns must be positive")
            weights = tuple(round(cost / cost_unit_ns) for cost in self.costs_ns)
        return DagInstance.from_weights(name=name, weights=weights, edges=self.edges)


class _Sampler(threading.Thread):
    def __init__(
        self,
        worker_id: int,
        inbox: queue.SimpleQueue,
        coordinator: queue.SimpleQueue,
        workload: Workload,
    ) -> None:
        super().__init__(name=f"sampler-{worker_id}", daemon=True)
        self.worker_id = worker_id
        self.inbox = inbox
        self.coordinator = coordinator
        self.workload = workload

    def run(self) -> None:
        while True:
            message = self.inbox.get()
            if isinstance(message, Shutdown):
                return
            descriptor = message.descriptor
            started = time.perf_counter_ns()
            try:
                cost_ns, children = self.workload.process(descriptor)
                result = SamplingResult(descriptor, tuple(children), int(cost_ns), self.worker_id)
            except Exception as exc:  # vertex failure is data, not a crash
                cost_ns = time.perf_counter_ns() - started
                result = SamplingResult(descriptor, (), cost_ns, self.worker_id, error=repr(exc))
            self.coordinator.put(result)
            self.coordinator.put(WorkerIdle(self.worker_id))


def run(workload: Workload, r: int) -> RunResult:
    """Explore the workload's reachable graph with ``r`` workers.

    Terminates when the unprocessed queue is empty and every worker is idle.
    Every reachable vertex is processed exactly once; duplicate discoveries
    record an edge and a DEDUP_HIT. A vertex whose processing raises is marked
    failed and its children stay undiscovered. Returns only after all workers
    acknowledged Shutdown (joined).
    """
    if r < 1:
        raise ValueError(f"worker count must be >= 1, got {r}")
    roots = list(workload.roots())
    if not roots:
        raise ValueError("workload has no roots")

    coordinator_inbox: queue.SimpleQueue = queue.SimpleQueue()
    worker_inboxes = {wid: queue.SimpleQueue() for wid in range(1, r + 1)}
    samplers = [
        _Sampler(wid, worker_inboxes[wid], coordinator_inbox, workload)
        for wid in range(1, r + 1)
    ]
    for sampler in samplers:
        sampler.start()
    coordinator_inbox.put(Start())

    trace: list[TraceEvent] = []

    def stamp(kind: TraceKind, key: Key, worker: int) -> None:
        trace.append(TraceEvent(time.monotonic_ns(), kind, key, worker))

    key_to_id: dict[Key, int] = {}
    keys: list[Key] = []
    costs: list[int] = []
    edges: list[tuple[int, int]] = []
    edge_seen: set[tuple[int, int]] = set()
    failed: set[int] = set()
    unprocessed: deque[Descriptor] = deque()
    idle_workers = set(worker_inboxes)
    in_flight = 0

    def record_discovery(descriptor: Descriptor, parent: int | None) -> None:
        known = key_to_id.get(descriptor.key)
        if known is None:
            vertex = len(keys)
            key_to_id[descriptor.key] = vertex
            keys.append(descriptor.key)
            costs.append(0)
            unprocessed.append(descriptor)
            stamp(TraceKind.ENQUEUE, descriptor.key, 0)
        else:
            vertex = known
            stamp(TraceKind.DEDUP_HIT, descriptor.key, 0)
        if parent is not None:
            edge = (parent, vertex)
            if edge not in edge_seen:
                edge_seen.add(edge)
                edges.append(edge)

    def dispatch_to(worker: int) -> None:
        nonlocal in_flight
        descriptor = unprocessed.popleft()
        stamp(TraceKind.DISPATCH, descriptor.key, worker)
        worker_inboxes[worker].put(SampleTask(descriptor))
        in_flight += 1

    def dispatch_idle() -> None:
        while unprocessed and idle_workers:
            worker = min(idle_workers)
            idle_workers.remove(worker)
            dispatch_to(worker)

    message = coordinator_inbox.get()
    if not isinstance(message, Start):  # pragma: no cover - single producer setup
        raise DagExploreError(f"expected Start, got {message!r}")
    for descriptor in roots:
        record_discovery(descriptor, parent=None)
    dispatch_idle()

    while in_flight:
        message = coordinator_inbox.get()
        if isinstance(message, SamplingResult):
            vertex = key_to_id[message.descriptor.key]
            costs[vertex] = message.cost_ns
            stamp(TraceKind.COMPLETE, message.descriptor.key, message.worker)
            if message.error is not None:
                failed.add(vertex)
            else:
                for child in message.children:
                    record_discovery(child, parent=vertex)
            dispatch_idle()
        elif isinstance(message, WorkerIdle):
            stamp(TraceKind.WORKER_IDLE, None, message.worker)
            in_flight -= 1
            if unprocessed:
                dispatch_to(message.worker)
            else:
                idle_workers.add(message.worker)
        else:  # pragma: no cover - protocol violation
            raise DagExploreError(f"unexpected coordinator message {message!r}")

    for worker, inbox in worker_inboxes.items():
        inbox.put(Shutdown())
        stamp(TraceKind.SHUTDOWN, None, worker)
    for sampler in samplers:
        sampler.join()

    return RunResult(
        keys=tuple(keys),
        costs_ns=tuple(costs),
        edges=tuple(edges),
        failed=frozenset(failed),
        trace=tuple(trace),
        processors=r,
    )


def _intervals(trace: Sequence[TraceEvent]) -> dict[Key, tuple[int, int, int]]:
    """Per-key (worker, dispatch ts, complete ts); validates trace structure."""
    enqueued: set[Key] = set()
    open_by_worker: dict[int, tuple[Key, int]] = {}
    spans: dict[Key, tuple[int, int, int]] = {}
    last_ts: int | None = None
    for event in trace:
        if last_ts is not None and event.ts_ns < last_ts:
            raise TraceFormatError("trace timestamps are not monotone")
        last_ts = event.ts_ns
        if event.kind is TraceKind.ENQUEUE:
            if event.key in enqueued:
                raise TraceFormatError(f"key {event.key!r} enqueued twice")
            enqueued.add(event.key)
        elif event.kind is TraceKind.DISPATCH:
            if event.key not in enqueued:
                raise TraceFormatError(f"key {event.key!r} dispatched before enqueue")
            if event.key in spans or event.key in {k for k, _ in open_by_worker.values()}:
                raise TraceFormatError(f"key {event.key!r} dispatched twice")
            if event.worker in open_by_worker:
                raise TraceFormatError(f"worker {event.worker} dispatched while busy")
            open_by_worker[event.worker] = (event.key, event.ts_ns)
        elif event.kind is TraceKind.COMPLETE:
            entry = open_by_worker.pop(event.worker, None)
            if entry is None or entry[0] != event.key:
                raise TraceFormatError(
                    f"COMPLETE for {event.key!r} on worker {event.worker} does not match a dispatch"
                )
            spans[event.key] = (event.worker, entry[1], event.ts_ns)
    if open_by_worker:
        raise TraceFormatError(f"trace ends with unfinished dispatches: {open_by_worker}")
    return spans


def trace_to_work_table(trace: Sequence[TraceEvent], unit_ns: int) -> WorkTable:
    """Quantize each vertex's [DISPATCH, COMPLETE) span onto its worker's row.

    Timestamps are mapped through a single monotone boundary function
    (nearest-boundary rounding plus the lifts needed to give every span at
    least one slot), so span ordering — per worker and across the
    parent-before-child edges of the run — survives quantization and the
    table passes online-mode validation against the matching slot-count
    instance.
    """
    if unit_ns <= 0:
        raise ValueError("unit_ns must be positive")
    spans = _intervals(trace)
    vertex_ids = {
        event.key: index
        for index, event in enumerate(e for e in trace if e.kind is TraceKind.ENQUEUE)
    }
    processors = max((e.worker for e in trace), default=1)
    if not spans:
        return WorkTable.from_slots({}, processors=max(processors, 1), horizon=0)

    origin = min(start for _, start, _ in spans.values())
    stamps = sorted({ts for _, start, end in spans.values() for ts in (start, end)})
    base: dict[int, int] = {}
    floor = 0
    for ts in stamps:
        floor = max(floor, round((ts - origin) / unit_ns))
        base[ts] = floor

    # Cumulative lift: thresholds arrive in nondecreasing end order, so the
    # lift at any timestamp is the total of bumps with threshold <= it.
    thresholds: list[int] = []
    lifts: list[int] = []

    def lifted(ts: int) -> int:
        index = bisect_right(thresholds, ts)
        return base[ts] + (lifts[index - 1] if index else 0)

    slots: dict[int, set[tuple[int, int]]] = {vertex: set() for vertex in vertex_ids.values()}
    for key, (worker, start, end) in sorted(spans.items(), key=lambda item: item[1][2]):
        low = lifted(start)
        high = lifted(end)
        if high <= low:
            bump = low + 1 - high
            total = (lifts[-1] if lifts else 0) + bump
            thresholds.append(end)
            lifts.append(total)
            high = low + 1
        slots[vertex_ids[key]].update((t, worker) for t in range(low + 1, high + 1))

    horizon = max((t for pairs in slots.values() for t, _ in pairs), default=0)
    return WorkTable.from_slots(slots, processors=processors, horizon=horizon)


def quantized_instance(result: RunResult, table: WorkTable, name: str = "quantized") -> DagInstance:
    """Instance whose weights are the quantized slot counts of ``table``; the
    ground truth that table validates against."""
    weights = [len(table.slots_of(vertex)) for vertex in range(len(result.keys))]
    return DagInstance.from_weights(name=name, weights=weights, edges=result.edges)


def check_work_conserving(trace: Sequence[TraceEvent]) -> ValidationReport:
    """Verify the logical dispatch contract on a completed trace: whenever the
    coordinator processes a WorkerIdle while the queue is nonempty, it
    dispatches to that worker before processing any further WorkerIdle.
    Wall-clock gaps from messaging latency are not violations."""
    violations: list[Violation] = []
    queue_len = 0
    for index, event in enumerate(trace):
        if event.kind is TraceKind.ENQUEUE:
            queue_len += 1
        elif event.kind is TraceKind.DISPATCH:
            queue_len -= 1
            if queue_len < 0:
                raise TraceFormatError("more dispatches than enqueues")
        elif event.kind is TraceKind.WORKER_IDLE and queue_len > 0:
            satisfied = False
            for later in trace[index + 1 :]:
                if later.kind is TraceKind.DISPATCH and later.worker == event.worker:
                    satisfied = True
                    break
                if later.kind is TraceKind.WORKER_IDLE:
                    break
            if not satisfied:
                violations.append(
                    Violation(
                        Rule.STAYBUSY,
                        f"worker {event.worker} reported idle at {event.ts_ns} ns with "
                        f"{queue_len} queued vertices but received no dispatch",
                        processor=event.worker,
                    )
                )
    return ValidationReport(tuple(violations))


@dataclass(frozen=True)
class TraceStats:
    max_queue_length: int
    total_worker_idle_ns: int


def trace_stats(trace: Sequence[TraceEvent]) -> TraceStats:
    """Queue pressure and measured idle wall time of a completed run."""
    queue_len = 0
    max_queue = 0
    idle_since: dict[int, int] = {}
    idle_total = 0
    for event in trace:
        if event.kind is TraceKind.ENQUEUE:
            queue_len += 1
            max_queue = max(max_queue, queue_len)
        elif event.kind is TraceKind.DISPATCH:
            queue_len -= 1
            started = idle_since.pop(event.worker, None)
            if started is not None:
                idle_total += event.ts_ns - started
        elif event.kind is TraceKind.WORKER_IDLE:
            idle_since.setdefault(event.worker, event.ts_ns)
        elif event.kind is TraceKind.SHUTDOWN:
            started = idle_since.pop(event.worker, None)
            if started is not None:
                idle_total += event.ts_ns - started
    return TraceStats(max_queue_length=max_queue, total_worker_idle_ns=idle_total)


def trace_to_jsonl_bytes(trace: Sequence[TraceEvent]) -> bytes:
    lines = [
        json.dumps(
            {"ts_ns": e.ts_ns, "kind": e.kind.value, "key": e.key, "worker": e.worker}
        )
        for e in trace
    ]
    return ("\n".join(lines) + "\n").encode("utf-8") if lines else b""


def trace_from_jsonl_bytes(data: bytes) -> tuple[TraceEvent, ...]:
    events = []
    for line_no, line in enumerate(data.decode("utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            raw = json.loads(line)
            events.append(
                TraceEvent(int(raw["ts_ns"]), TraceKind(raw["kind"]), raw["key"], int(raw["worker"]))
            )
        except (json.JSONDecodeError, KeyError, ValueError) as exc:
            raise TraceFormatError(f"trace line {line_no} is malformed: {exc!r}") from exc
    return tuple(events)


__all__ = [
    "Descriptor",
    "RunResult",
    "SampleTask",
    "SamplingResult",
    "Shutdown",
    "Start",
    "TraceEvent",
    "TraceFormatError",
    "TraceKind",
    "TraceStats",
    "WorkerIdle",
    "Workload",
    "check_work_conserving",
    "quantized_instance",
    "run",
    "trace_from_jsonl_bytes",
    "trace_stats",
    "trace_to_jsonl_bytes",
    "trace_to_work_table",
]
