"""Deterministic constructors for every benchmark instance family, and the
adapter that turns an instance into a synthetic online workload."""

from __future__ import annotations

import random
from collections.abc import Sequence
from dataclasses import dataclass, field
from fractions import Fraction

from .actors import Descriptor
from .busywork import burn
from .core import DagInstance, Family, FamilyTag


def worst_case_instance(r: int, t_star: int) -> DagInstance:
    """The family on which work-conserving schedulers hit their worst ratio:
    ``r + 1`` isolated sources, one of weight ``t_star`` and the rest of weight
    ``(r - 1) * t_star / r``. Requires ``r >= 2`` and ``r | t_star`` so the
    light weights are integral."""
    if r < 2:
        raise ValueError(f"needs r >= 2, got {r}")
    if t_star % r:
        raise ValueError(f"t_star={t_star} must be divisible by r={r}")
    light = (r - 1) * t_star // r
    weights = [t_star] + [light] * r
    return DagInstance.from_weights(
        name=f"worstcase-r{r}-t{t_star}",
        weights=weights,
        family=FamilyTag.make(Family.WORST_CASE, r=r, t_star=t_star),
    )


def uniform_sources(m: int, w: int) -> DagInstance:
    """``m`` isolated sources of equal weight ``w``."""
    if m < 1:
        raise ValueError(f"needs m >= 1, got {m}")
    if w < 0:
        raise ValueError(f"needs w >= 0, got {w}")
    return DagInstance.from_weights(
        name=f"uniform-m{m}-w{w}",
        weights=[w] * m,
        family=FamilyTag.make(Family.UNIFORM_SOURCES, m=m, w=w),
    )


def disjoint_paths(lengths: Sequence[int], weights: Sequence[Sequence[int]]) -> DagInstance:
    """Union of vertex-disjoint chains; ``weights[i]`` lists the ``lengths[i]``
    weights along chain ``i``."""
    if len(lengths) != len(weights):
        raise ValueError(f"{len(lengths)} lengths vs {len(weights)} weight lists")
    for index, (length, ws) in enumerate(zip(lengths, weights)):
        if length != len(ws):
            raise ValueError(f"chain {index}: length {length} vs {len(ws)} weights")
        if length < 1:
            raise ValueError(f"chain {index}: length must be >= 1")
    flat: list[int] = []
    edges: list[tuple[int, int]] = []
    for ws in weights:
        base = len(flat)
        flat.extend(int(w) for w in ws)
        edges.extend((base + i, base + i + 1) for i in range(len(ws) - 1))
    return DagInstance.from_weights(
        name=f"paths-{'x'.join(str(n) for n in lengths)}",
        weights=flat,
        edges=edges,
        family=FamilyTag.make(Family.DISJOINT_PATHS, n_paths=len(lengths), n_vertices=len(flat)),
    )


def crossed_paths(base: DagInstance, cross_edges: Sequence[tuple[int, int]]) -> DagInstance:
    """Add edges that cross between the chains of a disjoint-path instance."""
    merged = list(base.edges)
    seen = set(merged)
    for parent, child in cross_edges:
        edge = (int(parent), int(child))
        if edge in seen:
            raise ValueError(f"cross edge {edge} already present")
        seen.add(edge)
        merged.append(edge)
    crossed = DagInstance(
        name=base.name + "-crossed",
        vertices=base.vertices,
        edges=tuple(merged),
        family=FamilyTag.make(
            Family.CROSSED_PATHS, n_vertices=base.n_vertices, n_cross=len(cross_edges)
        ),
    )
    crossed.require_valid()  # re-check acyclicity with the new edges
    return crossed


def branching_paths(base: DagInstance, branches: Sequence[tuple[int, Sequence[int]]]) -> DagInstance:
    """Hang new chains off existing vertices; each branch is ``(attach vertex,
    weights of the new chain)``. Leaves the source set unchanged."""
    known = {vertex for vertex, _ in base.vertices}
    weights = [w for _, w in sorted(base.vertices)]
    edges = list(base.edges)
    for attach, chain in branches:
        if attach not in known:
            raise ValueError(f"branch attaches to unknown vertex {attach}")
        if not chain:
            raise ValueError("branch chain must be nonempty")
        previous = attach
        for w in chain:
            vertex = len(weights)
            weights.append(int(w))
            edges.append((previous, vertex))
            previous = vertex
    branched = DagInstance.from_weights(
        name=base.name + "-branched",
        weights=weights,
        edges=edges,
        family=FamilyTag.make(
            Family.BRANCHING_PATHS, n_vertices=len(weights), n_branches=len(branches)
        ),
    )
    branched.require_valid()
    return branched


def random_layered_dag(
    seed: int,
    layers: int,
    width: int,
    max_w: int,
    edge_prob: float | Fraction,
) -> DagInstance:
    """Layered random DAG: ``layers`` rows of ``width`` vertices, edges only
    between adjacent layers, every non-first-layer vertex given at least one
    parent. Byte-deterministic for a given seed."""
    if layers < 1 or width < 1 or max_w < 0:
        raise ValueError("layers and width must be >= 1, max_w >= 0")
    probability = float(edge_prob)
    if not 0.0 <= probability <= 1.0:
        raise ValueError(f"edge_prob must be in [0, 1], got {edge_prob}")
    rng = random.Random(seed)
    weights = [rng.randint(0, max_w) for _ in range(layers * width)]
    edges: list[tuple[int, int]] = []
    for layer in range(1, layers):
        above = range((layer - 1) * width, layer * width)
        for child in range(layer * width, (layer + 1) * width):
            parents = [u for u in above if rng.random() < probability]
            if not parents:
                parents = [rng.choice(list(above))]
            edges.extend((u, child) for u in parents)
    return DagInstance.from_weights(
        name=f"layered-s{seed}-l{layers}-w{width}",
        weights=weights,
        edges=edges,
        family=FamilyTag.make(
            Family.RANDOM_LAYERED, seed=seed, layers=layers, width=width, max_w=max_w
        ),
    )


def subset_lattice_atlas(
    k: int,
    weight_fn: str = "const:1",
    include=None,
) -> DagInstance:
    """Boolean-lattice exploration instance over ``k`` constraints.

    Vertices are the subsets of a ``k``-element set (the id is the subset
    bitmask), the empty set is the single source, and each edge adds one
    element: ``2^k`` vertices and ``k * 2^(k-1)`` edges. ``weight_fn`` is one
    of ``const:<c>``, ``depth`` (weight ``k - |subset|``, so effort shrinks as
    constraints accumulate), or ``random:<seed>`` (uniform in ``0..k``).

    ``include`` optionally thins the lattice: a predicate on the subset
    bitmask; kept vertices must remain reachable from the empty set through
    kept parents, and ids are re-densified.
    """
    if not 1 <= k <= 16:
        raise ValueError(f"k must be in 1..16, got {k}")
    weight_of = _parse_weight_fn(weight_fn, k)

    masks: list[int]
    if include is None:
        masks = list(range(1 << k))
    else:
        reachable = {0}
        for mask in range(1, 1 << k):
            if not include(mask):
                continue
            if any((mask ^ (1 << bit)) in reachable for bit in range(k) if mask & (1 << bit)):
                reachable.add(mask)
        masks = sorted(reachable)

    dense = {mask: index for index, mask in enumerate(masks)}
    weights = [weight_of(mask) for mask in masks]
    edges = [
        (dense[mask], dense[mask | (1 << bit)])
        for mask in masks
        for bit in range(k)
        if not mask & (1 << bit) and (mask | (1 << bit)) in dense
    ]
    return DagInstance.from_weights(
        name=f"lattice-k{k}",
        weights=weights,
        edges=edges,
        family=FamilyTag.make(Family.SUBSET_LATTICE, k=k, n_vertices=len(masks)),
    )


def _parse_weight_fn(descriptor: str, k: int):
    kind, _, arg = descriptor.partition(":")
    kind = kind.strip().lower()
    if kind == "const":
        value = int(arg) if arg else 1
        if value < 0:
            raise ValueError(f"constant weight must be >= 0, got {value}")
        return lambda mask: value
    if kind == "depth":
        return lambda mask: k - bin(mask).count("1")
    if kind == "random":
        seed = int(arg) if arg else 0
        rng = random.Random(seed)
        table = {mask: rng.randint(0, k) for mask in range(1 << k)}
        return lambda mask: table[mask]
    raise ValueError(f"unknown weight function {descriptor!r} (use const:<c>, depth, random:<seed>)")


class WorkloadFailure(RuntimeError):
    """Raised by a synthetic workload for vertices marked as failing."""


@dataclass
class SyntheticWorkload:
    """Online oracle over a hidden instance: processing a vertex burns CPU for
    ``weight * unit_cost_ns`` and only then reveals its children.

    ``root_order`` overrides the order roots are handed out (the default is
    ascending id); with a FIFO coordinator this scripts the initial dispatch
    order. ``jitter_ns`` adds a deterministic per-vertex extra delay drawn
    from ``jitter_seed``, for scheduling stress tests.
    """

    instance: DagInstance
    unit_cost_ns: int
    root_order: tuple[int, ...] | None = None
    jitter_ns: int = 0
    jitter_seed: int = 0
    fail_vertices: frozenset[int] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        self.instance.require_valid()
        if self.unit_cost_ns < 0:
            raise ValueError("unit_cost_ns must be >= 0")
        if self.root_order is not None and sorted(self.root_order) != sorted(self.instance.sources):
            raise ValueError("root_order must be a permutation of the instance sources")

    def roots(self) -> list[Descriptor]:
        order = self.root_order if self.root_order is not None else self.instance.sources
        return [Descriptor(key=vertex) for vertex in order]

    def process(self, descriptor: Descriptor) -> tuple[int, list[Descriptor]]:
        vertex = int(descriptor.key)
        target = self.instance.weight[vertex] * self.unit_cost_ns
        if self.jitter_ns:
            # Per-vertex RNG: deterministic and safe under concurrent process calls.
            jitter_rng = random.Random(self.jitter_seed * 0x9E3779B1 + vertex)
            target += jitter_rng.randint(0, self.jitter_ns)
        elapsed = burn(target)
        if vertex in self.fail_vertices:
            raise WorkloadFailure(f"vertex {vertex} configured to fail")
        return elapsed, [Descriptor(key=child) for child in self.instance.children[vertex]]


def to_workload(
    instance: DagInstance,
    unit_cost_ns: int,
    root_order: Sequence[int] | None = None,
) -> SyntheticWorkload:
    """Adapter from a known instance to the online workload interface."""
    return SyntheticWorkload(
        instance=instance,
        unit_cost_ns=unit_cost_ns,
        root_order=tuple(root_order) if root_order is not None else None,
    )


__all__ = [
    "SyntheticWorkload",
    "WorkloadFailure",
    "branching_paths",
    "crossed_paths",
    "disjoint_paths",
    "random_layered_dag",
    "subset_lattice_atlas",
    "to_workload",
    "uniform_sources",
    "worst_case_instance",
]
