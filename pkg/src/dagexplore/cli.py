"""Command-line harness: generation, simulation, offline baselines,
competitive-ratio experiments, speedup benchmarks, and validation.

Exit codes: 0 ok, 1 assertion/bound failure, 2 input error.
"""

from __future__ import annotations

import csv
import io as _io
import json
import os
import statistics
import sys
import time
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import click

from . import actors, generators, io, offline
from .core import (
    DagExploreError,
    DagInstance,
    Family,
    SizeCapError,
    TableMode,
    completion_time,
    validate_instance,
    validate_work_table,
)
from .simulate import (
    FrontierPolicy,
    simulate,
    uniform_sources_ratio_formula,
    worst_case_closed_form,
    worst_case_online,
)

EXIT_BOUND_FAILURE = 1
EXIT_INPUT_ERROR = 2


@dataclass(frozen=True)
class ExperimentRecord:
    """One competitive-ratio measurement row."""

    name: str
    family: str
    params: str
    r: int
    policy: str
    t_online: int
    t_offline_bound: int
    t_offline_greedy: int
    ratio: Fraction
    wall_ms: float
    reps: int

    @property
    def tight(self) -> bool:
        return self.ratio == Fraction(2 * self.r - 1, self.r)

    def row(self) -> dict[str, object]:
        return {
            "name": self.name,
            "family": self.family,
            "params": self.params,
            "r": self.r,
            "policy": self.policy,
            "t_online": self.t_online,
            "t_offline_bound": self.t_offline_bound,
            "t_offline_greedy": self.t_offline_greedy,
            "ratio": f"{self.ratio.numerator}/{self.ratio.denominator}",
            "ratio_decimal": float(self.ratio),
            "tight": int(self.tight),
            "wall_ms": round(self.wall_ms, 3),
            "reps": self.reps,
        }


@click.group()
@click.option("--seed", type=int, default=0, show_default=True, help="Seed for seeded generators.")
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), default=None, help="Output file (default: stdout).")
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv", show_default=True, help="Row output format.")
@click.pass_context
def main(ctx: click.Context, seed: int, out: Path | None, fmt: str) -> None:
    """Explore vertex-weighted DAGs online and measure against offline bounds."""
    ctx.obj = {"seed": seed, "out": out, "fmt": fmt}


def _fail_input(message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(EXIT_INPUT_ERROR)


def _load_instance(path: Path) -> DagInstance:
    try:
        instance = io.read_instance(path)
    except (OSError, io.FileFormatError) as exc:
        _fail_input(str(exc))
    report = validate_instance(instance)
    if not report.valid:
        _fail_input(f"instance {path} is invalid:\n{report}")
    return instance


def _emit_bytes(ctx: click.Context, data: bytes) -> None:
    out: Path | None = ctx.obj["out"]
    if out is None:
        sys.stdout.write(data.decode("utf-8"))
    else:
        out.write_bytes(data)
        click.echo(f"wrote {out}", err=True)


def _emit_rows(ctx: click.Context, rows: list[dict[str, object]]) -> None:
    if ctx.obj["fmt"] == "json":
        data = (json.dumps(rows, indent=2) + "\n").encode("utf-8")
    else:
        buffer = _io.StringIO()
        writer = csv.DictWriter(buffer, fieldnames=list(rows[0]) if rows else [], lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
        data = buffer.getvalue().encode("utf-8")
    _emit_bytes(ctx, data)


def _summarize(instance: DagInstance) -> str:
    path = offline.min_path_work(instance)
    return (
        f"{instance.name}: |V|={instance.n_vertices} |E|={len(instance.edges)} "
        f"total_w={instance.total_weight} max_path_w={path.max_work}"
    )


def _finish_generate(ctx: click.Context, instance: DagInstance) -> None:
    _emit_bytes(ctx, io.instance_to_json_bytes(instance))
    click.echo(_summarize(instance), err=True)


@main.group()
def generate() -> None:
    """Write a deterministic instance from one of the built-in families."""


@generate.command("worstcase")
@click.option("--r", "r", type=int, required=True)
@click.option("--tstar", type=int, required=True)
@click.pass_context
def generate_worstcase(ctx: click.Context, r: int, tstar: int) -> None:
    try:
        instance = generators.worst_case_instance(r, tstar)
    except ValueError as exc:
        _fail_input(str(exc))
    _finish_generate(ctx, instance)


@generate.command("uniform")
@click.option("--m", type=int, required=True)
@click.option("--w", type=int, required=True)
@click.pass_context
def generate_uniform(ctx: click.Context, m: int, w: int) -> None:
    try:
        instance = generators.uniform_sources(m, w)
    except ValueError as exc:
        _fail_input(str(exc))
    _finish_generate(ctx, instance)


def _parse_weight_lists(text: str) -> list[list[int]]:
    return [[int(w) for w in chunk.split(",") if w] for chunk in text.split(";") if chunk]


@generate.command("paths")
@click.option("--weights", required=True, help="Per-chain weights, e.g. '2,3,4;1,1'.")
@click.option("--cross", default="", help="Extra cross edges 'parent-child,...'.")
@click.pass_context
def generate_paths(ctx: click.Context, weights: str, cross: str) -> None:
    try:
        weight_lists = _parse_weight_lists(weights)
        lengths = [len(chunk) for chunk in weight_lists]
        instance = generators.disjoint_paths(lengths, weight_lists)
        if cross:
            edges = [tuple(int(v) for v in pair.split("-")) for pair in cross.split(",")]
            instance = generators.crossed_paths(instance, edges)  # type: ignore[arg-type]
    except (ValueError, DagExploreError) as exc:
        _fail_input(str(exc))
    _finish_generate(ctx, instance)


@generate.command("branching")
@click.option("--weights", required=True, help="Per-chain weights of the base paths.")
@click.option("--branch", "branches", multiple=True, help="Branch as 'attach:w1,w2'.")
@click.pass_context
def generate_branching(ctx: click.Context, weights: str, branches: tuple[str, ...]) -> None:
    try:
        weight_lists = _parse_weight_lists(weights)
        base = generators.disjoint_paths([len(c) for c in weight_lists], weight_lists)
        specs = []
        for branch in branches:
            attach, _, chain = branch.partition(":")
            specs.append((int(attach), [int(w) for w in chain.split(",") if w]))
        instance = generators.branching_paths(base, specs)
    except (ValueError, DagExploreError) as exc:
        _fail_input(str(exc))
    _finish_generate(ctx, instance)


@generate.command("layered")
@click.option("--layers", type=int, required=True)
@click.option("--width", type=int, required=True)
@click.option("--max-w", type=int, default=5, show_default=True)
@click.option("--edge-prob", type=float, default=0.5, show_default=True)
@click.pass_context
def generate_layered(ctx: click.Context, layers: int, width: int, max_w: int, edge_prob: float) -> None:
    try:
        instance = generators.random_layered_dag(ctx.obj["seed"], layers, width, max_w, edge_prob)
    except ValueError as exc:
        _fail_input(str(exc))
    _finish_generate(ctx, instance)


@generate.command("lattice")
@click.option("--k", type=int, required=True)
@click.option("--weight", "weight_fn", default="const:1", show_default=True, help="const:<c>, depth, or random:<seed>.")
@click.option("--keep-prob", type=float, default=None, help="Seeded sparsification probability per subset.")
@click.pass_context
def generate_lattice(ctx: click.Context, k: int, weight_fn: str, keep_prob: float | None) -> None:
    include = None
    if keep_prob is not None:
        if not 0.0 <= keep_prob <= 1.0:
            _fail_input(f"--keep-prob must be in [0, 1], got {keep_prob}")
        seed = ctx.obj["seed"]
        import random as _random

        include = lambda mask: _random.Random((seed, mask)).random() < keep_prob  # noqa: E731
    try:
        instance = generators.subset_lattice_atlas(k, weight_fn, include=include)
    except ValueError as exc:
        _fail_input(str(exc))
    _finish_generate(ctx, instance)


@main.command("simulate")
@click.argument("instance_file", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--r", "r", type=int, required=True)
@click.option("--policy", default="fifo", show_default=True, help="fifo, lifo, random:<seed>, max-weight-last, scripted:<ids>.")
@click.pass_context
def simulate_cmd(ctx: click.Context, instance_file: Path, r: int, policy: str) -> None:
    """Run one online schedule and write its work table plus a JSON sidecar."""
    instance = _load_instance(instance_file)
    try:
        frontier = FrontierPolicy.parse(policy)
        result = simulate(instance, r, frontier)
    except (ValueError, DagExploreError) as exc:
        _fail_input(str(exc))
    out: Path | None = ctx.obj["out"]
    _emit_bytes(ctx, io.table_to_csv_bytes(result.table))
    sidecar = io.sim_sidecar_bytes(result.completion, result.idle, frontier.label, r)
    if out is not None:
        sidecar_path = out.with_suffix(out.suffix + ".json")
        sidecar_path.write_bytes(sidecar)
        click.echo(f"wrote {sidecar_path}", err=True)
    click.echo(f"T={result.completion} idle={result.idle} policy={frontier.label} r={r}", err=True)


@main.command("offline")
@click.argument("instance_file", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--r", "r", type=int, required=True)
@click.pass_context
def offline_cmd(ctx: click.Context, instance_file: Path, r: int) -> None:
    """Offline lower bound and greedy schedule; reports the achieved gap."""
    instance = _load_instance(instance_file)
    try:
        bound = offline.offline_lower_bound(instance, r)
        table = offline.offline_schedule(instance, r)
    except (ValueError, DagExploreError) as exc:
        _fail_input(str(exc))
    achieved = completion_time(table)
    _emit_bytes(ctx, io.table_to_csv_bytes(table))
    click.echo(f"bound={bound} greedy_T={achieved} gap={achieved - bound}", err=True)


@main.command("ratio")
@click.argument("instance_file", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--r", "r", type=int, required=True)
@click.option("--mode", type=click.Choice(["exhaustive", "family", "policy-sweep"]), default="exhaustive", show_default=True)
@click.pass_context
def ratio_cmd(ctx: click.Context, instance_file: Path, r: int, mode: str) -> None:
    """Competitive-ratio rows; exits 1 if any ratio exceeds 2 - 1/r."""
    instance = _load_instance(instance_file)
    family = instance.family.family.value if instance.family else ""
    params = (
        ",".join(f"{k}={v}" for k, v in instance.family.params) if instance.family else ""
    )
    try:
        bound = offline.offline_lower_bound(instance, r)
        greedy = completion_time(offline.offline_schedule(instance, r))
    except (ValueError, DagExploreError) as exc:
        _fail_input(str(exc))

    def record(policy: str, t_online: int, wall_ms: float) -> ExperimentRecord:
        ratio = Fraction(t_online, bound) if bound else Fraction(0)
        return ExperimentRecord(
            name=instance.name,
            family=family,
            params=params,
            r=r,
            policy=policy,
            t_online=t_online,
            t_offline_bound=bound,
            t_offline_greedy=greedy,
            ratio=ratio,
            wall_ms=wall_ms,
            reps=1,
        )

    records: list[ExperimentRecord] = []
    try:
        if mode == "exhaustive":
            start = time.perf_counter()
            worst = worst_case_online(instance, r)
            records.append(record("exhaustive-worst", worst, (time.perf_counter() - start) * 1e3))
        elif mode == "family":
            tag = instance.family
            if tag is None:
                _fail_input("family mode needs a generated instance with a family tag")
            if tag.family is Family.WORST_CASE and tag.param("r") == r:
                worst = worst_case_closed_form(r, tag.param("t_star"))
                records.append(record("family-closed-form", worst, 0.0))
            elif tag.family is Family.UNIFORM_SOURCES:
                worst = simulate(instance, r, FrontierPolicy.fifo()).completion
                rec = record("family-fifo", worst, 0.0)
                records.append(rec)
                formula = uniform_sources_ratio_formula(tag.param("m"), r)
                click.echo(
                    f"note: equal-source formula predicts {formula} "
                    f"({float(formula):.4f}); measured {rec.ratio} ({float(rec.ratio):.4f})",
                    err=True,
                )
            else:
                _fail_input(f"no closed form for family {tag.family.value} at r={r}")
        else:  # policy-sweep
            policies = [
                FrontierPolicy.fifo(),
                FrontierPolicy.lifo(),
                FrontierPolicy.random(ctx.obj["seed"]),
                FrontierPolicy.max_weight_last(),
            ]
            for policy in policies:
                start = time.perf_counter()
                result = simulate(instance, r, policy)
                records.append(
                    record(policy.label, result.completion, (time.perf_counter() - start) * 1e3)
                )
    except SizeCapError as exc:
        _fail_input(str(exc))
    except (ValueError, DagExploreError) as exc:
        _fail_input(str(exc))

    _emit_rows(ctx, [rec.row() for rec in records])
    limit = Fraction(2 * r - 1, r)
    broken = [rec for rec in records if rec.ratio > limit]
    for rec in broken:
        click.echo(
            f"BOUND VIOLATION: {rec.policy} ratio {rec.ratio} > {limit} on {rec.name}", err=True
        )
    for rec in records:
        if rec.tight:
            click.echo(f"tight: {rec.policy} achieves ratio {rec.ratio} = 2 - 1/{r}", err=True)
    if broken:
        sys.exit(EXIT_BOUND_FAILURE)


@main.command("bench")
@click.argument("instance_file", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--cores", default="1,2,4,8", show_default=True, help="Comma-separated worker counts.")
@click.option("--unit-cost-ms", type=float, default=2.0, show_default=True)
@click.option("--reps", type=int, default=5, show_default=True)
@click.option("--force", is_flag=True, help="Proceed even with fewer hardware threads than max cores.")
@click.option("--pin", is_flag=True, help="Pin the process to the first max(cores) CPUs.")
@click.option("--trace-out", type=click.Path(dir_okay=False, path_type=Path), default=None,
              help="Write the last run's event trace as JSON lines.")
@click.option("--dag-out", type=click.Path(dir_okay=False, path_type=Path), default=None,
              help="Write the last run's discovered DAG with unit-rounded costs.")
@click.pass_context
def bench_cmd(
    ctx: click.Context,
    instance_file: Path,
    cores: str,
    unit_cost_ms: float,
    reps: int,
    force: bool,
    pin: bool,
    trace_out: Path | None,
    dag_out: Path | None,
) -> None:
    """Wall-time scaling of the concurrent executor; emits a plot-ready CSV."""
    instance = _load_instance(instance_file)
    try:
        core_counts = sorted({int(c) for c in cores.split(",") if c})
    except ValueError:
        _fail_input(f"unparseable --cores {cores!r}")
    if not core_counts or core_counts[0] < 1:
        _fail_input("--cores needs positive integers")
    if reps < 1:
        _fail_input("--reps must be >= 1")
    hw_threads = os.cpu_count() or 1
    if core_counts[-1] > hw_threads:
        click.echo(
            f"warning: max cores {core_counts[-1]} exceeds {hw_threads} hardware threads; "
            "speedup numbers will be meaningless",
            err=True,
        )
        if not force:
            _fail_input("rerun with --force to benchmark beyond the hardware thread count")
    if pin and hasattr(os, "sched_setaffinity"):
        os.sched_setaffinity(0, set(range(min(core_counts[-1], hw_threads))))

    unit_ns = int(unit_cost_ms * 1e6)
    rows: list[dict[str, object]] = []
    baseline_ms: float | None = None
    last_result: actors.RunResult | None = None
    for count in core_counts:
        wall_ms: list[float] = []
        nodes = instance.n_vertices
        for _ in range(reps):
            workload = generators.to_workload(instance, unit_ns)
            start = time.perf_counter()
            try:
                result = actors.run(workload, count)
            except (ValueError, DagExploreError) as exc:
                click.echo(f"warning: bench row cores={count} failed: {exc}", err=True)
                break
            wall_ms.append((time.perf_counter() - start) * 1e3)
            nodes = len(result.keys)
            last_result = result
        if not wall_ms:
            continue
        mean_ms = statistics.fmean(wall_ms)
        if baseline_ms is None:
            baseline_ms = mean_ms * count  # normalized to one core
        rows.append(
            {
                "cores": count,
                "mean_ms": round(mean_ms, 3),
                "min_ms": round(min(wall_ms), 3),
                "nodes_per_sec": round(nodes / (mean_ms / 1e3), 3),
                "speedup": round(baseline_ms / mean_ms, 4),
            }
        )
    _emit_rows(ctx, rows)


@main.command("validate")
@click.argument("instance_file", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.argument("table_file", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--mode", type=click.Choice([m.value for m in TableMode]), default="offline", show_default=True)
@click.option("--r", "r", type=int, default=None, help="Processor count (default: inferred from the table).")
def validate_cmd(instance_file: Path, table_file: Path, mode: str, r: int | None) -> None:
    """Validate a work table against an instance; exit 0 iff valid."""
    instance = _load_instance(instance_file)
    try:
        table = io.read_table(table_file, processors=r)
        report = validate_work_table(instance, table, TableMode(mode))
    except (OSError, io.FileFormatError, ValueError) as exc:
        _fail_input(str(exc))
    if report.valid:
        click.echo(f"valid ({mode} mode), T={completion_time(table)}")
        return
    click.echo(str(report))
    sys.exit(EXIT_BOUND_FAILURE)


@main.command("oracle")
@click.argument("instance_file", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--r", "r", type=int, required=True)
def oracle_cmd(instance_file: Path, r: int) -> None:
    """Exhaustive offline optimum for tiny instances, next to bound and greedy."""
    instance = _load_instance(instance_file)
    try:
        opt = offline.brute_force_offline_opt(instance, r)
        bound = offline.offline_lower_bound(instance, r)
        greedy = completion_time(offline.offline_schedule(instance, r))
    except SizeCapError as exc:
        _fail_input(str(exc))
    except (ValueError, DagExploreError) as exc:
        _fail_input(str(exc))
    click.echo(f"bound={bound} greedy_T={greedy} contiguous_opt={opt}")


if __name__ == "__main__":
    main()
