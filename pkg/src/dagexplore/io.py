"""Byte-deterministic file formats shared by the CLI, simulator, and executor.

Instance files are JSON objects ``{"name", "vertices", "edges"}`` with
vertices sorted by id and edges lexicographic; generated instances carry an
extra ``"family"`` block. Work tables are CSV with header
``vertex,slot,processor`` and rows sorted by ``(vertex, slot)``.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

from .core import DagExploreError, DagInstance, Family, FamilyTag, WorkTable


class FileFormatError(DagExploreError, ValueError):
    """Raised when an input file cannot be parsed into the expected shape."""


def instance_to_json_bytes(instance: DagInstance) -> bytes:
    payload: dict[str, object] = {
        "name": instance.name,
        "vertices": [
            {"id": vertex, "w": weight} for vertex, weight in sorted(instance.vertices)
        ],
        "edges": [list(edge) for edge in sorted(instance.edges)],
    }
    if instance.family is not None:
        payload["family"] = {
            "kind": instance.family.family.value,
            "params": {key: value for key, value in instance.family.params},
            "seed": instance.family.seed,
        }
    return (json.dumps(payload, indent=2) + "\n").encode("utf-8")


def instance_from_json_bytes(data: bytes) -> DagInstance:
    try:
        payload = json.loads(data)
    except json.JSONDecodeError as exc:
        raise FileFormatError(f"instance file is not valid JSON: {exc}") from exc
    if not isinstance(payload, dict):
        raise FileFormatError("instance file must contain a JSON object")
    try:
        name = payload["name"]
        vertices = tuple((int(v["id"]), int(v["w"])) for v in payload["vertices"])
        edges = tuple((int(a), int(b)) for a, b in payload["edges"])
    except (KeyError, TypeError, ValueError) as exc:
        raise FileFormatError(f"instance file is malformed: {exc!r}") from exc
    family = None
    raw_family = payload.get("family")
    if raw_family is not None:
        try:
            family = FamilyTag(
                family=Family(raw_family["kind"]),
                params=tuple(sorted((str(k), int(v)) for k, v in raw_family["params"].items())),
                seed=raw_family.get("seed"),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise FileFormatError(f"family block is malformed: {exc!r}") from exc
    return DagInstance(name=str(name), vertices=vertices, edges=edges, family=family)


def write_instance(instance: DagInstance, path: str | Path) -> None:
    Path(path).write_bytes(instance_to_json_bytes(instance))


def read_instance(path: str | Path) -> DagInstance:
    return instance_from_json_bytes(Path(path).read_bytes())


def table_to_csv_bytes(table: WorkTable) -> bytes:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["vertex", "slot", "processor"])
    rows = [
        (vertex, t, p)
        for vertex, pairs in table.assignments.items()
        for t, p in pairs
    ]
    writer.writerows(sorted(rows))
    return out.getvalue().encode("utf-8")


def table_from_csv_bytes(
    data: bytes,
    processors: int | None = None,
    horizon: int | None = None,
) -> WorkTable:
    """Parse a work-table CSV; processor count and horizon are inferred from the
    rows unless given (the CSV itself carries no grid dimensions)."""
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise FileFormatError(f"work table file is not UTF-8: {exc}") from exc
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise FileFormatError("work table file is empty") from None
    if header != ["vertex", "slot", "processor"]:
        raise FileFormatError(f"unexpected work table header {header!r}")
    slots: dict[int, set[tuple[int, int]]] = {}
    for line_no, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != 3:
            raise FileFormatError(f"line {line_no}: expected 3 columns, got {len(row)}")
        try:
            vertex, t, p = (int(field) for field in row)
        except ValueError as exc:
            raise FileFormatError(f"line {line_no}: non-integer field in {row!r}") from exc
        slots.setdefault(vertex, set()).add((t, p))
    if processors is None:
        processors = max((p for pairs in slots.values() for _, p in pairs), default=1)
    if horizon is None:
        horizon = max((t for pairs in slots.values() for t, _ in pairs), default=0)
    return WorkTable.from_slots(slots, processors=processors, horizon=horizon)


def write_table(table: WorkTable, path: str | Path) -> None:
    Path(path).write_bytes(table_to_csv_bytes(table))


def read_table(
    path: str | Path,
    processors: int | None = None,
    horizon: int | None = None,
) -> WorkTable:
    return table_from_csv_bytes(Path(path).read_bytes(), processors=processors, horizon=horizon)


def sim_sidecar_bytes(t: int, idle: int, policy: str, r: int) -> bytes:
    return (json.dumps({"T": t, "idle": idle, "policy": policy, "r": r}) + "\n").encode("utf-8")


__all__ = [
    "FileFormatError",
    "instance_from_json_bytes",
    "instance_to_json_bytes",
    "read_instance",
    "read_table",
    "sim_sidecar_bytes",
    "table_from_csv_bytes",
    "table_to_csv_bytes",
    "write_instance",
    "write_table",
]
