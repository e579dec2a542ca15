"""JSON and CSV formats.

Floats are written with Python's shortest round-trip repr, so every value
read back is bit-identical to the one written.
"""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path
from typing import Any

import numpy as np

from .core import Grid, StepFunction, StepGraphon, ValidationError
from .graphs import Graph
from .sampling import Partition


def _require(d: dict, *keys: str, what: str):
    if not isinstance(d, dict):
        raise ValidationError(f"{what} must be a JSON object", "malformed-json")
    missing = [k for k in keys if k not in d]
    if missing:
        raise ValidationError(f"{what} is missing field(s) {missing}", "malformed-json")


def graphon_to_dict(w: StepGraphon) -> dict:
    return {
        "breakpoints": w.grid.breakpoints.tolist(),
        "values": w.values.tolist(),
        "mode": w.mode,
    }


def graphon_from_dict(d: dict) -> StepGraphon:
    _require(d, "breakpoints", "values", what="graphon")
    try:
        grid = Grid(d["breakpoints"])
        values = np.array(d["values"], dtype=float)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError(f"graphon arrays are malformed: {exc}", "malformed-json") from exc
    mode = d.get("mode")
    if mode is None:
        mode = "graphon" if np.all((values >= 0) & (values <= 1)) else "kernel"
    return StepGraphon(grid, values, mode)


def function_to_dict(f: StepFunction) -> dict:
    return {"breakpoints": f.grid.breakpoints.tolist(), "values": f.values.tolist()}


def function_from_dict(d: dict) -> StepFunction:
    _require(d, "breakpoints", "values", what="step function")
    try:
        return StepFunction(Grid(d["breakpoints"]), np.array(d["values"], dtype=float))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError(f"step function arrays are malformed: {exc}", "malformed-json") from exc


def graph_to_dict(g: Graph) -> dict:
    return {"n": g.n, "edges": [[i + 1, j + 1] for i, j in g.sorted_edges()]}


def graph_from_dict(d: dict) -> Graph:
    _require(d, "n", "edges", what="graph")
    try:
        edges = [(int(i) - 1, int(j) - 1) for i, j in d["edges"]]
        return Graph.from_edges(int(d["n"]), edges)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError(f"graph is malformed: {exc}", "malformed-json") from exc


def partition_to_dict(p: Partition) -> dict:
    return {"breakpoints": p.grid.breakpoints.tolist(), "part_of": (p.part_of + 1).tolist()}


def partition_from_dict(d: dict) -> Partition:
    if isinstance(d, dict) and "equipartition" in d:
        return Partition.equipartition(int(d["equipartition"]))
    _require(d, "breakpoints", "part_of", what="partition")
    parts = np.asarray(d["part_of"], dtype=int)
    if parts.size and parts.min() < 1:
        raise ValidationError("part_of entries are 1-based", "bad-partition")
    return Partition(Grid(d["breakpoints"]), parts - 1)


def psi_from_json(obj) -> list[StepFunction]:
    items = obj.get("psi") if isinstance(obj, dict) else obj
    if not isinstance(items, list):
        raise ValidationError("psi must be a list of step functions", "malformed-json")
    return [function_from_dict(p) for p in items]


def _clean(obj: Any):
    """Convert numpy scalars/arrays and non-finite floats for JSON output."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def dumps(obj: Any) -> str:
    return json.dumps(_clean(obj), indent=2, allow_nan=False) + "\n"


def load_json(path) -> Any:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc.strerror}", "io-error") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: malformed JSON ({exc.msg} at line {exc.lineno})", "malformed-json") from exc


def write_text(path, text: str) -> None:
    Path(path).write_text(text)


def rows_to_csv(rows, columns) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_csv_cell(row.get(c) if isinstance(row, dict) else row[i]) for i, c in enumerate(columns)])
    return buf.getvalue()


def _csv_cell(v):
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v
