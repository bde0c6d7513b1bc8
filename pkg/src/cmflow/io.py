"""Serialization of submanifolds, entropy results and flow traces.

Submanifolds use a JSON document tagged ``"schema": "cmflow-sub-v1"``:

``{"schema", "variant", "space", ...}`` where ``space`` is
``{"variant": "euclidean"|"hyperbolic"|"warped", ...}`` and the remaining
keys depend on the variant (``radius``/``center`` for spheres,
``vertices``/``closed`` for polylines, ``profile``/``closed`` for surfaces of
revolution, ``parts`` for unions).  Points are coordinate arrays in the
ambient model (Cartesian, hyperboloid or polar).
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .entropy import EntropyResult
from .errors import DomainError
from .flow import FlowTrace
from .geometry import space_from_json
from .submanifold import GeodesicSphere, PolylineCurve, RevolutionSurface, Submanifold, UnionSubmanifold

__all__ = [
    "SUB_SCHEMA",
    "submanifold_to_json",
    "submanifold_from_json",
    "save_submanifold",
    "load_submanifold",
    "entropy_result_to_json",
    "write_search_trace_csv",
    "write_trace_jsonl",
    "read_trace_jsonl",
    "write_csv",
    "write_json",
]

SUB_SCHEMA = "cmflow-sub-v1"


def submanifold_to_json(S: Submanifold) -> dict:
    return {"schema": SUB_SCHEMA, **S.to_json()}


def submanifold_from_json(doc: dict) -> Submanifold:
    schema = doc.get("schema", SUB_SCHEMA)
    if schema != SUB_SCHEMA:
        raise DomainError(f"unsupported submanifold schema {schema!r}")
    variant = doc.get("variant")
    if variant == "union":
        return UnionSubmanifold([submanifold_from_json(p) for p in doc["parts"]])
    try:
        space = space_from_json(doc["space"])
        if variant == "sphere":
            return GeodesicSphere(space, float(doc["radius"]), doc.get("center"))
        if variant == "polyline":
            return PolylineCurve(space, np.asarray(doc["vertices"], dtype=float), bool(doc.get("closed", True)))
        if variant == "revolution":
            return RevolutionSurface(space, np.asarray(doc["profile"], dtype=float), bool(doc.get("closed", False)))
    except KeyError as exc:
        raise DomainError(f"submanifold document lacks {exc}") from exc
    raise DomainError(f"unknown submanifold variant {variant!r}")


def write_json(doc, path) -> None:
    """Write JSON with sorted keys so equal content gives equal bytes."""
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True, allow_nan=True) + "\n")


def save_submanifold(S: Submanifold, path) -> None:
    write_json(submanifold_to_json(S), path)


def load_submanifold(path) -> Submanifold:
    return submanifold_from_json(json.loads(Path(path).read_text()))


def entropy_result_to_json(r: EntropyResult) -> dict:
    return {
        "value": r.value,
        "argmax": {"coords": np.asarray(r.argmax.x0).tolist(), "tau": r.argmax.tau,
                   "chart_coords": list(r.chart_coords)},
        "converged": r.converged,
        "evaluations": r.evaluations,
        "error": r.error,
    }


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return repr(v) if math.isfinite(v) else str(v)
    if isinstance(v, (list, tuple, np.ndarray)):
        return " ".join(_cell(x) for x in np.ravel(v))
    return str(v)


def write_csv(rows, path, columns=None) -> None:
    """Write dict rows; floats use ``repr`` so the output is byte-stable."""
    rows = list(rows)
    if columns is None:
        columns = list(rows[0].keys()) if rows else []
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_cell(row.get(c, "")) for c in columns])


def write_search_trace_csv(r: EntropyResult, path) -> None:
    rows = [{"index": i, "chart_coords": list(y), "tau": tau, "F": v}
            for i, (y, tau, v) in enumerate(r.search_trace)]
    write_csv(rows, path, ["index", "chart_coords", "tau", "F"])


def write_trace_jsonl(trace: FlowTrace, path) -> None:
    """One line per state: ``{t, submanifold, diagnostics}``."""
    diag = {d["t"]: d for d in trace.diagnostics}
    with open(path, "w") as fh:
        for t, S in trace.states:
            if isinstance(S, Submanifold):
                sub = submanifold_to_json(S)
            else:
                sub = None
            line = {"t": t, "submanifold": sub, "diagnostics": diag.get(t, {})}
            fh.write(json.dumps(line, sort_keys=True) + "\n")


def read_trace_jsonl(path) -> list:
    """States ``(t, submanifold)`` of a trace file; empty states come back as ``None``."""
    out = []
    for line in Path(path).read_text().splitlines():
        doc = json.loads(line)
        sub = doc.get("submanifold")
        out.append((doc["t"], submanifold_from_json(sub) if sub else None))
    return out
