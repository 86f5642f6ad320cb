"""Text serialization for states, Wigner grids, homodyne traces and shot tables.

JSON state schema::

    {"kind": "density" | "ket", "dims": [...], "labels": [...],
     "data": [[re, im], ...]}    # row-major

Wigner CSV: first row ``x`` followed by the x axis, second row ``p``
followed by the p axis, then one row per x value holding ``W(x_i, p_j)``.
"""

from __future__ import annotations

import csv
import io
import json
from typing import Any

import numpy as np

from .fock import DensityOperator, Ket, ModeLayout, MultiModeState
from .tomography import HomodyneTrace
from .wigner import WignerGrid

_FLOAT = "{:.17g}"


def _pairs(values: np.ndarray) -> list[list[float]]:
    flat = np.asarray(values, dtype=complex).ravel()
    return [[float(z.real), float(z.imag)] for z in flat]


def _from_pairs(data) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError("complex data must be a list of [re, im] pairs")
    return arr[:, 0] + 1j * arr[:, 1]


def state_to_dict(state: DensityOperator | Ket | MultiModeState, labels: list[str] | None = None) -> dict:
    if isinstance(state, DensityOperator):
        return {"kind": "density", "dims": [state.dim], "labels": labels or ["t"], "data": _pairs(state.matrix)}
    if isinstance(state, Ket):
        return {"kind": "ket", "dims": [state.dim], "labels": labels or ["m0"], "data": _pairs(state.amplitudes)}
    if isinstance(state, MultiModeState):
        return {
            "kind": "ket",
            "dims": list(state.layout.dims),
            "labels": list(state.layout.labels),
            "data": _pairs(state.amplitudes),
        }
    raise TypeError(f"cannot serialize {type(state).__name__}")


def state_from_dict(obj: dict) -> DensityOperator | Ket | MultiModeState:
    dims = [int(d) for d in obj["dims"]]
    data = _from_pairs(obj["data"])
    size = int(np.prod(dims))
    if obj["kind"] == "density":
        if data.size != size * size:
            raise ValueError("density data length does not match dims")
        return DensityOperator(data.reshape(size, size))
    if obj["kind"] == "ket":
        if data.size != size:
            raise ValueError("ket data length does not match dims")
        if len(dims) == 1:
            return Ket(data)
        return MultiModeState(ModeLayout(tuple(dims), tuple(obj["labels"])), data)
    raise ValueError(f"unknown state kind {obj['kind']!r}")


def dumps_json(obj: Any) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def wigner_to_csv(grid: WignerGrid) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x"] + [_FLOAT.format(v) for v in grid.x])
    w.writerow(["p"] + [_FLOAT.format(v) for v in grid.p])
    for row in grid.values:
        w.writerow([_FLOAT.format(v) for v in row])
    return buf.getvalue()


def wigner_from_csv(text: str) -> WignerGrid:
    rows = list(csv.reader(io.StringIO(text)))
    if len(rows) < 3 or rows[0][0] != "x" or rows[1][0] != "p":
        raise ValueError("Wigner CSV must start with 'x' and 'p' axis rows")
    x = np.array(rows[0][1:], dtype=float)
    p = np.array(rows[1][1:], dtype=float)
    values = np.array(rows[2:], dtype=float)
    return WignerGrid(x, p, values)


def wigner_to_dict(grid: WignerGrid) -> dict:
    return {"x": grid.x.tolist(), "p": grid.p.tolist(), "values": grid.values.tolist()}


def wigner_from_dict(obj: dict) -> WignerGrid:
    return WignerGrid(np.array(obj["x"]), np.array(obj["p"]), np.array(obj["values"]))


def trace_header(trace: HomodyneTrace) -> dict:
    return {
        "seed": trace.seed,
        "state": trace.state_descriptor,
        "convention": trace.convention,
        "n_phi": trace.n_phi,
        "n_shots": trace.n_shots,
    }


def trace_to_csv(trace: HomodyneTrace) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["angle_index", "phi", "shot_index", "outcome"])
    for k, (phi, outs) in enumerate(trace.records()):
        for i, v in enumerate(outs):
            w.writerow([k, _FLOAT.format(phi), i, _FLOAT.format(v)])
    return buf.getvalue()


def trace_from_csv(text: str, header: dict | None = None) -> HomodyneTrace:
    rows = list(csv.DictReader(io.StringIO(text)))
    if not rows:
        raise ValueError("empty homodyne CSV")
    n_phi = max(int(r["angle_index"]) for r in rows) + 1
    n_shots = max(int(r["shot_index"]) for r in rows) + 1
    phases = np.zeros(n_phi)
    out = np.full((n_phi, n_shots), np.nan)
    for r in rows:
        k = int(r["angle_index"])
        phases[k] = float(r["phi"])
        out[k, int(r["shot_index"])] = float(r["outcome"])
    if np.isnan(out).any():
        raise ValueError("homodyne CSV has missing shots")
    header = header or {}
    return HomodyneTrace(phases, out, header.get("seed"), header.get("state", ""), header.get("convention", "internal"))


def table_to_csv(columns: dict[str, np.ndarray]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    names = list(columns)
    w.writerow(names)
    cols = [np.asarray(columns[n]) for n in names]
    for row in zip(*cols):
        w.writerow([_FLOAT.format(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def table_from_csv(text: str) -> dict[str, np.ndarray]:
    rows = list(csv.reader(io.StringIO(text)))
    names = rows[0]
    data = np.array(rows[1:], dtype=float) if len(rows) > 1 else np.zeros((0, len(names)))
    return {n: data[:, k] for k, n in enumerate(names)}
