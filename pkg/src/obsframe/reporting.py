"""Deterministic report rendering and atomic file output.

Identical inputs must produce byte-identical reports: keys are emitted in
construction order, floats use the shortest round-trip representation
(Python's repr), complex numbers are [re, im] pairs, and files are written
atomically with a fixed encoding and newline.
"""

from __future__ import annotations

import dataclasses
import json
import os
import tempfile

import numpy as np

# Verdict names mapped to both communities' vocabularies.
DICTIONARY = {
    "bessel_admissible": {
        "sampling_theory": "Bessel system",
        "control_theory": "admissible observation operator",
    },
    "complete_aob": {
        "sampling_theory": "complete system",
        "control_theory": "approximately observable (AOB)",
    },
    "frame_eob": {
        "sampling_theory": "frame / semi-continuous frame",
        "control_theory": "exactly observable (EOB)",
    },
    "grammian": {
        "sampling_theory": "frame operator",
        "control_theory": "observability Grammian",
    },
    "observability_matrix": {
        "sampling_theory": "analysis operator of the sampled family",
        "control_theory": "observability map",
    },
    "eco": {
        "sampling_theory": "synthesis operator onto the whole space",
        "control_theory": "exactly controllable (ECO)",
    },
    "aco": {
        "sampling_theory": "synthesis operator with dense range",
        "control_theory": "approximately controllable (ACO)",
    },
}


def jsonable(obj):
    """Recursively convert results into JSON-ready primitives."""
    if obj is None or isinstance(obj, (bool, int, str)):
        return obj
    if isinstance(obj, float):
        return obj
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.complexfloating,)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    return repr(obj)


def _flatten(obj, prefix="", out=None):
    if out is None:
        out = []
    if isinstance(obj, dict):
        for k, v in obj.items():
            _flatten(v, f"{prefix}{k}.", out)
        return out
    if isinstance(obj, list):
        out.append((prefix.rstrip("."), json.dumps(obj)))
        return out
    out.append((prefix.rstrip("."), obj))
    return out


def render_text(report: dict) -> str:
    lines = []
    for key, value in _flatten(jsonable(report)):
        if isinstance(value, float):
            value = repr(value)
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"


def render_tsv(report: dict) -> str:
    lines = []
    for key, value in _flatten(jsonable(report)):
        if isinstance(value, float):
            value = repr(value)
        lines.append(f"{key}\t{value}")
    return "\n".join(lines) + "\n"


def render_sweep_tsv(sweep) -> str:
    """One row per spacing: delta, c1, c2, c1_ref_gap, c2_ref_gap, verdict."""
    lines = ["delta\tc1\tc2\tc1_ref_gap\tc2_ref_gap\tverdict"]
    for row in sweep.rows:
        lines.append(
            "\t".join(
                [
                    repr(row.delta),
                    repr(row.c1),
                    repr(row.c2),
                    repr(row.c1_ref_gap),
                    repr(row.c2_ref_gap),
                    "frame" if row.is_frame else "not-a-frame",
                ]
            )
        )
    return "\n".join(lines) + "\n"


def render_report(report: dict, fmt: str, sweep=None) -> str:
    if fmt == "json":
        return json.dumps(jsonable(report), indent=2) + "\n"
    if fmt == "text":
        return render_text(report)
    if fmt == "tsv":
        if sweep is not None:
            return render_sweep_tsv(sweep)
        return render_tsv(report)
    raise ValueError(f"unknown format {fmt!r}")


def write_atomic(path, text: str) -> None:
    """Write text to path atomically (temp file + rename, LF newlines)."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".report-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
