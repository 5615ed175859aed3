"""Serialization: matrices as headerless CSV / JSON arrays, artifact tables
as headed CSV, and deterministic JSON documents with provenance metadata.

Reals in CSV carry 17 significant digits (lossless round trip); JSON uses
Python's shortest-round-trip float encoding, which is also lossless.
"""

from __future__ import annotations

import io as _io
import json
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ParameterDomainError

FLOAT_FMT = "%.17g"


def format_real(x: float) -> str:
    return FLOAT_FMT % float(x)


def matrix_to_csv(matrix: np.ndarray) -> str:
    """Row-major, headerless CSV."""
    a = np.atleast_2d(np.asarray(matrix, dtype=float))
    lines = [",".join(format_real(x) for x in row) for row in a]
    return "\n".join(lines) + "\n"


def matrix_from_csv(text: str) -> np.ndarray:
    rows = [
        [float(cell) for cell in line.split(",")]
        for line in text.strip().splitlines()
        if line.strip()
    ]
    if not rows:
        raise ParameterDomainError("empty CSV matrix")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise ParameterDomainError("ragged CSV matrix")
    return np.asarray(rows, dtype=float)


def load_matrix(path: str | Path) -> np.ndarray:
    """Matrix from a .csv (headerless) or .json (arrays-of-arrays) file."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix.lower() == ".json":
        return np.asarray(json.loads(text), dtype=float)
    return matrix_from_csv(text)


def save_matrix(path: str | Path, matrix: np.ndarray) -> None:
    path = Path(path)
    if path.suffix.lower() == ".json":
        path.write_text(dumps(np.asarray(matrix, float).tolist()) + "\n", encoding="utf-8")
    else:
        path.write_text(matrix_to_csv(matrix), encoding="utf-8")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    return obj


def dumps(obj) -> str:
    """Deterministic JSON: sorted keys, fixed separators, no whitespace drift."""
    return json.dumps(_jsonable(obj), sort_keys=True, separators=(",", ":"), allow_nan=False)


def provenance(command: str, seed=None, reps=None, **extra) -> dict:
    """Metadata block attached to every numeric artifact.

    Deliberately excludes timestamps so identical invocations produce
    byte-identical files.
    """
    meta = {"command": command, "version": __version__}
    if seed is not None:
        meta["seed"] = int(seed)
    if reps is not None:
        meta["reps"] = int(reps)
    meta.update(extra)
    return meta


def artifact_json(kind: str, meta: dict, payload: dict) -> str:
    doc = {"kind": kind, "meta": meta, **payload}
    return dumps(doc) + "\n"


def artifact_csv(meta: dict, header: list[str], rows) -> str:
    """Headed CSV with provenance as leading comment lines."""
    buf = _io.StringIO()
    for key in sorted(meta):
        buf.write(f"# {key}={meta[key]}\n")
    buf.write(",".join(header) + "\n")
    for row in rows:
        cells = [
            format_real(x) if isinstance(x, (float, np.floating)) else str(x)
            for x in row
        ]
        buf.write(",".join(cells) + "\n")
    return buf.getvalue()
