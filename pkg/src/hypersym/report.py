"""Check reports and their JSON / CSV serialization."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np


@dataclass
class CheckReport:
    """Outcome of a hypothesis or conclusion check.

    ``witnesses`` holds the offending samples (points, measured values,
    residual) in grid-index order. A failed report always carries at least
    one witness.
    """

    name: str
    passed: bool
    witnesses: list = field(default_factory=list)
    residuals: list = field(default_factory=list)
    tolerance: float = 0.0
    samples: int = 0
    params: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    def __post_init__(self):
        if not self.passed and not self.witnesses:
            raise ValueError(f"failed report {self.name!r} without a witness")

    def __bool__(self):
        return self.passed

    def to_dict(self):
        return {
            "name": self.name,
            "pass": bool(self.passed),
            "witnesses": to_jsonable(self.witnesses),
            "residuals": to_jsonable(self.residuals),
            "tolerance": to_jsonable(self.tolerance),
            "samples": int(self.samples),
            "params": to_jsonable(self.params),
            "notes": list(self.notes),
        }


def to_jsonable(obj: Any):
    """Convert numpy containers and non-finite floats to plain JSON values.

    Finite floats keep Python's shortest round-trip repr; non-finite ones
    become the strings ``"inf"``, ``"-inf"`` and ``"nan"``.
    """
    if hasattr(obj, "to_dict"):
        return to_jsonable(obj.to_dict())
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isfinite(x):
            return x
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    if obj is None or isinstance(obj, str):
        return obj
    return str(obj)


def dumps(obj) -> str:
    return json.dumps(to_jsonable(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_json(path, obj):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(obj), encoding="utf-8")
    return path


def emit_plotdata(rows, path, header):
    """Write a labeled CSV with 17 significant digits per value."""
    rows = list(rows)
    if not rows:
        raise ValueError("no rows to write")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in np.ravel(row)])
    return path


def _fmt(v):
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return "%.17g" % float(v)
