"""Per-trial error records and their CSV / JSON serialization."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Optional

from ..se3 import RigidTransform
from .pipeline import pose_error

COLUMNS = (
    "experiment",
    "trial",
    "distance_m",
    "yaw_rad",
    "err_x_m",
    "err_y_m",
    "err_z_m",
    "lateral_err_m",
    "rot_err_rad",
    "refined",
    "filtered",
    "dropped",
)
_FLOATS = {"distance_m", "yaw_rad", "err_x_m", "err_y_m", "err_z_m", "lateral_err_m", "rot_err_rad"}
_BOOLS = {"refined", "filtered", "dropped"}
NAN = math.nan


@dataclass(frozen=True)
class ErrorRecord:
    """One scored trial; errors are estimate minus truth in the robot frame.

    ``truth`` and ``estimate`` ride along for in-process analysis and are not
    serialized. A dropped trial with no pose to score carries NaN errors.
    """

    experiment: str
    trial: int
    distance_m: float
    yaw_rad: float
    err_x_m: float = NAN
    err_y_m: float = NAN
    err_z_m: float = NAN
    lateral_err_m: float = NAN
    rot_err_rad: float = NAN
    refined: bool = False
    filtered: bool = False
    dropped: bool = False
    truth: Optional[RigidTransform] = field(default=None, compare=False, repr=False)
    estimate: Optional[RigidTransform] = field(default=None, compare=False, repr=False)

    @classmethod
    def scored(cls, experiment: str, trial: int, distance: float, yaw: float,
               estimate: Optional[RigidTransform], truth: RigidTransform, *,
               refined: bool = False, filtered: bool = False, dropped: bool = False) -> ErrorRecord:
        if estimate is None:
            return cls(experiment, trial, distance, yaw, refined=refined, filtered=filtered,
                       dropped=True, truth=truth)
        e = pose_error(estimate, truth)
        return cls(experiment, trial, float(distance), float(yaw), float(e.err_x), float(e.err_y),
                   float(e.err_z), float(e.lateral), float(e.rotation), refined, filtered, dropped,
                   truth, estimate)

    def row(self) -> dict:
        return {name: getattr(self, name) for name in COLUMNS}


def sort_records(records: Iterable[ErrorRecord]) -> list[ErrorRecord]:
    """Report order: by experiment, then trial; raw before filtered on ties."""
    return sorted(records, key=lambda r: (r.experiment, r.trial, r.filtered))


def _fmt(name: str, value) -> str:
    if name in _FLOATS:
        return format(float(value), ".17g")
    if name in _BOOLS:
        return "true" if value else "false"
    return str(value)


def records_to_csv(records: Iterable[ErrorRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COLUMNS)
    for r in sort_records(records):
        writer.writerow([_fmt(name, getattr(r, name)) for name in COLUMNS])
    return buf.getvalue()


def _json_value(name: str, value):
    if name in _FLOATS:
        value = float(value)
        return None if math.isnan(value) else value
    return value


def records_to_json(records: Iterable[ErrorRecord]) -> str:
    rows = [{name: _json_value(name, getattr(r, name)) for name in COLUMNS} for r in sort_records(records)]
    return json.dumps({"columns": list(COLUMNS), "records": rows}, indent=2, allow_nan=False) + "\n"


def write_results(records: Iterable[ErrorRecord], path: str | Path, fmt: str = "csv") -> Path:
    """Write records sorted by (experiment, trial); raises OSError on I/O failure."""
    if fmt == "csv":
        text = records_to_csv(records)
    elif fmt == "json":
        text = records_to_json(records)
    else:
        raise ValueError(f"unknown format {fmt!r}")
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    return path


def _parse(name: str, text: str):
    if name == "trial":
        return int(text)
    if name in _FLOATS:
        return float(text)
    if name in _BOOLS:
        if text not in ("true", "false"):
            raise ValueError(f"bad boolean {text!r} in column {name}")
        return text == "true"
    return text


def read_results(path: str | Path) -> list[ErrorRecord]:
    """Inverse of ``write_results`` for either format (chosen by content)."""
    text = Path(path).read_text(encoding="utf-8")
    if text.lstrip().startswith("{"):
        out = []
        for row in json.loads(text)["records"]:
            vals = {k: (NAN if k in _FLOATS and v is None else v) for k, v in row.items()}
            out.append(ErrorRecord(**vals))
        return out
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != COLUMNS:
        raise ValueError("CSV header does not match the record columns")
    return [ErrorRecord(**{k: _parse(k, v) for k, v in row.items()}) for row in reader]


def results_schema() -> dict:
    return json.loads(resources.files("indirect_pose.data").joinpath("results.schema.json").read_text())

