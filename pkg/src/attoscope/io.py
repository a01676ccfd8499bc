"""Trace CSV, metadata JSON and progress-ledger persistence."""
from __future__ import annotations

import csv
import json
import math
import os

import numpy as np

from .errors import ConfigurationError

TRACE_SCHEMA = "attoscope.trace/1"
TRACE_COLUMNS = ["delay_fs", "phase_rad", "yield"]


class SchemaError(ConfigurationError):
    pass


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def write_trace_csv(trace, path):
    """Rows ordered delay-major, phase-minor; 17 significant digits."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"# schema: {TRACE_SCHEMA}"])
        w.writerow(TRACE_COLUMNS)
        for i, d in enumerate(trace.delays):
            for j, p in enumerate(trace.phases):
                w.writerow([_fmt(d), _fmt(p), _fmt(trace.yields[i, j])])


def read_trace_csv(path):
    from .propagator import IonizationTrace

    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows:
        raise SchemaError(f"{path}: empty trace file")
    if rows[0][0].startswith("#"):
        tag = rows[0][0].lstrip("#").strip()
        if tag != f"schema: {TRACE_SCHEMA}":
            raise SchemaError(f"{path}: unsupported schema tag {tag!r}; expected {TRACE_SCHEMA!r}")
        rows = rows[1:]
    if not rows:
        raise SchemaError(f"{path}: missing header row")
    header = [h.strip() for h in rows[0]]
    missing = [c for c in TRACE_COLUMNS if c not in header]
    extra = [c for c in header if c not in TRACE_COLUMNS]
    if missing or extra:
        raise SchemaError(f"{path}: column mismatch; missing {missing}, unexpected {extra}")
    data = rows[1:]
    if not data:
        raise SchemaError(f"{path}: no data rows")
    idx = [header.index(c) for c in TRACE_COLUMNS]
    try:
        arr = np.array([[float(r[i]) for i in idx] for r in data])
    except (ValueError, IndexError) as exc:
        raise SchemaError(f"{path}: malformed data row ({exc})") from None
    delays = np.unique(arr[:, 0])
    phases = np.unique(arr[:, 1])
    if arr.shape[0] != delays.size * phases.size:
        raise SchemaError(f"{path}: rows do not form a complete delay x phase grid")
    yields = np.full((delays.size, phases.size), np.nan)
    yields[np.searchsorted(delays, arr[:, 0]), np.searchsorted(phases, arr[:, 1])] = arr[:, 2]
    if np.isnan(yields).any():
        raise SchemaError(f"{path}: duplicate (delay, phase) rows")
    return IonizationTrace(delays, phases, yields)


def write_json(data, path):
    with open(path, "w") as fh:
        json.dump(_jsonable(data), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    return obj


def write_columns_csv(path, schema, names, columns):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"# schema: {schema}"])
        w.writerow(names)
        for row in zip(*columns):
            w.writerow([_fmt(v) for v in row])


class ProgressLedger:
    """Append-only record of completed (delay, phase) points.

    One JSON object per line; floats are stored with ``repr`` precision so a
    resumed scan reproduces the uninterrupted output exactly.
    """

    def __init__(self, path):
        self.path = path

    def load(self) -> dict:
        done = {}
        if not os.path.exists(self.path):
            return done
        with open(self.path) as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                try:
                    rec = json.loads(line)
                except json.JSONDecodeError:
                    break  # torn final line from an interrupted write
                done[(float(rec["delay_fs"]), float(rec["phase_rad"]))] = float(rec["yield"])
        return done

    def append(self, records):
        with open(self.path, "a") as fh:
            for d, p, y in records:
                fh.write(json.dumps({"delay_fs": d, "phase_rad": p, "yield": y}) + "\n")
            fh.flush()
            os.fsync(fh.fileno())
