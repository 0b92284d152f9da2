"""Trajectory and table writers.

CSV columns: ``t, energy, max_abs_K, min_r, max_r, h_used, lambda1``
(``lambda1`` is empty on samples where it was not computed). Floats are
written with ``%.17g`` so identical runs give identical bytes.

JSON document (``schema_version`` 1)::

    {"schema_version": 1, "termination": str, "message": str,
     "fitted_rate": float | null, "rejected_steps": int,
     "ceiling_exceeded": int, "target": [float],
     "samples": [{"t", "u", "K", "energy", "h_used", "lambda1"}]}
"""

from __future__ import annotations

import csv
import json

import numpy as np

from .errors import FileError, ParseError

SCHEMA_VERSION = 1
CSV_COLUMNS = ("t", "energy", "max_abs_K", "min_r", "max_r", "h_used", "lambda1")


def _g(x):
    return "" if x is None else format(float(x), ".17g")


def trajectory_rows(traj):
    for s in traj.samples:
        r = s.r
        dev = np.abs(s.K - traj.target)
        yield (s.t, s.energy, dev.max(), r.min(), r.max(), s.h_used, s.lambda1)


def write_trajectory_csv(traj, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for row in trajectory_rows(traj):
            w.writerow([_g(v) for v in row])


def trajectory_document(traj) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "termination": traj.termination.value,
        "message": traj.message,
        "fitted_rate": traj.fitted_rate,
        "rejected_steps": traj.rejected_steps,
        "ceiling_exceeded": traj.ceiling_exceeded,
        "target": traj.target.tolist(),
        "samples": [
            {
                "t": s.t,
                "u": s.u.tolist(),
                "K": s.K.tolist(),
                "energy": s.energy,
                "h_used": s.h_used,
                "lambda1": s.lambda1,
            }
            for s in traj.samples
        ],
    }


def write_trajectory_json(traj, path):
    with open(path, "w") as fh:
        json.dump(trajectory_document(traj), fh, indent=1)
        fh.write("\n")


def read_trajectory_json(path) -> dict:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise FileError(f"cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from None
    if not isinstance(doc, dict) or doc.get("schema_version") != SCHEMA_VERSION:
        version = doc.get("schema_version") if isinstance(doc, dict) else None
        raise ParseError(f"{path}: unsupported trajectory schema {version!r}")
    return doc


def write_table(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_g(v) if isinstance(v, (float, np.floating)) else v for v in row])
