"""CSV and JSON writers with fixed formatting (17 significant digits, sorted keys)."""
from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Sequence

import numpy as np


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def write_table(path: Path, header: Sequence[str], blocks: Sequence[Sequence[np.ndarray]]) -> Path:
    """Write rows of equal-length column blocks under a single header line."""
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for cols in blocks:
            cols = [np.broadcast_to(np.asarray(c, dtype=float), np.shape(cols[-1])) for c in cols]
            for row in zip(*cols):
                fh.write(",".join(_fmt(v) for v in row) + "\n")
    return path


def eulerian_csv(path, traj, to_raw=lambda r: r):
    blocks = [(t, s.centers, to_raw(s.values)) for t, s in zip(traj.times, traj.snapshots)]
    return write_table(path, ("t", "x", "rho"), blocks)


def temple_csv(path, traj):
    blocks = [(t, s.eta.centers, s.eta.values, s.v.values) for t, s in zip(traj.times, traj.states)]
    return write_table(path, ("t", "x", "eta", "v"), blocks)


def flowmap_csv(path, maps):
    return write_table(path, ("t", "x", "gamma"), [(m.t, m.x, m.gamma) for m in maps])


def system_csv(path, traj):
    blocks = [(t, s.eta.centers, s.eta.values, s.w.values, s.v.values)
              for t, s in zip(traj.times, traj.states)]
    return write_table(path, ("t", "x", "eta", "w", "v"), blocks)


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else ("inf" if v > 0 else "-inf" if v < 0 else "nan")
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(path, payload) -> Path:
    path = Path(path)
    path.write_text(json.dumps(_clean(payload), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path
