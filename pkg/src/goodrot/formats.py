"""Text formats shared by the command line tools.

Integers are written exactly, floats with 17 significant digits so that
reading a file and writing it again gives the same bytes.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .grid import GridPoint, defect
from .scan import ScanEntry

__all__ = [
    "SCAN_HEADER",
    "DRIFT_HEADER",
    "ORBIT_HEADER",
    "fmt_float",
    "fmt_theta_human",
    "scan_csv",
    "scan_json",
    "scan_table",
    "read_scan_csv",
    "drift_csv",
    "read_drift_csv",
    "orbit_csv",
    "read_orbit_csv",
    "sha256_bytes",
    "sha256_file",
    "atomic_write",
]

SCAN_HEADER = ("x", "y", "theta", "k")
DRIFT_HEADER = ("step", "mean_err", "std_err")
ORBIT_HEADER = ("block_index", "mean_abs_rel_energy_error")


def fmt_float(v: float) -> str:
    return f"{float(v):.17g}"


def fmt_theta_human(v: float) -> str:
    return f"{v:.8f}"


def _rows_to_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _read_rows(text: str, header) -> list[list[str]]:
    reader = csv.reader(io.StringIO(text))
    got = next(reader, None)
    if tuple(got or ()) != tuple(header):
        raise ValueError(f"expected header {header}, got {got}")
    return [r for r in reader if r]


# --- scan tables ---


def scan_csv(entries) -> str:
    return _rows_to_csv(SCAN_HEADER, ([e.x, e.y, fmt_float(e.theta), e.k] for e in entries))


def scan_json(p: int, k_max: int, entries) -> str:
    doc = {
        "p": p,
        "k_max": k_max,
        "count": len(entries),
        "rows": [{"x": e.x, "y": e.y, "theta": fmt_float(e.theta), "k": e.k} for e in entries],
    }
    return json.dumps(doc, indent=1) + "\n"


def scan_table(entries) -> str:
    lines = [f"{'x':>22} {'y':>22} {'theta':>11} {'k':>6}"]
    for e in entries:
        lines.append(f"{e.x:>22} {e.y:>22} {fmt_theta_human(e.theta):>11} {e.k:>6}")
    return "\n".join(lines) + "\n"


def read_scan_csv(text: str, p: int) -> list[ScanEntry]:
    """Parse a scan CSV at precision p, re-checking every defect exactly."""
    out = []
    for x, y, theta, k in _read_rows(text, SCAN_HEADER):
        g = GridPoint(int(x), int(y), p)
        if defect(g) != int(k):
            raise ValueError(f"row ({x}, {y}) claims k={k}, exact defect is {defect(g)}")
        out.append(ScanEntry(g, int(k), float(theta)))
    return out


# --- drift and orbit series ---


def drift_csv(series) -> str:
    return _rows_to_csv(DRIFT_HEADER, ([s, fmt_float(m), fmt_float(d)] for s, m, d in series.rows()))


def read_drift_csv(text: str) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    rows = _read_rows(text, DRIFT_HEADER)
    steps = np.array([int(r[0]) for r in rows], dtype=np.int64)
    mean = np.array([float(r[1]) for r in rows])
    std = np.array([float(r[2]) for r in rows])
    return steps, mean, std


def orbit_csv(blocks) -> str:
    return _rows_to_csv(ORBIT_HEADER, ([i, fmt_float(b)] for i, b in enumerate(blocks)))


def read_orbit_csv(text: str) -> np.ndarray:
    rows = _read_rows(text, ORBIT_HEADER)
    if [int(r[0]) for r in rows] != list(range(len(rows))):
        raise ValueError("block_index must run 0, 1, 2, ...")
    return np.array([float(r[1]) for r in rows])


# --- files ---


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def sha256_file(path) -> str:
    return sha256_bytes(Path(path).read_bytes())


def atomic_write(path, text: str) -> str:
    """Write text through a temporary file in the same directory, then rename. Returns its sha256."""
    path = Path(path)
    data = text.encode("utf-8")
    fd, tmp = tempfile.mkstemp(dir=path.parent or Path("."), prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return sha256_bytes(data)
