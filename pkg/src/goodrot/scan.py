"""Exhaustive search for grid points with a small defect.

For each y in 0..floor(sqrt((2**(2p) + k_max) / 2)) the admissible x are
the integers with |x**2 + y**2 - 2**(2p)| <= k_max, i.e. the x between
ceil(sqrt(t - k_max)) and floor(sqrt(t + k_max)) with t = 2**(2p) - y**2.
Both bounds are exact integer square roots, so the cost is O(2**p)
whatever k_max is.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable

import numpy as np

from .grid import GridPoint, check_precision, defect, theta_of

__all__ = [
    "MAX_SCAN_PRECISION",
    "TractabilityError",
    "ScanEntry",
    "ScanResult",
    "scan_cost",
    "scan",
    "RULES",
    "nearest_entry",
    "nearest_good_angle",
    "workers_from_env",
]

MAX_SCAN_PRECISION = 34
# Largest p whose squares still fit int64 in the vectorized kernel.
_NUMPY_MAX_P = 31
_CHUNK = 1 << 20


class TractabilityError(RuntimeError):
    """Raised when a scan would take too long to be run by accident."""


@dataclass(frozen=True)
class ScanEntry:
    point: GridPoint
    k: int
    theta: float

    @property
    def x(self) -> int:
        return self.point.x

    @property
    def y(self) -> int:
        return self.point.y


@dataclass(frozen=True)
class ScanResult:
    p: int
    k_max: int
    entries: tuple[ScanEntry, ...]

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def points(self) -> list[tuple[int, int]]:
        return [(e.x, e.y) for e in self.entries]


def workers_from_env(default: int = 1) -> int:
    try:
        return max(1, int(os.environ.get("GOODROT_WORKERS", default)))
    except ValueError:
        return default


def scan_cost(p: int) -> int:
    """Number of y values visited: about 2**p / sqrt(2)."""
    return math.isqrt(1 << (2 * p - 1)) + 1


def _isqrt_vec(n: np.ndarray) -> np.ndarray:
    """floor(sqrt(n)) for a non-negative int64 array, exact."""
    r = np.floor(np.sqrt(n.astype(np.float64))).astype(np.int64)
    # the float estimate is off by at most one or two near 2**62
    for _ in range(2):
        r = np.where(r * r > n, r - 1, r)
        r = np.where((r + 1) * (r + 1) <= n, r + 1, r)
    return r


def _scan_numpy(p: int, k_max: int, y0: int, y1: int) -> list[tuple[int, int]]:
    full = 1 << (2 * p)
    top = 1 << p
    out = []
    for a in range(y0, y1, _CHUNK):
        y = np.arange(a, min(a + _CHUNK, y1), dtype=np.int64)
        t = full - y * y
        hi = _isqrt_vec(t + k_max)
        low_arg = np.maximum(t - k_max, 0)
        lo = _isqrt_vec(low_arg)
        lo = np.where(lo * lo < low_arg, lo + 1, lo)
        lo = np.maximum(lo, y)
        hi = np.minimum(hi, top)
        width = hi - lo
        if width.size == 0 or width.max() < 0:
            continue
        for d in range(int(width.max()) + 1):
            sel = width >= d
            for xv, yv in zip((lo[sel] + d).tolist(), y[sel].tolist()):
                out.append((xv, yv))
    return out


def _scan_python(p: int, k_max: int, y0: int, y1: int) -> list[tuple[int, int]]:
    full = 1 << (2 * p)
    top = 1 << p
    out = []
    for y in range(y0, y1):
        t = full - y * y
        hi = min(math.isqrt(t + k_max), top)
        low_arg = max(t - k_max, 0)
        lo = math.isqrt(low_arg)
        if lo * lo < low_arg:
            lo += 1
        for x in range(max(lo, y), hi + 1):
            out.append((x, y))
    return out


def _scan_range(args):
    p, k_max, y0, y1 = args
    if p <= _NUMPY_MAX_P:
        return _scan_numpy(p, k_max, y0, y1)
    return _scan_python(p, k_max, y0, y1)


def _split_range(n: int, parts: int) -> list[tuple[int, int]]:
    bounds = [n * i // parts for i in range(parts + 1)]
    return [(bounds[i], bounds[i + 1]) for i in range(parts) if bounds[i] < bounds[i + 1]]


def scan(p: int, k_max: int, *, octant_only: bool = True, workers: int | None = None,
         allow_intractable: bool = False) -> ScanResult:
    """All grid points at precision p with |x**2 + y**2 - 2**(2p)| <= k_max.

    With octant_only the result holds the points with 0 <= y <= x, sorted by
    increasing angle; otherwise all eight symmetric images are included
    (sorted by angle in (-pi, pi]). Output does not depend on ``workers``.
    """
    p = check_precision(p)
    if k_max < 0 or k_max >= (1 << p):
        raise ValueError(f"k_max must satisfy 0 <= k_max < 2**p, got {k_max}")
    if p > MAX_SCAN_PRECISION and not allow_intractable:
        raise TractabilityError(
            f"scan at p={p} needs ~{scan_cost(p):.3g} iterations; force it explicitly to run anyway"
        )
    if workers is None:
        workers = workers_from_env()

    y_end = math.isqrt(((1 << (2 * p)) + k_max) // 2) + 1
    ranges = [(p, k_max, a, b) for a, b in _split_range(y_end, max(1, workers) * 4)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            chunks = list(ex.map(_scan_range, ranges))
    else:
        chunks = [_scan_range(r) for r in ranges]

    pts = {xy for chunk in chunks for xy in chunk}
    if not octant_only:
        pts = {
            (sx * a, sy * b)
            for x, y in pts
            for a, b in ((x, y), (y, x))
            for sx in (1, -1)
            for sy in (1, -1)
        }
    entries = []
    for x, y in pts:
        g = GridPoint(x, y, p)
        k = defect(g)
        if abs(k) > k_max:
            raise ArithmeticError(f"scan produced {g} with defect {k} outside the window")
        entries.append(ScanEntry(g, k, theta_of(g)))
    entries.sort(key=lambda e: (e.theta, e.y))
    return ScanResult(p, k_max, tuple(entries))


@lru_cache(maxsize=16)
def _cached_scan(p: int, k_max: int) -> ScanResult:
    return scan(p, k_max)


RULES = ("nearest", "at_least")


def nearest_entry(entries: Iterable, theta_target: float, rule: str = "nearest"):
    """Entry closest in angle to theta_target; ties go to smaller |k|, then smaller y.

    With rule="at_least" only entries with theta >= theta_target compete,
    so the result is the first angle at or above the target. Entries need ``theta``, ``k`` and ``point`` attributes
    (scan entries and family catalog entries both qualify).
    """
    if rule not in RULES:
        raise ValueError(f"unknown rule {rule!r}; choose from {RULES}")
    best = None
    best_key = None
    for e in entries:
        if rule == "at_least" and e.theta < theta_target:
            continue
        key = (abs(e.theta - theta_target), abs(e.k), e.point.y)
        if best_key is None or key < best_key:
            best, best_key = e, key
    if best is None:
        raise ValueError("no candidate angles to choose from")
    return best


def nearest_good_angle(p: int, k_max: int, theta_target: float,
                       rule: str = "nearest") -> tuple[GridPoint, int]:
    """Scan (cached) and return the grid point whose angle is closest to the target."""
    if not 0.0 <= theta_target <= math.pi / 4:
        raise ValueError("theta_target must lie in [0, pi/4]")
    e = nearest_entry(_cached_scan(p, k_max).entries, theta_target, rule)
    return e.point, e.k
