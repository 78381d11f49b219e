"""Fixed-size lattice of representable cosine/sine pairs.

A grid point (x, y) at precision p stands for c = x * 2**-p and s = y * 2**-p.
Every such value is exactly representable in a binary float with at least p
mantissa bits, so the defect k = x**2 + y**2 - 2**(2p) of the pair is known
exactly and fixes the per-step radial growth of the rotation map.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

__all__ = [
    "MIN_PRECISION",
    "MAX_PRECISION",
    "SINGLE",
    "DOUBLE",
    "GridPoint",
    "check_precision",
    "to_sin_cos",
    "defect",
    "theta_of",
    "symmetries",
    "octant_form",
]

MIN_PRECISION = 1
MAX_PRECISION = 63
SINGLE = 24
DOUBLE = 53


def check_precision(p: int) -> int:
    if not isinstance(p, (int, np.integer)) or isinstance(p, bool):
        raise TypeError(f"precision must be an integer, got {p!r}")
    if not MIN_PRECISION <= p <= MAX_PRECISION:
        raise ValueError(f"precision must lie in [{MIN_PRECISION}, {MAX_PRECISION}], got {p}")
    return int(p)


@dataclass(frozen=True, order=True)
class GridPoint:
    x: int
    y: int
    p: int

    def __post_init__(self):
        check_precision(self.p)
        scale = 1 << self.p
        if abs(self.x) > scale or abs(self.y) > scale:
            raise ValueError(f"|x|, |y| must not exceed 2**{self.p}: got ({self.x}, {self.y})")

    @property
    def k(self) -> int:
        return defect(self)

    def scaled(self, q: int) -> "GridPoint":
        """Same (c, s) values expressed at precision p + q."""
        return GridPoint(self.x << q, self.y << q, self.p + q)

    def reduced(self) -> "GridPoint":
        """Smallest precision carrying the same (c, s) values."""
        x, y, p = self.x, self.y, self.p
        while p > MIN_PRECISION and x % 2 == 0 and y % 2 == 0:
            x, y, p = x // 2, y // 2, p - 1
        return GridPoint(x, y, p)

    def conj(self) -> "GridPoint":
        """The inverse rotation (c, -s)."""
        return GridPoint(self.x, -self.y, self.p)

    def as_fractions(self) -> tuple[Fraction, Fraction]:
        d = 1 << self.p
        return Fraction(self.x, d), Fraction(self.y, d)


def to_sin_cos(g: GridPoint, dtype=np.float64):
    """Exact (c, s) of a grid point as floats of the requested type.

    The integer is converted first and then scaled by the power of two
    2**-p; both steps are exact whenever the target format has at least as
    many mantissa bits as x and y need. An inexact conversion raises
    ValueError instead of rounding. float64 results come back as Python floats.
    """
    ftype = np.dtype(dtype).type
    out = []
    for v in (g.x, g.y):
        f = ftype(v)
        if int(f) != v:
            raise ValueError(f"{v} is not exactly representable as {np.dtype(dtype)}")
        out.append(np.ldexp(f, -g.p))
    if ftype is np.float64:
        return float(out[0]), float(out[1])
    return out[0], out[1]


def defect(g: GridPoint) -> int:
    """k = x**2 + y**2 - 2**(2p), in exact integer arithmetic."""
    return g.x * g.x + g.y * g.y - (1 << (2 * g.p))


def theta_of(g: GridPoint) -> float:
    """Approximate angle atan2(y, x). Display metadata only: never derive c, s from it."""
    if g.x == 0 and g.y == 0:
        raise ValueError("the origin has no angle")
    return math.atan2(g.y, g.x)


def symmetries(g: GridPoint) -> list[GridPoint]:
    """The distinct images of g under (x, y) -> (+-x, +-y), (+-y, +-x)."""
    seen = []
    for a, b in ((g.x, g.y), (g.y, g.x)):
        for sx in (1, -1):
            for sy in (1, -1):
                h = GridPoint(sx * a, sy * b, g.p)
                if h not in seen:
                    seen.append(h)
    return seen


def octant_form(g: GridPoint) -> GridPoint:
    """Representative with 0 <= y <= x."""
    a, b = sorted((abs(g.x), abs(g.y)))
    return GridPoint(b, a, g.p)
