"""Good rotations for wide mantissas from the circles x**2 + y**2 = 2**(2n) + 1.

A solution (x', y') of x'**2 + y'**2 = 2**(2n) + 1 scaled by 2**q gives a
grid point at precision p = n + q with defect exactly 2**(2q). All prime
factors of 2**(2n) + 1 are 1 mod 4, so these circles carry many lattice
points and their angles cover the circle densely for n around 45..51.
"""
from __future__ import annotations

import csv
import io
import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import TextIO

import numpy as np

from .grid import GridPoint, check_precision, defect, theta_of, to_sin_cos
from .numtheory import (
    Factorization,
    GaussianInt,
    classify_quadruplet,
    count_quadruplets,
    enumerate_solutions,
    factorize,
    gaussian_root,
)

__all__ = [
    "MAX_FAMILY_N",
    "CATALOG_HEADER",
    "CATALOG_CAVEAT",
    "FamilyEntry",
    "AngleCatalog",
    "family_norm",
    "generate_family",
    "component_angles",
    "max_circle_gap",
    "TEMPLATES",
    "emit_constants",
    "parse_constants",
    "write_catalog_csv",
    "read_catalog_csv",
]

MAX_FAMILY_N = 62
CATALOG_HEADER = ("x", "y", "p", "n", "k", "theta")
CATALOG_CAVEAT = "# theta is rounded metadata; never compute c, s from it - use x / 2**p and y / 2**p"


def family_norm(n: int) -> int:
    return (1 << (2 * n)) + 1


@dataclass(frozen=True)
class FamilyEntry:
    base: tuple[int, int]
    point: GridPoint
    n: int
    theta: float

    @property
    def k(self) -> int:
        return 1 << (2 * (self.point.p - self.n))


@dataclass(frozen=True)
class AngleCatalog:
    n: int
    p: int
    factorization: Factorization
    quadruplets: int
    entries: tuple[FamilyEntry, ...]
    max_gap: float

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def bases(self) -> set[tuple[int, int]]:
        return {e.base for e in self.entries}


def max_circle_gap(octant_thetas) -> float:
    """Largest gap between consecutive angles over the whole circle.

    The octant angles are unfolded by the reflection theta -> pi/2 - theta
    and by the quarter-turn rotations.
    """
    t = np.asarray(octant_thetas, dtype=float)
    quarter = np.concatenate([t, np.pi / 2 - t])
    full = np.concatenate([quarter + j * np.pi / 2 for j in range(4)])
    full = np.unique(np.mod(full, 2 * np.pi))
    if full.size == 0:
        return 2 * math.pi
    gaps = np.diff(np.append(full, full[0] + 2 * np.pi))
    return float(gaps.max())


def generate_family(n: int, p: int | None = None) -> AngleCatalog:
    """Octant catalog of x**2 + y**2 = 2**(2p) + 2**(2(p-n)) at precision p (default p = n)."""
    if not 1 <= n <= MAX_FAMILY_N:
        raise ValueError(f"n must lie in [1, {MAX_FAMILY_N}], got {n}")
    p = n if p is None else check_precision(p)
    if p < n:
        raise ValueError(f"precision p={p} must be at least n={n}")
    q = p - n
    S = family_norm(n)
    f = factorize(S)
    if any(e % 2 for _, e in f.g_list):
        raise ArithmeticError(f"2**{2 * n}+1 has a prime 3 mod 4 to an odd power: {f}")
    sols = enumerate_solutions(f)
    k_expected = 1 << (2 * q)

    entries = []
    for x, y in sols.octant():
        kind = classify_quadruplet(GaussianInt(x, y))
        if kind != "generic":
            raise ArithmeticError(f"({x}, {y}) on circle {S} is {kind}; the family has none")
        g = GridPoint(x << q, y << q, p)
        if defect(g) != k_expected:
            raise ArithmeticError(f"{g} has defect {defect(g)}, expected {k_expected}")
        entries.append(FamilyEntry((x, y), g, n, theta_of(g)))

    if len(entries) * 2 != sols.quadruplet_count:
        raise ArithmeticError("octant count disagrees with the quadruplet count")
    return AngleCatalog(
        n=n,
        p=p,
        factorization=f,
        quadruplets=sols.quadruplet_count,
        entries=tuple(entries),
        max_gap=max_circle_gap([e.theta for e in entries]),
    )


def component_angles(n: int) -> list[tuple[int, GaussianInt, float]]:
    """(prime, Gaussian root, angle) for each prime factor of 2**(2n)+1, ascending primes.

    The angle of any catalog solution is a signed sum of these angles
    (each prime of exponent beta contributes beta terms).
    """
    f = factorize(family_norm(n))
    out = []
    for prime, _ in f.f_list:
        z = gaussian_root(prime)
        out.append((prime, z, math.atan2(z.im, z.re)))
    return out


# --- source-embeddable constants ---

TEMPLATES = ("generic", "hex", "rational")


def _hex_text(v: int, p: int) -> str:
    sign = "-" if v < 0 else ""
    return f"{sign}0x{abs(v):x}p-{p}"


def emit_constants(g: GridPoint, template: str = "generic", names: tuple[str, str] = ("c", "s")) -> str:
    """Exact source text for c = x / 2**p and s = y / 2**p.

    generic   ``c = 14842141. / 2. ** 24`` (integer literal divided by a power of two)
    hex       ``c = 0xe2791dp-24`` (C99 / Python float.fromhex syntax)
    rational  ``x/2**p, y/2**p`` with the denominator written out in decimal
    """
    if template == "generic":
        return "".join(f"{name} = {v}. / 2. ** {g.p}\n" for name, v in zip(names, (g.x, g.y)))
    if template == "hex":
        return "".join(f"{name} = {_hex_text(v, g.p)}\n" for name, v in zip(names, (g.x, g.y)))
    if template == "rational":
        d = 1 << g.p
        return f"{g.x}/{d}, {g.y}/{d}\n"
    raise ValueError(f"unknown template {template!r}; choose from {TEMPLATES}")


_GENERIC_RE = re.compile(r"(-?\d+)\. / 2\. \*\* (\d+)")
_HEX_RE = re.compile(r"-?0x[0-9a-f]+p-\d+")
_RATIONAL_RE = re.compile(r"(-?\d+)/(\d+)")


def parse_constants(text: str, template: str = "generic") -> tuple[float, float]:
    """Evaluate emitted constants the way a compiler would (round to nearest double)."""
    if template == "generic":
        vals = [float(int(a)) / 2.0 ** int(b) for a, b in _GENERIC_RE.findall(text)]
    elif template == "hex":
        vals = [float.fromhex(m) for m in _HEX_RE.findall(text)]
    elif template == "rational":
        vals = [float(Fraction(int(a), int(b))) for a, b in _RATIONAL_RE.findall(text)]
    else:
        raise ValueError(f"unknown template {template!r}")
    if len(vals) != 2:
        raise ValueError(f"expected two constants in {text!r}")
    return vals[0], vals[1]


# --- CSV persistence ---


def _fmt_theta(t: float) -> str:
    return f"{t:.17g}"


def write_catalog_csv(cat: AngleCatalog, fh: TextIO) -> None:
    fh.write(CATALOG_CAVEAT + "\n")
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(CATALOG_HEADER)
    for e in cat.entries:
        g = e.point
        w.writerow([g.x, g.y, g.p, e.n, e.k, _fmt_theta(e.theta)])


def catalog_csv_text(cat: AngleCatalog) -> str:
    buf = io.StringIO()
    write_catalog_csv(cat, buf)
    return buf.getvalue()


def read_catalog_csv(fh: TextIO) -> list[FamilyEntry]:
    rows = [line for line in fh if not line.startswith("#")]
    reader = csv.DictReader(rows)
    if tuple(reader.fieldnames or ()) != CATALOG_HEADER:
        raise ValueError(f"unexpected catalog header {reader.fieldnames}")
    out = []
    for r in reader:
        g = GridPoint(int(r["x"]), int(r["y"]), int(r["p"]))
        n = int(r["n"])
        q = g.p - n
        e = FamilyEntry((g.x >> q, g.y >> q), g, n, float(r["theta"]))
        if int(r["k"]) != e.k or defect(g) != e.k:
            raise ValueError(f"row {r} fails the exact defect check")
        out.append(e)
    return out
