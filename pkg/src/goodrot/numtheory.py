"""Exact integer machinery for the circle equation x**2 + y**2 = S.

Factorization (trial division + Brent's variant of Pollard rho), primality,
Gaussian integers, square roots of -1 modulo a prime, and the complete
enumeration of lattice points on a circle of integer squared radius.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import product
from typing import Callable, Iterable

__all__ = [
    "MAX_NORM",
    "Factorization",
    "GaussianInt",
    "SolutionSet",
    "is_prime",
    "factorize",
    "count_quadruplets",
    "sqrt_minus_one",
    "gaussian_root",
    "enumerate_solutions",
    "classify_quadruplet",
    "solution_density",
    "LANDAU_RAMANUJAN",
]

MAX_NORM = 1 << 127
TRIAL_LIMIT = 10**6
LANDAU_RAMANUJAN = 0.76422


def _small_primes(limit: int) -> list[int]:
    sieve = bytearray([1]) * (limit + 1)
    sieve[0:2] = b"\x00\x00"
    for i in range(2, math.isqrt(limit) + 1):
        if sieve[i]:
            sieve[i * i :: i] = bytearray(len(range(i * i, limit + 1, i)))
    return [i for i in range(limit + 1) if sieve[i]]


_PRIMES = _small_primes(TRIAL_LIMIT)
_PRIMES_SET = frozenset(_PRIMES)
# Miller-Rabin with the first 13 prime bases is proven deterministic below this.
_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41)
_MR_PROVEN = 3317044064679887385961981


def _miller_rabin(n: int, bases: Iterable[int]) -> bool:
    d = n - 1
    s = (d & -d).bit_length() - 1
    d >>= s
    for a in bases:
        a %= n
        if a == 0:
            continue
        x = pow(a, d, n)
        if x == 1 or x == n - 1:
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def _jacobi(a: int, n: int) -> int:
    a %= n
    result = 1
    while a:
        while a % 2 == 0:
            a //= 2
            if n % 8 in (3, 5):
                result = -result
        a, n = n, a
        if a % 4 == 3 and n % 4 == 3:
            result = -result
        a %= n
    return result if n == 1 else 0


def _strong_lucas(n: int) -> bool:
    # Selfridge method A parameters: first D in 5, -7, 9, -11, ... with (D/n) = -1
    if math.isqrt(n) ** 2 == n:
        return False
    D = 5
    while True:
        j = _jacobi(D, n)
        if j == -1:
            break
        if j == 0 and abs(D) != n:
            return False
        D = -D - 2 if D > 0 else -D + 2
    P, Q = 1, (1 - D) // 4
    d = n + 1
    s = (d & -d).bit_length() - 1
    d >>= s

    inv2 = (n + 1) // 2
    U, V, Qk = 1, P, Q % n
    for bit in bin(d)[3:]:
        U, V = U * V % n, (V * V - 2 * Qk) % n
        Qk = Qk * Qk % n
        if bit == "1":
            U, V = (P * U + V) * inv2 % n, (D * U + P * V) * inv2 % n
            Qk = Qk * Q % n
    if U == 0 or V == 0:
        return True
    for _ in range(s - 1):
        V = (V * V - 2 * Qk) % n
        Qk = Qk * Qk % n
        if V == 0:
            return True
    return False


def is_prime(n: int) -> bool:
    """Primality test, exact for n < 3.3e24 and Baillie-PSW above."""
    if n < 2:
        return False
    for p in _MR_BASES:
        if n % p == 0:
            return n == p
    if n < TRIAL_LIMIT:
        return n in _PRIMES_SET
    if not _miller_rabin(n, _MR_BASES):
        return False
    if n < _MR_PROVEN:
        return True
    return _strong_lucas(n)


def _brent_rho(n: int, c: int) -> int:
    """One Brent/Pollard-rho attempt with polynomial x**2 + c. May return n."""
    y, r, q, g = 2, 1, 1, 1
    m = 128
    x = ys = y
    while g == 1:
        x = y
        for _ in range(r):
            y = (y * y + c) % n
        k = 0
        while k < r and g == 1:
            ys = y
            for _ in range(min(m, r - k)):
                y = (y * y + c) % n
                q = q * abs(x - y) % n
            g = math.gcd(q, n)
            k += m
        r *= 2
    if g == n:
        while True:
            ys = (ys * ys + c) % n
            g = math.gcd(abs(x - ys), n)
            if g > 1:
                break
    return g


def _split(n: int) -> int:
    for c in range(1, 1000):
        d = _brent_rho(n, c)
        if d != n:
            return d
    raise ArithmeticError(f"Pollard rho failed to split {n}")


def _factor_large(n: int, out: dict[int, int]) -> None:
    stack = [n]
    while stack:
        m = stack.pop()
        if m == 1:
            continue
        if is_prime(m):
            out[m] = out.get(m, 0) + 1
            continue
        r = math.isqrt(m)
        if r * r == m:
            stack += [r, r]
            continue
        d = _split(m)
        stack += [d, m // d]


def _prime_powers(S: int) -> dict[int, int]:
    out: dict[int, int] = {}
    n = S
    for p in _PRIMES:
        if p * p > n:
            break
        if n % p == 0:
            e = 0
            while n % p == 0:
                n //= p
                e += 1
            out[p] = e
    if n > 1:
        if n < TRIAL_LIMIT * TRIAL_LIMIT:
            out[n] = out.get(n, 0) + 1
        else:
            _factor_large(n, out)
    return out


@dataclass(frozen=True)
class Factorization:
    """S = 2**alpha * prod(f**beta) * prod(g**gamma) with f = 1 and g = 3 (mod 4)."""

    alpha: int
    f_list: tuple[tuple[int, int], ...]
    g_list: tuple[tuple[int, int], ...]

    @property
    def value(self) -> int:
        v = 1 << self.alpha
        for p, e in self.f_list + self.g_list:
            v *= p**e
        return v

    def primes(self) -> list[int]:
        return sorted([2] * bool(self.alpha) + [p for p, _ in self.f_list + self.g_list])

    def __str__(self) -> str:
        terms = [(2, self.alpha)] if self.alpha else []
        terms += sorted(self.f_list + self.g_list)
        return " * ".join(f"{p}^{e}" if e > 1 else str(p) for p, e in terms) or "1"


def factorize(S: int) -> Factorization:
    if not 1 <= S < MAX_NORM:
        raise ValueError(f"S must satisfy 1 <= S < 2**127, got {S}")
    powers = _prime_powers(S)
    alpha = powers.pop(2, 0)
    f_list = tuple(sorted((p, e) for p, e in powers.items() if p % 4 == 1))
    g_list = tuple(sorted((p, e) for p, e in powers.items() if p % 4 == 3))
    return Factorization(alpha, f_list, g_list)


def count_quadruplets(f: Factorization) -> int:
    """Number h(S) of quadruplets {z, iz, -z, -iz} with z * conj(z) = S."""
    if any(e % 2 for _, e in f.g_list):
        return 0
    return math.prod(e + 1 for _, e in f.f_list)


@dataclass(frozen=True)
class GaussianInt:
    re: int
    im: int

    def __mul__(self, other: "GaussianInt | int") -> "GaussianInt":
        if isinstance(other, int):
            return GaussianInt(self.re * other, self.im * other)
        a, b, c, d = self.re, self.im, other.re, other.im
        return GaussianInt(a * c - b * d, a * d + b * c)

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "GaussianInt":
        result, base = GaussianInt(1, 0), self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def __neg__(self) -> "GaussianInt":
        return GaussianInt(-self.re, -self.im)

    def conj(self) -> "GaussianInt":
        return GaussianInt(self.re, -self.im)

    def norm(self) -> int:
        return self.re * self.re + self.im * self.im

    def times_i(self) -> "GaussianInt":
        return GaussianInt(-self.im, self.re)

    def canonical(self) -> "GaussianInt":
        """Associate with re > 0, im >= 0 (angle in [0, pi/2))."""
        if self.re == 0 and self.im == 0:
            raise ValueError("zero has no canonical associate")
        z = self
        while not (z.re > 0 and z.im >= 0):
            z = z.times_i()
        return z

    def associates(self) -> tuple["GaussianInt", ...]:
        z1 = self.times_i()
        z2 = z1.times_i()
        return (self, z1, z2, z2.times_i())

    def angle(self) -> float:
        return math.atan2(self.im, self.re)

    def __complex__(self) -> complex:
        return complex(self.re, self.im)

    def __repr__(self) -> str:
        sign = "+" if self.im >= 0 else "-"
        return f"({self.re}{sign}{abs(self.im)}i)"


def sqrt_minus_one(p: int) -> int:
    """A root r of r**2 = -1 (mod p), p prime and 1 (mod 4)."""
    for c in range(2, p):
        if pow(c, (p - 1) // 2, p) == p - 1:
            return pow(c, (p - 1) // 4, p)
    raise ValueError(f"no quadratic non-residue found mod {p}")


@lru_cache(maxsize=None)
def gaussian_root(p: int) -> GaussianInt:
    """The prime factor x + iy of p with x**2 + y**2 = p and 0 < y < x.

    Uses Cornacchia's reduction: run Euclid on (p, r) with r**2 = -1 (mod p)
    until the remainder drops below sqrt(p).
    """
    if p % 4 != 1 or not is_prime(p):
        raise ValueError(f"{p} is not a prime congruent to 1 mod 4")
    a, b = p, sqrt_minus_one(p)
    limit = math.isqrt(p)
    while b > limit:
        a, b = b, a % b
    x = b
    y = math.isqrt(p - x * x)
    if x * x + y * y != p:
        raise ArithmeticError(f"Cornacchia reduction failed for {p}")
    return GaussianInt(max(x, y), min(x, y))


def classify_quadruplet(z: GaussianInt) -> str:
    """'axis', 'diagonal' or 'generic' depending on where z sits."""
    if z.re == 0 and z.im == 0:
        raise ValueError("zero is not a solution")
    if z.re * z.im == 0:
        return "axis"
    if abs(z.re) == abs(z.im):
        return "diagonal"
    return "generic"


def _rep_key(z: GaussianInt) -> tuple[Fraction, bool]:
    lo, hi = sorted((z.re, z.im))
    return Fraction(lo, hi), z.im > z.re


@dataclass(frozen=True)
class SolutionSet:
    """All lattice points on x**2 + y**2 = S, one canonical representative per quadruplet.

    Representatives have x > 0, y >= 0. They are ordered by their distance
    to the nearest axis, with the member y <= x of each conjugate pair first.
    """

    S: int
    quadruplet_count: int
    representatives: tuple[GaussianInt, ...]

    def points(self) -> set[tuple[int, int]]:
        return {(w.re, w.im) for z in self.representatives for w in z.associates()}

    def octant(self) -> list[tuple[int, int]]:
        """Points with 0 <= y <= x, sorted by increasing angle."""
        pts = [(z.re, z.im) for z in self.representatives if z.im <= z.re]
        return sorted(pts, key=lambda t: Fraction(t[1], t[0]))

    def __len__(self) -> int:
        return len(self.representatives)


def enumerate_solutions(f: Factorization | int) -> SolutionSet:
    """Every quadruplet of x**2 + y**2 = S from the Gaussian factorization of S.

    z = (1+i)**alpha * prod(g**(gamma/2)) * prod(z_j**l * conj(z_j)**(beta - l))
    with every exponent choice l in 0..beta enumerated.
    """
    if isinstance(f, int):
        f = factorize(f)
    S = f.value
    if S >= MAX_NORM:
        raise OverflowError("S must be below 2**127")
    h = count_quadruplets(f)
    if h == 0:
        return SolutionSet(S, 0, ())

    base = GaussianInt(1, 1) ** f.alpha
    for g, e in f.g_list:
        base = base * g ** (e // 2)

    choices = []
    for p, beta in f.f_list:
        z = gaussian_root(p)
        zc = z.conj()
        choices.append([z**lam * zc ** (beta - lam) for lam in range(beta + 1)])

    reps = set()
    for combo in product(*choices):
        z = base
        for w in combo:
            z = z * w
        reps.add(z.canonical())

    for z in reps:
        if z.norm() != S:
            raise ArithmeticError(f"{z} has norm {z.norm()} != {S}")
    if len(reps) != h:
        raise ArithmeticError(f"expected {h} quadruplets for S={S}, found {len(reps)}")
    return SolutionSet(S, h, tuple(sorted(reps, key=_rep_key)))


def solution_density(S_max: int) -> tuple[float, Callable[[float], float]]:
    """Asymptotic count of S <= S_max with h(S) > 0, and the pointwise probability."""
    if S_max < 3:
        raise ValueError("S_max must be >= 3")
    count = LANDAU_RAMANUJAN * S_max / math.sqrt(math.log(S_max))

    def probability(S: float) -> float:
        L = math.log(S)
        return LANDAU_RAMANUJAN * (1 / math.sqrt(L) - 1 / (2 * L**1.5))

    return count, probability
