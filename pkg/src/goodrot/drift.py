"""Repeated rotation X' = cX - sY, Y' = sX + cY and the drift of the radius.

Iterating the map multiplies the squared radius by c**2 + s**2 each step on
top of the quasi-random roundoff of the products and sums. A rotation
whose stored (c, s) has c**2 + s**2 != 1 therefore drifts linearly, while a
good rotation only random-walks. Single precision is emulated with float32
arithmetic (each operation rounded to single), which is
hardware-independent because a product or sum of two singles computed in
double and rounded once to single is the correctly rounded single result.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple, Sequence

import numba
import numpy as np

from .grid import GridPoint, to_sin_cos

__all__ = [
    "DEFAULT_SEED",
    "DEFAULT_TRIALS",
    "MAX_STEPS",
    "PARTICULARLY_GOOD_DYADIC",
    "RotationSpec",
    "DriftSeries",
    "RegimeReport",
    "NumericalFailure",
    "geometric_checkpoints",
    "random_unit_points",
    "iterate_rotation",
    "detect_cycle",
    "exact_radius_factor",
    "classify_regime",
    "ErrorCurves",
    "predicted_error_curves",
    "crossover_step",
]

DEFAULT_SEED = 20240611
DEFAULT_TRIALS = 20
MAX_STEPS = 10**9
# Dyadic angles j/512 whose rounded (c, s) happen to have a small defect.
PARTICULARLY_GOOD_DYADIC = (126, 248, 357, 423, 700)
LINEAR_EXPONENT = 0.75

_DTYPES = {"single": np.float32, "double": np.float64}


class NumericalFailure(ArithmeticError):
    """The rotated state stopped being finite."""


@dataclass(frozen=True)
class RotationSpec:
    """Where (c, s) come from.

    kind is one of
      grid         exact c = x / 2**p, s = y / 2**p
      dyadic       theta = j / denom (exact), c and s rounded cos / sin
      pi_fraction  theta = j * pi / denom, c and s rounded cos / sin
      raw          an arbitrary float theta, c and s rounded cos / sin
    """

    kind: str
    precision: str = "double"
    grid: GridPoint | None = None
    j: int | None = None
    denom: int | None = None
    theta_value: float | None = None

    def __post_init__(self):
        if self.precision not in _DTYPES:
            raise ValueError(f"precision must be 'single' or 'double', got {self.precision!r}")
        if self.kind == "grid" and self.grid is None:
            raise ValueError("grid rotation needs a GridPoint")
        if self.kind in ("dyadic", "pi_fraction") and (self.j is None or not self.denom):
            raise ValueError(f"{self.kind} rotation needs j and denom")
        if self.kind == "dyadic" and self.denom & (self.denom - 1):
            raise ValueError("dyadic denominators must be powers of two")
        if self.kind == "raw" and self.theta_value is None:
            raise ValueError("raw rotation needs theta_value")
        if self.kind not in ("grid", "dyadic", "pi_fraction", "raw"):
            raise ValueError(f"unknown rotation kind {self.kind!r}")

    @classmethod
    def from_grid(cls, g: GridPoint, precision: str = "double") -> "RotationSpec":
        return cls("grid", precision, grid=g)

    @classmethod
    def dyadic(cls, j: int, denom: int = 512, precision: str = "double") -> "RotationSpec":
        return cls("dyadic", precision, j=j, denom=denom)

    @classmethod
    def pi_fraction(cls, j: int, denom: int = 2000, precision: str = "double") -> "RotationSpec":
        return cls("pi_fraction", precision, j=j, denom=denom)

    @classmethod
    def raw(cls, theta: float, precision: str = "double") -> "RotationSpec":
        return cls("raw", precision, theta_value=float(theta))

    @property
    def dtype(self):
        return _DTYPES[self.precision]

    @property
    def theta(self) -> float:
        if self.kind == "grid":
            return math.atan2(self.grid.y, self.grid.x)
        if self.kind == "dyadic":
            return self.j / self.denom
        if self.kind == "pi_fraction":
            return self.j * math.pi / self.denom
        return self.theta_value

    def cos_sin(self):
        """(c, s) as scalars of the working precision."""
        if self.kind == "grid":
            return to_sin_cos(self.grid, self.dtype)
        t = self.theta
        return self.dtype(math.cos(t)), self.dtype(math.sin(t))

    def describe(self) -> dict:
        d = {"kind": self.kind, "precision": self.precision}
        if self.grid is not None:
            d["grid"] = [self.grid.x, self.grid.y, self.grid.p]
        if self.j is not None:
            d["j"], d["denom"] = self.j, self.denom
        if self.theta_value is not None:
            d["theta"] = self.theta_value
        return d


def exact_radius_factor(spec: RotationSpec) -> Fraction:
    """c**2 + s**2 of the stored constants, exactly."""
    c, s = spec.cos_sin()
    fc, fs = Fraction(float(c)), Fraction(float(s))
    return fc * fc + fs * fs


@dataclass
class DriftSeries:
    steps: np.ndarray
    mean: np.ndarray
    std: np.ndarray
    trials: int
    per_trial: np.ndarray = field(repr=False)
    spec: RotationSpec | None = None

    def rows(self):
        return zip(self.steps.tolist(), self.mean.tolist(), self.std.tolist())


def geometric_checkpoints(steps: int, per_decade: int = 4) -> np.ndarray:
    """1, 10**(1/4), 10**(2/4), ... rounded to integers, capped at ``steps`` (included)."""
    if steps < 1:
        raise ValueError("steps must be >= 1")
    top = math.log10(steps)
    exps = np.arange(0, math.floor(top * per_decade) + 1) / per_decade
    cps = np.unique(np.rint(10.0**exps).astype(np.int64))
    cps = cps[cps <= steps]
    if cps[-1] != steps:
        cps = np.append(cps, steps)
    return cps


def random_unit_points(trials: int, seed: int = DEFAULT_SEED, dtype=np.float64):
    """Points cos(phi), sin(phi) with phi uniform on [0, 2 pi) from a PCG64 stream."""
    rng = np.random.default_rng(seed)
    phi = rng.uniform(0.0, 2.0 * np.pi, trials)
    return np.cos(phi).astype(dtype), np.sin(phi).astype(dtype)


@numba.njit(cache=True)
def _rotate_kernel(c, s, X, Y, checkpoints, out):
    """Iterate each trial and record |R**2/R0**2 - 1| at the checkpoints.

    Returns -1, or the step at which the state stopped being finite.
    """
    for i in range(X.shape[0]):
        x = X[i]
        y = Y[i]
        xd = np.float64(x)
        yd = np.float64(y)
        r0 = xd * xd + yd * yd
        step = 0
        for j in range(checkpoints.shape[0]):
            target = checkpoints[j]
            while step < target:
                x, y = c * x - s * y, s * x + c * y
                step += 1
            xd = np.float64(x)
            yd = np.float64(y)
            r2 = xd * xd + yd * yd
            if not np.isfinite(r2):
                return step
            out[i, j] = abs(r2 / r0 - 1.0)
    return -1


def iterate_rotation(spec: RotationSpec, X0=None, Y0=None, steps: int = 10**6,
                     checkpoints: Sequence[int] | None = None, trials: int = DEFAULT_TRIALS,
                     seed: int = DEFAULT_SEED) -> DriftSeries:
    """Run the rotation map and sample the relative squared-radius error.

    With X0 and Y0 given a single trajectory is followed; otherwise
    ``trials`` random points on the unit circle are drawn from ``seed``.
    """
    if not 1 <= steps <= MAX_STEPS:
        raise ValueError(f"steps must lie in [1, {MAX_STEPS}]")
    dtype = spec.dtype
    if X0 is not None or Y0 is not None:
        X = np.atleast_1d(np.asarray(X0, dtype=dtype))
        Y = np.atleast_1d(np.asarray(Y0, dtype=dtype))
    else:
        X, Y = random_unit_points(trials, seed, dtype)
    if np.any((X == 0) & (Y == 0)):
        raise ValueError("initial radius must be non-zero")

    cps = geometric_checkpoints(steps) if checkpoints is None else np.asarray(checkpoints, dtype=np.int64)
    if np.any(np.diff(cps) <= 0) or cps[0] < 1 or cps[-1] > steps:
        raise ValueError("checkpoints must be strictly increasing within [1, steps]")
    c, s = spec.cos_sin()
    out = np.zeros((X.shape[0], cps.shape[0]))
    bad = _rotate_kernel(dtype(c), dtype(s), X.copy(), Y.copy(), cps, out)
    if bad >= 0:
        raise NumericalFailure(f"state became non-finite at step {bad}")
    return DriftSeries(cps, out.mean(axis=0), out.std(axis=0), X.shape[0], out, spec)


@numba.njit(cache=True)
def _brent_kernel(c, s, x0, y0, power_cap, max_steps):
    """Brent cycle search on the exact float state; power stops doubling at power_cap.

    Returns (period, transient), or (-1, -1) when nothing is found.
    """
    power = 1
    lam = 1
    tx, ty = x0, y0
    hx, hy = c * x0 - s * y0, s * x0 + c * y0
    n = 1
    while not (tx == hx and ty == hy):
        if power == lam:
            tx, ty = hx, hy
            if power < power_cap:
                power *= 2
            lam = 0
        hx, hy = c * hx - s * hy, s * hx + c * hy
        lam += 1
        n += 1
        if n > max_steps:
            return -1, -1
    tx, ty = x0, y0
    hx, hy = x0, y0
    for _ in range(lam):
        hx, hy = c * hx - s * hy, s * hx + c * hy
    mu = 0
    while not (tx == hx and ty == hy):
        tx, ty = c * tx - s * ty, s * tx + c * ty
        hx, hy = c * hx - s * hy, s * hx + c * hy
        mu += 1
    return lam, mu


def detect_cycle(spec: RotationSpec, X0: float, Y0: float, max_period: int = 10**6,
                 max_steps: int | None = None) -> tuple[int, int] | None:
    """Smallest exact period P <= max_period of the float state, with its transient.

    Returns (period, transient) or None. The search gives up after
    ``max_steps`` iterations (default 10 * max_period + 10**5).
    """
    if not 1 <= max_period <= 10**6:
        raise ValueError("max_period must lie in [1, 10**6]")
    if max_steps is None:
        max_steps = 10 * max_period + 10**5
    dtype = spec.dtype
    c, s = spec.cos_sin()
    cap = 1 << (max_period - 1).bit_length()
    lam, mu = _brent_kernel(dtype(c), dtype(s), dtype(X0), dtype(Y0), cap, max_steps)
    if lam < 0 or lam > max_period:
        return None
    return int(lam), int(mu)


@dataclass(frozen=True)
class RegimeReport:
    regime: str
    fitted_rate: float
    loglog_slope: float
    period: int | None = None
    predicted_rate: float | None = None

    def as_dict(self) -> dict:
        return {
            "regime": self.regime,
            "fitted_rate": self.fitted_rate,
            "loglog_slope": self.loglog_slope,
            "period": self.period,
            "predicted_rate": self.predicted_rate,
        }


def classify_regime(series: DriftSeries, period: int | None = None) -> RegimeReport:
    """Fit the final decade of checkpoints and name the regime.

    fitted_rate is the least-squares slope of mean error against t through
    the origin; loglog_slope the exponent of a power law fit. An exponent
    above 0.75 counts as linear drift, anything lower as random-walk
    dominated; an exact cycle overrides both.
    """
    t = series.steps.astype(float)
    m = series.mean
    sel = (t >= t[-1] / 10.0) & (m > 0)
    if sel.sum() < 2:
        sel = m > 0
    tt, mm = t[sel], m[sel]
    rate = float(np.dot(tt, mm) / np.dot(tt, tt)) if tt.size else 0.0
    slope = float(np.polyfit(np.log(tt), np.log(mm), 1)[0]) if tt.size >= 2 else 0.0
    predicted = None
    if series.spec is not None:
        predicted = float(exact_radius_factor(series.spec) - 1)
    if period is not None:
        regime = "periodic_lock"
    elif slope > LINEAR_EXPONENT:
        regime = "linear_drift"
    else:
        regime = "random_walk_dominated"
    return RegimeReport(regime, rate, slope, period, predicted)


class ErrorCurves(NamedTuple):
    t: np.ndarray
    eps0: np.ndarray  # systematic, arbitrary angle
    eps1: np.ndarray  # random walk of the other roundoffs
    eps2: np.ndarray  # systematic, defect 1
    eps3: np.ndarray  # systematic, defect k


def predicted_error_curves(p: int, k: int, t_max: float, num: int = 200) -> ErrorCurves:
    """Order-of-magnitude error models, sampled log-uniformly on [1, t_max]."""
    if t_max < 1:
        raise ValueError("t_max must be >= 1")
    t = np.logspace(0.0, math.log10(t_max), num)
    u = 2.0**-p
    return ErrorCurves(t, u * t, u * np.sqrt(t), u * u * t, u * u * abs(k) * t)


def crossover_step(p: int, k: int = 1) -> float:
    """Step count where the defect-k systematic error overtakes the random walk: (2**p / |k|)**2."""
    return (2.0**p / abs(k)) ** 2
