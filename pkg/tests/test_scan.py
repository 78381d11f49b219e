import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import read_golden
from goodrot.grid import GridPoint, defect
from goodrot.scan import (
    MAX_SCAN_PRECISION,
    TractabilityError,
    _scan_numpy,
    _scan_python,
    nearest_entry,
    nearest_good_angle,
    scan,
    scan_cost,
)


def brute_force(p, k_max):
    """Every 0 <= y <= x <= 2**p on the full square, numpy broadcast."""
    v = np.arange((1 << p) + 1, dtype=np.int64)
    k = v[:, None] ** 2 + v[None, :] ** 2 - (1 << (2 * p))
    xs, ys = np.nonzero((np.abs(k) <= k_max) & (v[None, :] <= v[:, None]))
    return {(int(x), int(y)) for x, y in zip(xs, ys)}


def test_naive_double_loop_p4():
    expected = set()
    for x in range(17):
        for y in range(x + 1):
            if abs(x * x + y * y - 256) <= 2:
                expected.add((x, y))
    got = scan(4, 2)
    assert set(got.points()) == expected
    assert len(got) == len(expected)


@settings(max_examples=25)
@given(st.integers(1, 12), st.integers(0, 64))
def test_matches_full_grid_oracle(p, k_max):
    k_max = min(k_max, (1 << p) - 1)
    got = scan(p, k_max)
    assert set(got.points()) == brute_force(p, k_max)
    assert len(got.points()) == len(set(got.points()))
    thetas = [e.theta for e in got]
    assert thetas == sorted(thetas)
    for e in got:
        assert e.k == defect(e.point) and abs(e.k) <= k_max


@pytest.mark.parametrize("p", range(1, 17))
def test_theorems_exhaustive(p):
    # defect 0 only on the axes, defect -1 never: check every y for a perfect square
    y = np.arange((1 << p) + 1, dtype=np.int64)
    t = (1 << (2 * p)) - y * y
    for target, allowed in ((t, {0, 1 << p}), (t - 1, set())):
        ok = target >= 0
        r = np.zeros_like(target)
        r[ok] = np.floor(np.sqrt(target[ok].astype(np.float64))).astype(np.int64)
        r = np.where(r * r > target, r - 1, r)
        r = np.where((r + 1) * (r + 1) <= target, r + 1, r)
        hits = set(y[ok & (r * r == target)].tolist())
        assert hits == allowed
    assert scan(p, 0).points() == [(1 << p, 0)]


def test_scan_golden():
    rows = read_golden("scan_p24_k32.csv")
    got = scan(24, 32)
    assert len(got) == 54 == len(rows)
    for e, r in zip(got, rows):
        assert (e.x, e.y, e.k) == (int(r["x"]), int(r["y"]), int(r["k"]))
        assert f"{e.theta:.8f}" == f"{float(r['theta']):.8f}"


def test_counts():
    assert len(scan(24, 1000)) == 869
    assert scan(24, 0).points() == [(16777216, 0)]


def test_workers_do_not_change_output():
    assert scan(20, 32, workers=1) == scan(20, 32, workers=2)


def test_kernels_agree_near_int64_limit():
    p = 31
    a = _scan_numpy(p, 40, 0, 30000)
    b = _scan_python(p, 40, 0, 30000)
    assert a == b
    # above the numpy limit the pure Python kernel takes over
    for x, y in _scan_python(33, 40, 0, 30000):
        assert abs(defect(GridPoint(x, y, 33))) <= 40


def test_all_octants_expansion():
    oct_ = scan(10, 20)
    full = scan(10, 20, octant_only=False)
    expected = set()
    for x, y in oct_.points():
        for a, b in ((x, y), (y, x)):
            for sx in (1, -1):
                for sy in (1, -1):
                    expected.add((sx * a, sy * b))
    assert set(full.points()) == expected


def test_refusals():
    assert MAX_SCAN_PRECISION == 34
    with pytest.raises(TractabilityError):
        scan(35, 1)
    with pytest.raises(ValueError):
        scan(10, 1 << 10)
    with pytest.raises(ValueError):
        scan(10, -1)
    assert scan_cost(24) == math.isqrt(1 << 47) + 1


def test_nearest_examples():
    assert nearest_good_angle(24, 32, 0.485) == (GridPoint(14842141, 7822137, 24), -6)
    assert nearest_good_angle(24, 32, 0.0) == (GridPoint(16777216, 0, 24), 0)
    g, k = nearest_good_angle(24, 32, 0.32)
    assert g.x == 15975413 and f"{math.atan2(g.y, g.x):.8f}" == "0.31040869"
    with pytest.raises(ValueError):
        nearest_good_angle(24, 32, 1.0)


def test_nearest_ties_prefer_small_defect():
    class E:
        def __init__(self, theta, k, y):
            self.theta, self.k = theta, k
            self.point = GridPoint(1 << 20, y, 20)

    a, b, c = E(0.5, 9, 3), E(0.7, 1, 5), E(0.7, 1, 4)
    assert nearest_entry([a, b, c], 0.6) is c
    assert nearest_entry([a, b, c], 0.55, rule="at_least") is c
    with pytest.raises(ValueError):
        nearest_entry([a], 0.6, rule="at_least")
    with pytest.raises(ValueError):
        nearest_entry([a], 0.6, rule="closest")
