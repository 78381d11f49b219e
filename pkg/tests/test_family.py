import functools
import io
import math

import pytest
from hypothesis import given, strategies as st

from conftest import GOLDENS, read_golden
from goodrot.family import (
    CATALOG_CAVEAT,
    catalog_csv_text,
    component_angles,
    emit_constants,
    family_norm,
    generate_family,
    max_circle_gap,
    parse_constants,
    read_catalog_csv,
)
from goodrot.grid import GridPoint, defect, to_sin_cos
from goodrot.numtheory import count_quadruplets, factorize
from goodrot.scan import scan


@pytest.fixture(scope="module")
def cat51():
    return generate_family(51, 53)


@pytest.fixture(scope="module")
def cat45():
    return generate_family(45, 53)


def test_catalog_sizes_and_gaps(cat51, cat45):
    assert len(cat51) == 256 and cat51.quadruplets == 512
    assert len(cat45) == 768 and cat45.quadruplets == 1536
    assert abs(cat51.max_gap - 0.027) < 0.001
    assert abs(cat45.max_gap - 0.005) < 0.0005


def test_every_entry_exact(cat51, cat45):
    for cat, k in ((cat51, 16), (cat45, 65536)):
        thetas = [e.theta for e in cat]
        assert all(a < b for a, b in zip(thetas, thetas[1:]))
        for e in cat:
            assert e.k == k and defect(e.point) == k
            assert e.point.p == 53 and 0 < e.point.y < e.point.x


def test_drift_angle_rows_present(cat51, cat45):
    bases = {45: cat45.bases(), 51: cat51.bases()}
    for r in read_golden("drift_angles.csv"):
        n, x, y = int(r["n"]), int(r["x"]), int(r["y"])
        assert (x, y) in bases[n]
        assert f"{math.atan2(y, x):.8f}" == r["theta"]


def test_orbit_angle_rows_present(cat51, cat45):
    for r in read_golden("orbit_angles.csv"):
        n = int(r["n"])
        x, y = int(r["x"]), int(r["y"])
        assert x * x + y * y == family_norm(n)
        assert (x, y) in generate_family(n).bases()
        assert f"{math.atan2(y, x):.8f}" == r["theta"]


@pytest.mark.parametrize("n, name", [(51, "component_angles_n51.csv"), (45, "component_angles_n45.csv")])
def test_component_angles(n, name):
    rows = read_golden(name)
    got = component_angles(n)
    assert len(got) == len(rows)
    for (prime, z, theta), r in zip(got, rows):
        assert z.norm() == prime
        # one published value (n=45, j=7) differs in the last place: atan(9/10) = 0.732815101...
        assert abs(theta - float(r["theta"])) <= 1.5e-8
    assert f"{got[0][2]:.8f}" == "0.46364761" == f"{math.atan(0.5):.8f}"


def test_component_angle_examples():
    angles = component_angles(45)
    prime, z, theta = angles[9]
    assert (z.re, z.im) == (5331, 910) and f"{theta:.8f}" == "0.16907011"
    assert f"{component_angles(51)[8][2]:.8f}" == "0.58604567"


@pytest.mark.parametrize("n", range(1, 21))
def test_catalog_counts_match_quadruplets(n):
    h = count_quadruplets(factorize(family_norm(n)))
    cat = generate_family(n)
    # generic quadruplets pair with their conjugates: one octant point per pair of quadruplets
    assert len(cat) * 2 == h
    assert len(cat) == len({e.base for e in cat})


def test_n3_against_brute_force():
    brute = [(x, y) for x in range(9) for y in range(x + 1) if x * x + y * y == 65]
    cat = generate_family(3, 53)
    assert sorted(cat.bases()) == sorted(brute) == [(7, 4), (8, 1)]
    for e in cat:
        assert (e.point.x, e.point.y) == (e.base[0] << 50, e.base[1] << 50)
        assert defect(e.point) == 1 << 100


def test_n24_against_scan():
    cat = generate_family(24, 24)
    from_scan = {(e.x, e.y) for e in scan(24, 1) if e.k == 1 and 0 < e.y < e.x}
    assert {(e.point.x, e.point.y) for e in cat} == from_scan


def test_max_circle_gap_simple():
    # a single octant angle of 0 unfolds to the 4 axes
    assert math.isclose(max_circle_gap([0.0]), math.pi / 2)
    assert math.isclose(max_circle_gap([math.pi / 8]), math.pi / 4)


def test_rejections():
    with pytest.raises(ValueError):
        generate_family(63)
    with pytest.raises(ValueError):
        generate_family(0)
    with pytest.raises(ValueError):
        generate_family(45, 44)


def test_emit_examples():
    g = GridPoint(14842141, 7822137, 24)
    text = emit_constants(g)
    assert "14842141. / 2. ** 24" in text and "7822137. / 2. ** 24" in text
    base = GridPoint(2240341265158844, 226877536436263, 51)
    wide = base.scaled(2)
    assert (wide.x, wide.y) == (4 * base.x, 4 * base.y)
    assert defect(base) == 1 and defect(wide) == 16
    assert f"{4 * base.x}. / 2. ** 53" in emit_constants(wide)
    assert emit_constants(GridPoint(16777216, 0, 24), "rational") == "16777216/16777216, 0/16777216\n"
    assert emit_constants(g, "hex") == "c = 0xe2791dp-24\ns = 0x775b39p-24\n"
    with pytest.raises(ValueError):
        emit_constants(g, "latex")


def test_emitted_python_evaluates_exactly():
    g = GridPoint(35004143579815 << 8, 3556679846300 << 8, 53)
    for template in ("generic", "hex"):
        ns = {}
        src = emit_constants(g, template)
        if template == "hex":
            src = src.replace("c = ", "c = float.fromhex('").replace("s = ", "s = float.fromhex('")
            src = "\n".join(line + "')" for line in src.splitlines())
        exec(src, ns)
        assert (ns["c"], ns["s"]) == to_sin_cos(g)


@functools.lru_cache(maxsize=None)
def _entries45():
    return generate_family(45, 53).entries


@given(st.sampled_from(["generic", "hex", "rational"]), st.integers(0, 767))
def test_emit_parse_round_trip(template, i):
    e = _entries45()[i]
    assert parse_constants(emit_constants(e.point, template), template) == to_sin_cos(e.point)


def test_csv_golden_and_round_trip(cat51, cat45):
    for cat, name in ((cat45, "family_n45_p53.csv"), (cat51, "family_n51_p53.csv")):
        text = catalog_csv_text(cat)
        assert text == (GOLDENS / name).read_text()
        assert text.startswith(CATALOG_CAVEAT)
        rows = read_catalog_csv(io.StringIO(text))
        assert [r.point for r in rows] == [e.point for e in cat]
        assert [r.theta for r in rows] == [e.theta for e in cat]


def test_csv_rejects_tampered_row(cat51):
    text = catalog_csv_text(cat51)
    first = text.splitlines()[2]
    x = first.split(",")[0]
    bad = text.replace(first, first.replace(x, str(int(x) + 1), 1))
    with pytest.raises(ValueError):
        read_catalog_csv(io.StringIO(bad))
