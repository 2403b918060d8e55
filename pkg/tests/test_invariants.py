import random
from fractions import Fraction

import pytest

from formalmaps.invariants import CouplingPoly, Invariant, TraceWord
from formalmaps.series import TruncatedSeries


def test_canonical_rotation():
    assert TraceWord([2, 1, 1]) == TraceWord([1, 1, 2])
    assert TraceWord([2, 1, 1]).colors == (1, 1, 2)
    assert TraceWord([3, 1, 2]).colors == (1, 2, 3)


def test_rotation_orbit_is_identified():
    rng = random.Random(3)
    for _ in range(50):
        n = rng.randrange(1, 8)
        w = [rng.randrange(1, 4) for _ in range(n)]
        r = rng.randrange(n)
        assert TraceWord(w) == TraceWord(w[r:] + w[:r])


def test_cyclic_symmetry_order():
    assert TraceWord([1, 1, 1, 1]).symmetry() == 4
    assert TraceWord([1, 2, 1, 2]).symmetry() == 2
    assert TraceWord([1, 1, 2]).symmetry() == 1
    assert TraceWord([1]).symmetry() == 1
    assert TraceWord([1, 2, 2, 1, 2, 2]).symmetry() == 2


def test_parse_format_roundtrip():
    inv = Invariant.parse("tr(3,3,3)*tr(1,1,2)")
    assert inv.format() == "tr(1,1,2)*tr(3,3,3)"
    assert inv.degree == 6
    assert inv.trace_count == 2
    assert inv.max_color() == 3
    assert Invariant.parse(inv.format()) == inv


def test_parse_rejects_junk():
    with pytest.raises(ValueError):
        TraceWord.parse("tr()")
    with pytest.raises(ValueError):
        TraceWord.parse("det(1,2)")
    with pytest.raises(ValueError):
        TraceWord([0, 1])
    with pytest.raises(ValueError):
        Invariant(())


def test_aut_order():
    sq = TraceWord([1, 1, 1, 1])
    assert Invariant([sq]).aut_order() == 4
    assert Invariant([sq, sq]).aut_order() == 2 * 4 * 4
    mixed = Invariant.parse("tr(1)*tr(1)*tr(2)")
    assert mixed.aut_order() == 2
    assert Invariant.parse("tr(1,2,1,2)").aut_order() == 2


def test_coupling_poly_arithmetic():
    g = CouplingPoly.symbol("g3")
    p = (g + 2) * g
    assert p == CouplingPoly({((("g3", 2)),): 1, (("g3", 1),): 2})
    assert p.evaluate({"g3": Fraction(1, 2)}) == Fraction(5, 4)
    assert (g - g).is_zero()
    assert g * 0 == 0
    assert (g ** 3).evaluate({"g3": 2}) == 8
    assert p.symbols() == ["g3"]
    with pytest.raises(KeyError):
        p.evaluate({})


def test_coupling_poly_as_series_coefficient():
    g = CouplingPoly.symbol("g")
    z = TruncatedSeries([1, g, g * g], 3)
    f = z.log()
    assert f.coefficient(1) == g
    assert f.coefficient(2) == g * g * Fraction(1, 2)
    assert f.exp() == z
