from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from tmchaos.intervals import Interval, IntervalSet, closed, open_

F = Fraction


def test_normalization_merges_touching_closed_intervals():
    s = IntervalSet.of((0, F(1, 3)), (F(1, 3), F(1, 2)), (F(3, 4), 1))
    assert s.intervals == (closed(0, F(1, 2)), closed(F(3, 4), 1))


def test_open_endpoints_are_kept_apart():
    s = IntervalSet((Interval(F(0), F(1, 2), True, False), Interval(F(1, 2), F(1), False, True)))
    assert len(s) == 2 and F(1, 2) not in s and F(1, 4) in s
    t = s | IntervalSet.of((F(1, 2), F(1, 2)))
    assert t == IntervalSet.unit()


def test_empty_members_dropped():
    assert IntervalSet((open_(F(1, 2), F(1, 2)), closed(1, 0))).is_empty
    assert IntervalSet.of((F(1, 2), F(1, 2))).total_length() == 0


def test_algebra_examples():
    a = IntervalSet.of((0, F(1, 2)))
    b = IntervalSet.of((F(1, 4), 1))
    assert a & b == IntervalSet.of((F(1, 4), F(1, 2)))
    assert a | b == IntervalSet.unit()
    assert a - b == IntervalSet((Interval(F(0), F(1, 4), True, False),))
    assert IntervalSet.unit() - IntervalSet.of((0, F(1, 3)), (F(2, 3), 1)) == IntervalSet((open_(F(1, 3), F(2, 3)),))
    assert a <= IntervalSet.unit() and not IntervalSet.unit() <= a


def test_complement():
    s = IntervalSet((Interval(F(0), F(1, 3), True, False),))
    assert s.complement() == IntervalSet.of((F(1, 3), 1))
    assert IntervalSet().complement() == IntervalSet.unit()


def test_affine_maps():
    s = IntervalSet((Interval(F(0), F(1, 2), True, False),))
    img = s.affine_image(-2, 1)
    assert img == IntervalSet((Interval(F(0), F(1), False, True),))
    assert img.affine_preimage(-2, 1) == s
    with pytest.raises(ValueError):
        s.affine_image(0, 1)


def test_json_round_trip():
    s = IntervalSet((closed(0, F(1, 3)), Interval(F(1, 2), F(2, 3), False, True)))
    doc = s.to_json()
    assert doc == [["0/1", "1/3"], ["1/2", "2/3", "(]"]]
    assert IntervalSet.from_json(doc) == s
    with pytest.raises(ValueError):
        IntervalSet.from_json([["0", "1", "<>"]])


def test_str():
    assert str(IntervalSet((open_(F(1, 3), F(2, 3)),))) == "(1/3, 2/3)"
    assert str(IntervalSet()) == "{}"


endpoint = st.fractions(0, 1, max_denominator=12)


@st.composite
def interval_sets(draw):
    items = []
    for _ in range(draw(st.integers(0, 4))):
        a, b = sorted((draw(endpoint), draw(endpoint)))
        items.append(Interval(a, b, draw(st.booleans()), draw(st.booleans())))
    return IntervalSet(tuple(items))


probe = st.lists(st.fractions(0, 1, max_denominator=24), min_size=1, max_size=20)


@given(interval_sets(), interval_sets(), probe)
def test_algebra_agrees_with_membership(a, b, xs):
    for x in xs + [iv.lo for iv in a] + [iv.hi for iv in b]:
        assert ((a | b).contains(x)) == (a.contains(x) or b.contains(x))
        assert ((a & b).contains(x)) == (a.contains(x) and b.contains(x))
        assert ((a - b).contains(x)) == (a.contains(x) and not b.contains(x))
        assert ((a ^ b).contains(x)) == (a.contains(x) != b.contains(x))


@given(interval_sets())
def test_normal_form_invariants(s):
    ivs = s.intervals
    for iv in ivs:
        assert not iv.empty
    for x, y in zip(ivs, ivs[1:]):
        assert x.hi < y.lo or (x.hi == y.lo and not x.hi_closed and not y.lo_closed)
    assert IntervalSet(ivs) == s
    assert (s | s) == s and (s & s) == s and (s - s).is_empty
