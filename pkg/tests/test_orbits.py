import math
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tmchaos.ensemble import random_machine
from tmchaos.machine import load_machine
from tmchaos.orbits import (Orbit, RationalSequence, brute_force_sensitivity, classify,
                            detect_sensitivity, measure, measure_monte_carlo, orbit_of,
                            order_break_scan, sequence_profile, tail_start)

DATA = Path(__file__).resolve().parents[1] / "src" / "tmchaos" / "data"
F = Fraction


def interleave(n=60):
    return [F(1, 5) + F(1, k // 2 + 3) if k % 2 == 0 else F(4, 5) - F(1, k // 2 + 3) for k in range(n)]


def rotation(n=60, centers=(F(1, 10), F(1, 2), F(9, 10))):
    return [centers[t % len(centers)] + F(1, 10 * (t + 20)) for t in range(n)]


def newton(n=12):
    x = [F(1)]
    while len(x) < n:
        x.append((x[-1] + 2 / x[-1]) / 2)
    return x


# orbit generation

def test_rightwriter_orbit_closed_form(backend):
    o = orbit_of(load_machine(DATA / "rightwriter.tm"), fuel=40)
    assert list(o.values[:4]) == [0, F(1, 3), F(4, 9), F(13, 27)]
    assert all(v == F(3 ** t - 1, 2 * 3 ** t) for t, v in enumerate(o.values))
    assert o.truncated and o.source == "machine"


def test_accept_orbit_is_short_and_final():
    o = orbit_of(load_machine(DATA / "accept1.tm"))
    assert len(o) <= 2 and not o.truncated
    assert classify(o).kind == "finite_halt"


def test_blinker_orbit_alternates():
    o = orbit_of(load_machine(DATA / "blinker.tm"))
    assert o.period == (0, 2)
    assert list(o.values) == [0, F(1, 3), 0]
    c = classify(o)
    assert (c.kind, c.preperiod, c.period) == ("eventually_periodic", 0, 2)


def test_machine_orbits_match_direct_rationalization(backend):
    from tmchaos.rationalize import rationalize_config
    from tmchaos.machine import run
    for seed in range(40):
        m = random_machine(3, 3, np.random.default_rng(seed))
        o = orbit_of(m, fuel=80)
        trace = run(m, "", 80, trace=True).trace
        amap = m.alphabet_map()
        assert list(o.values) == [rationalize_config(c, amap) for c in trace]


def test_rational_sequence():
    s = RationalSequence.from_powers([1, 4, 13], [1, 2, 3], 3)
    assert list(s) == [F(1, 3), F(4, 9), F(13, 27)]
    assert s[1:] == RationalSequence.from_values([F(4, 9), F(13, 27)])
    assert np.allclose(s.floats(), [1 / 3, 4 / 9, 13 / 27])
    keys, D = s.keys()
    assert [F(k, D) for k in keys] == list(s)


def test_tail_start():
    assert tail_start(60) == 30
    assert tail_start(7, F(1, 2)) == 3
    assert tail_start(10, 1) == 0
    with pytest.raises(ValueError):
        tail_start(10, 0)


# classification

def test_classify_newton():
    c = classify(Orbit.explicit(newton()))
    assert c.kind == "cauchy" and abs(float(c.limit_estimate) - 1.41421356237) < 1e-6


def test_classify_rightwriter():
    c = classify(orbit_of(load_machine(DATA / "rightwriter.tm"), fuel=40))
    assert c.kind == "cauchy" and abs(c.limit_estimate - F(1, 2)) < F(1, 10 ** 9)


def test_classify_interleave():
    c = classify(Orbit.explicit(interleave()), eps=F(1, 20))
    assert c.kind == "non_cauchy"
    a, b = c.profile.accumulation_points
    assert abs(a - F(1, 5)) < F(1, 10) and abs(b - F(4, 5)) < F(1, 10)


def test_classify_short_and_bad_eps():
    assert classify(Orbit.explicit([0] * 7)).kind == "inconclusive"
    with pytest.raises(ValueError):
        classify(Orbit.explicit([0] * 10), eps=0)


def test_classify_unstable_clustering_is_inconclusive():
    # neighbours exactly eps apart: linkage flips under a 10% change of eps
    vals = [F(k, 50) for k in range(20)]
    c = classify(Orbit.explicit(vals), eps=F(1, 50))
    assert c.kind == "inconclusive" and "10%" in c.reason


def test_classify_unassigned_is_inconclusive():
    # a slow ramp forms one linked cluster whose spread exceeds eps
    vals = [F(k, 400) for k in range(100)]
    c = classify(Orbit.explicit(vals), eps=F(1, 50))
    assert c.kind == "inconclusive"


# profiles

def test_profile_cauchy_single_point():
    p = sequence_profile(Orbit.explicit(newton()))
    assert p.dimension == 1 and p.representation() == (p.accumulation_points[0],)
    assert p.min_separation() is None


def test_profile_interleave_alternates():
    p = sequence_profile(Orbit.explicit(interleave()), eps=F(1, 20))
    assert p.dimension == 2 and p.tail_start == 30
    assert p.visit_pattern == tuple(k % 2 for k in range(30))
    assert p.min_separation() > 2 * p.eps


def test_profile_three_cluster_rotation():
    p = sequence_profile(Orbit.explicit(rotation()), eps=F(1, 20))
    assert p.dimension == 3
    assert p.visit_pattern == tuple(t % 3 for t in range(30, 60))


def test_profile_merges_close_estimates():
    vals = [F(1, 2) + (F(3, 100) if t % 2 else 0) for t in range(40)]
    p = sequence_profile(Orbit.explicit(vals), eps=F(1, 50))
    assert p.dimension == 1


# sensitivity

def test_interleave_tail_non_sensitive():
    o = Orbit.explicit(interleave())
    v = detect_sensitivity(o, F(1, 20), 8, start=o.tail_start())
    assert v.kind == "non_sensitive" and v.witness is None


def test_interleave_with_swap_is_chaotic():
    vals = interleave()
    vals[30], vals[31] = vals[31], vals[30]
    o = Orbit.explicit(vals)
    v = detect_sensitivity(o, F(1, 20), 8, start=30)
    i, j = v.witness
    assert v.kind == "chaotic" and i <= 31 < j
    n = v.divergence_step
    assert abs(vals[i] - vals[j]) < F(1, 20) < abs(vals[i + n] - vals[j + n])
    assert brute_force_sensitivity(vals[30:], F(1, 20), 8) == ("chaotic", (i - 30, j - 30, n))


def test_cauchy_orbit_non_sensitive():
    o = orbit_of(load_machine(DATA / "rightwriter.tm"), fuel=40)
    assert detect_sensitivity(o).kind == "non_sensitive"


def test_sensitivity_preconditions():
    with pytest.raises(ValueError, match="2\\*horizon"):
        detect_sensitivity(Orbit.explicit([0] * 10), horizon=8)
    v = detect_sensitivity(Orbit.explicit([0, 1] * 8), F(1, 5), 2)
    assert v.kind == "non_sensitive"
    v = detect_sensitivity(Orbit.explicit([F(k, 10) for k in range(10)]), F(1, 20), 2)
    assert v.kind == "inconclusive" and v.reason == "no close pairs at eps"


@settings(max_examples=200, deadline=None)
@given(st.lists(st.integers(0, 40), min_size=4, max_size=30), st.integers(1, 4),
       st.sampled_from([F(1, 10), F(1, 8), F(1, 4)]))
def test_detect_matches_brute_force(ks, horizon, eps):
    vals = [F(k, 40) for k in ks]
    if len(vals) < 2 * horizon:
        return
    v = detect_sensitivity(Orbit.explicit(vals), eps, horizon)
    got = (v.kind, None if v.witness is None else (*v.witness, v.divergence_step))
    assert got == brute_force_sensitivity(vals, eps, horizon)


@settings(max_examples=100, deadline=None)
@given(st.fractions(0, 1), st.integers(2, 9), st.integers(32, 60))
def test_cauchy_implies_non_sensitive(limit, base, n):
    # geometric convergence to limit from alternating sides
    vals = [limit + F((-1) ** t, base ** t) for t in range(n)]
    o = Orbit.explicit(vals)
    c = classify(o)
    if c.kind == "cauchy":
        assert detect_sensitivity(o, start=o.tail_start()).kind == "non_sensitive"


def test_periodic_orbits_never_chaotic(backend):
    functional = aliased = 0
    for seed in range(1500):
        m = random_machine(3, 2, np.random.default_rng(seed))
        o = orbit_of(m, fuel=400)
        if o.period is None or o.period[1] < 2:
            continue
        pre, per = o.period
        cycle = list(o.values[pre: pre + per])
        distinct = sorted(set(cycle))
        if len(distinct) < 2:
            continue
        sep = min(b - a for a, b in zip(distinct, distinct[1:]))
        u = o.unrolled(pre + 2 * per + 16)
        v = detect_sensitivity(u, sep / 2, 8, start=pre)
        if len(distinct) == per:
            # cycle values distinct: the value map is a function on the cycle
            assert v.kind == "non_sensitive"
            functional += 1
        elif v.kind == "chaotic":
            # two configurations share a value but not a successor value
            i, j = v.witness
            assert u.values[i] == u.values[j]
            aliased += 1
    assert functional > 10


def test_unrolled_requires_period():
    with pytest.raises(ValueError):
        Orbit.explicit([0, 1]).unrolled(5)


# order breaks

def test_order_break_examples():
    assert order_break_scan([0, 1] * 10) == []
    assert order_break_scan([0, 1, 0, 1, 1, 0]) == [4]
    pattern = [t % 3 for t in range(15)]
    pattern[9], pattern[10] = pattern[10], pattern[9]
    assert order_break_scan(pattern) == [9]
    with pytest.raises(ValueError):
        order_break_scan([0, 1])


def test_order_break_from_profile():
    vals = interleave()
    vals[40], vals[41] = vals[41], vals[40]
    p = sequence_profile(Orbit.explicit(vals), eps=F(1, 20))
    # an adjacent swap yields two out-of-order runs
    assert order_break_scan(p) == [40 - p.tail_start, 42 - p.tail_start]
    with pytest.raises(ValueError):
        order_break_scan(sequence_profile(Orbit.explicit(newton())))


# measure

def test_measure_examples():
    assert measure([(0, 1)]) == 1
    assert measure([(0, 1), (0, 1)]) == F(1, 2)
    assert measure([(0, 1)] * 3) == F(1, 6)
    assert measure([(0, 1), (F(1, 2), F(1, 2)), (0, 1)]) == 0
    assert measure([(F(1, 2), F(1, 2))]) == 0
    assert measure([(0, F(1, 2)), (F(1, 2), 1)]) == F(1, 4)
    assert measure([(F(1, 2), 1), (0, F(1, 2))]) == 0
    with pytest.raises(ValueError):
        measure([(1, 0)])
    with pytest.raises(ValueError):
        measure([])


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.fractions(0, 1, max_denominator=8), st.fractions(0, 1, max_denominator=8)),
                min_size=1, max_size=4), st.integers(0, 3), st.fractions(0, 1, max_denominator=8))
def test_measure_monotone(pairs, k, grow):
    boxes = [(min(a, b), max(a, b)) for a, b in pairs]
    k %= len(boxes)
    lo, hi = boxes[k]
    bigger = list(boxes)
    bigger[k] = (lo, max(hi, hi + grow * (1 - hi)))
    assert measure(bigger) >= measure(boxes) >= 0
    assert measure(boxes) <= math.prod(hi - lo for lo, hi in boxes)


def test_measure_matches_monte_carlo_on_mixed_boxes(backend):
    boxes = [(0, F(3, 4)), (F(1, 4), 1), (F(1, 8), F(7, 8))]
    exact = float(measure(boxes))
    est = measure_monte_carlo(boxes, 400_000, seed=1)
    assert abs(est - exact) / exact < 0.02
