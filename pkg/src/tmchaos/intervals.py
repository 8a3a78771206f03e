"""Finite unions of rational intervals with exact endpoints.

Endpoints are :class:`~fractions.Fraction` and each carries its own
closedness, so half-open threshold pieces and open residues such as
``(1/3, 2/3)`` are represented faithfully.  Sets are kept normalized:
sorted, pairwise disjoint, non-empty members, with touching members merged
whenever the shared endpoint belongs to either side.
"""
from __future__ import annotations

import bisect
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, NamedTuple

from .rationalize import format_rational, parse_rational


class Interval(NamedTuple):
    lo: Fraction
    hi: Fraction
    lo_closed: bool = True
    hi_closed: bool = True

    @property
    def empty(self) -> bool:
        return self.lo > self.hi or (self.lo == self.hi and not (self.lo_closed and self.hi_closed))

    @property
    def length(self) -> Fraction:
        return self.hi - self.lo

    def contains(self, x: Fraction) -> bool:
        if x < self.lo or x > self.hi:
            return False
        if x == self.lo and not self.lo_closed:
            return False
        return not (x == self.hi and not self.hi_closed)

    def brackets(self) -> str:
        return ("[" if self.lo_closed else "(") + ("]" if self.hi_closed else ")")

    def __str__(self) -> str:
        b = self.brackets()
        return f"{b[0]}{format_rational(self.lo)}, {format_rational(self.hi)}{b[1]}"


def closed(lo, hi) -> Interval:
    return Interval(Fraction(lo), Fraction(hi), True, True)


def open_(lo, hi) -> Interval:
    return Interval(Fraction(lo), Fraction(hi), False, False)


def _lo_key(iv: Interval):
    # a closed lower end starts before an open one at the same point
    return (iv.lo, not iv.lo_closed)


def _normalize(items: Iterable[Interval]) -> tuple[Interval, ...]:
    ivs = sorted((iv for iv in items if not iv.empty), key=_lo_key)
    out: list[Interval] = []
    for iv in ivs:
        if out:
            top = out[-1]
            touches = iv.lo < top.hi or (iv.lo == top.hi and (iv.lo_closed or top.hi_closed))
            if touches:
                if iv.hi > top.hi:
                    out[-1] = Interval(top.lo, iv.hi, top.lo_closed, iv.hi_closed)
                elif iv.hi == top.hi and iv.hi_closed and not top.hi_closed:
                    out[-1] = Interval(top.lo, top.hi, top.lo_closed, True)
                continue
        out.append(iv)
    return tuple(out)


@dataclass(frozen=True)
class IntervalSet:
    intervals: tuple[Interval, ...] = ()

    def __post_init__(self) -> None:
        items = []
        for iv in self.intervals:
            if not isinstance(iv, Interval):
                iv = Interval(Fraction(iv[0]), Fraction(iv[1]), *iv[2:])
            else:
                iv = Interval(Fraction(iv.lo), Fraction(iv.hi), iv.lo_closed, iv.hi_closed)
            items.append(iv)
        object.__setattr__(self, "intervals", _normalize(items))

    @classmethod
    def of(cls, *pairs) -> "IntervalSet":
        """Closed intervals from ``(lo, hi)`` pairs."""
        return cls(tuple(closed(lo, hi) for lo, hi in pairs))

    @classmethod
    def unit(cls) -> "IntervalSet":
        return cls((closed(0, 1),))

    @classmethod
    def empty_set(cls) -> "IntervalSet":
        return cls(())

    def __len__(self) -> int:
        return len(self.intervals)

    def __iter__(self):
        return iter(self.intervals)

    def __bool__(self) -> bool:
        return bool(self.intervals)

    @property
    def is_empty(self) -> bool:
        return not self.intervals

    def total_length(self) -> Fraction:
        return sum((iv.length for iv in self.intervals), Fraction(0))

    def contains(self, x) -> bool:
        x = Fraction(x)
        k = bisect.bisect_right([iv.lo for iv in self.intervals], x) - 1
        return k >= 0 and self.intervals[k].contains(x)

    __contains__ = contains

    def bounds(self) -> tuple[Fraction, Fraction]:
        if not self.intervals:
            raise ValueError("empty set has no bounds")
        return self.intervals[0].lo, self.intervals[-1].hi

    # set algebra

    def union(self, other: "IntervalSet") -> "IntervalSet":
        return IntervalSet(self.intervals + other.intervals)

    def intersection(self, other: "IntervalSet") -> "IntervalSet":
        a, b = self.intervals, other.intervals
        out = []
        i = j = 0
        while i < len(a) and j < len(b):
            x, y = a[i], b[j]
            if x.lo > y.lo or (x.lo == y.lo and not x.lo_closed):
                lo, lc = x.lo, x.lo_closed
            else:
                lo, lc = y.lo, y.lo_closed
            if x.hi < y.hi or (x.hi == y.hi and not x.hi_closed):
                hi, hc = x.hi, x.hi_closed
            else:
                hi, hc = y.hi, y.hi_closed
            out.append(Interval(lo, hi, lc, hc))
            if (x.hi, x.hi_closed) < (y.hi, y.hi_closed):
                i += 1
            else:
                j += 1
        return IntervalSet(tuple(out))

    def complement(self, universe: "IntervalSet | None" = None) -> "IntervalSet":
        """Complement relative to ``universe`` (default ``[0, 1]``)."""
        universe = IntervalSet.unit() if universe is None else universe
        if not universe:
            return universe
        lo, hi = universe.bounds()
        gaps = []
        cur, cur_closed = lo, True
        for iv in self.intervals:
            gaps.append(Interval(cur, iv.lo, cur_closed, not iv.lo_closed))
            cur, cur_closed = iv.hi, not iv.hi_closed
        gaps.append(Interval(cur, hi, cur_closed, True))
        return IntervalSet(tuple(gaps)).intersection(universe)

    def difference(self, other: "IntervalSet") -> "IntervalSet":
        if not self.intervals:
            return self
        lo, hi = self.bounds()
        lo = min(lo, other.bounds()[0]) if other else lo
        hi = max(hi, other.bounds()[1]) if other else hi
        return self.intersection(other.complement(IntervalSet((closed(lo, hi),))))

    def symmetric_difference(self, other: "IntervalSet") -> "IntervalSet":
        return self.difference(other).union(other.difference(self))

    def issubset(self, other: "IntervalSet") -> bool:
        return self.difference(other).is_empty

    __or__ = union
    __and__ = intersection
    __sub__ = difference
    __xor__ = symmetric_difference
    __le__ = issubset

    # affine maps

    def affine_image(self, p, q) -> "IntervalSet":
        p, q = Fraction(p), Fraction(q)
        if p == 0:
            raise ValueError("affine maps need p != 0")
        out = []
        for iv in self.intervals:
            a, b = p * iv.lo + q, p * iv.hi + q
            if p > 0:
                out.append(Interval(a, b, iv.lo_closed, iv.hi_closed))
            else:
                out.append(Interval(b, a, iv.hi_closed, iv.lo_closed))
        return IntervalSet(tuple(out))

    def affine_preimage(self, p, q) -> "IntervalSet":
        p, q = Fraction(p), Fraction(q)
        if p == 0:
            raise ValueError("affine maps need p != 0")
        return self.affine_image(1 / p, -q / p)

    # serialization

    def to_json(self) -> list:
        """``["num/den", "num/den"]`` per closed interval; other intervals add a
        bracket string such as ``"()"`` or ``"[)"``."""
        out = []
        for iv in self.intervals:
            pair = [format_rational(iv.lo), format_rational(iv.hi)]
            if not (iv.lo_closed and iv.hi_closed):
                pair.append(iv.brackets())
            out.append(pair)
        return out

    @classmethod
    def from_json(cls, data: list) -> "IntervalSet":
        items = []
        for entry in data:
            lo, hi = parse_rational(str(entry[0])), parse_rational(str(entry[1]))
            b = entry[2] if len(entry) > 2 else "[]"
            if len(b) != 2 or b[0] not in "[(" or b[1] not in ")]":
                raise ValueError(f"bad bracket string {b!r}")
            items.append(Interval(lo, hi, b[0] == "[", b[1] == "]"))
        return cls(tuple(items))

    def __str__(self) -> str:
        if not self.intervals:
            return "{}"
        return " ∪ ".join(str(iv) for iv in self.intervals)
