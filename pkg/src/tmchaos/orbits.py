"""Rationalized orbits and their analysis.

An :class:`Orbit` is a finite prefix of a sequence of exact rationals.  The
analyses here work at a stated tolerance ``eps``:

* :func:`classify` separates halting, periodic, Cauchy-like and
  multi-cluster tails;
* :func:`sequence_profile` estimates the accumulation points of a tail and
  which neighbourhood each element visits;
* :func:`detect_sensitivity` searches for two close points whose futures
  separate by more than ``eps``;
* :func:`order_break_scan` finds departures from the cyclic visit order;
* :func:`measure` is the exact volume of a box cut down to the ordered
  region ``a1 <= a2 <= ... <= an``.

Exact comparisons are done on integer numerators over a common denominator.
Float copies feed the compiled pair scan, with any comparison close to
``eps`` re-checked exactly.
"""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence, overload

import numpy as np

from . import kernels
from .machine import TuringMachine, execute
from .rationalize import AlphabetMap, godel_of_digits

DEFAULT_EPS = Fraction(1, 50)
DEFAULT_TAIL = Fraction(1, 2)
DEFAULT_HORIZON = 8
MIN_CLASSIFY_LENGTH = 8


class RationalSequence(Sequence[Fraction]):
    """Immutable sequence of exact rationals stored as numerator/denominator
    integers; :class:`~fractions.Fraction` objects are built on access."""

    __slots__ = ("_nums", "_dens", "_base", "_exps", "_cache")

    def __init__(self, nums: Sequence[int], dens: Sequence[int] | None = None, *,
                 base: int | None = None, exps: Sequence[int] | None = None):
        if dens is None and (base is None or exps is None):
            raise ValueError("give denominators or base and exponents")
        self._nums = list(nums)
        self._dens = list(dens) if dens is not None else None
        self._base = base
        self._exps = list(exps) if exps is not None else None
        self._cache: dict[int, Fraction] = {}

    @classmethod
    def from_values(cls, values: Iterable) -> "RationalSequence":
        fr = [Fraction(v) for v in values]
        return cls([f.numerator for f in fr], [f.denominator for f in fr])

    @classmethod
    def from_powers(cls, nums: Sequence[int], exps: Sequence[int], base: int) -> "RationalSequence":
        """Values ``nums[k] / base**exps[k]``."""
        return cls(nums, base=base, exps=exps)

    def _den(self, k: int) -> int:
        if self._dens is not None:
            return self._dens[k]
        return self._base ** self._exps[k]

    def __len__(self) -> int:
        return len(self._nums)

    @overload
    def __getitem__(self, k: int) -> Fraction: ...
    @overload
    def __getitem__(self, k: slice) -> "RationalSequence": ...

    def __getitem__(self, k):
        if isinstance(k, slice):
            if self._dens is not None:
                return RationalSequence(self._nums[k], self._dens[k])
            return RationalSequence(self._nums[k], base=self._base, exps=self._exps[k])
        if k < 0:
            k += len(self._nums)
        if not 0 <= k < len(self._nums):
            raise IndexError(k)
        f = self._cache.get(k)
        if f is None:
            f = self._cache[k] = Fraction(self._nums[k], self._den(k))
        return f

    def __eq__(self, other) -> bool:
        if not isinstance(other, Sequence):
            return NotImplemented
        return len(other) == len(self) and all(a == b for a, b in zip(self, other))

    def __repr__(self) -> str:
        head = ", ".join(str(v) for v in self[:4])
        more = ", ..." if len(self) > 4 else ""
        return f"RationalSequence([{head}{more}], len={len(self)})"

    def floats(self) -> np.ndarray:
        return np.array([n / self._den(k) for k, n in enumerate(self._nums)], dtype=np.float64)

    def keys(self) -> tuple[list[int], int]:
        """Integer numerators over one common denominator ``D``."""
        if self._dens is None:
            top = max(self._exps, default=0)
            b = self._base
            return [n * b ** (top - e) for n, e in zip(self._nums, self._exps)], b ** top
        D = math.lcm(*self._dens) if self._dens else 1
        return [n * (D // d) for n, d in zip(self._nums, self._dens)], D


@dataclass(frozen=True)
class Orbit:
    values: RationalSequence
    source: str = "explicit"  # "machine" | "explicit" | "learning"
    truncated: bool = True
    period: tuple[int, int] | None = None  # (preperiod, period)
    outcome: str | None = None

    def __post_init__(self) -> None:
        if not isinstance(self.values, RationalSequence):
            object.__setattr__(self, "values", RationalSequence.from_values(self.values))

    @classmethod
    def explicit(cls, values: Iterable, truncated: bool = True) -> "Orbit":
        return cls(RationalSequence.from_values(values), "explicit", truncated)

    def __len__(self) -> int:
        return len(self.values)

    def tail_start(self, tail_fraction=DEFAULT_TAIL) -> int:
        return tail_start(len(self.values), tail_fraction)

    def unrolled(self, length: int) -> "Orbit":
        """For a periodic orbit, extend the stored cycle to ``length`` values."""
        if self.period is None:
            raise ValueError("only periodic orbits can be unrolled")
        pre, per = self.period
        vals = list(self.values[: pre + per])
        while len(vals) < length:
            vals.append(vals[pre + (len(vals) - pre) % per])
        return Orbit(RationalSequence.from_values(vals), self.source, True, self.period, self.outcome)


def tail_start(length: int, tail_fraction=DEFAULT_TAIL) -> int:
    tf = Fraction(tail_fraction)
    if not 0 < tf <= 1:
        raise ValueError("tail_fraction must lie in (0, 1]")
    tail_len = max(1, math.ceil(length * tf))
    return max(0, length - tail_len)


###############################################################################
# orbits of machines
###############################################################################


def orbit_of(machine: TuringMachine, word: str = "", fuel: int = 1000,
             amap: AlphabetMap | None = None, detect_loops: bool = True) -> Orbit:
    """Rationalized tape after every step of a run, updated incrementally."""
    amap = amap or machine.alphabet_map()
    ex = execute(machine, word, fuel, detect_loops)
    b = amap.base
    digit = [amap.digit_of[s] for s in machine.kernel_symbols]
    cells = [digit[int(v)] for v in ex.initial] + [digit[0]] * (fuel + 2)
    kind = [int(v) for v in ex.initial] + [0] * (fuel + 2)
    rightmost = max((k for k, v in enumerate(kind) if v), default=-1)

    powers = [1]

    def pw(k: int) -> int:
        while len(powers) <= k:
            powers.append(powers[-1] * b)
        return powers[k]

    n = max(rightmost + 1, 0)
    G = godel_of_digits(cells[:n], b)
    nums, exps = [G], [n]
    heads, wcell, wnew = ex.heads.tolist(), ex.wcell.tolist(), ex.wnew.tolist()
    for t in range(1, len(heads)):
        c, new = wcell[t], wnew[t]
        d_new = digit[new]
        if c < n:
            G += (d_new - cells[c]) * pw(n - 1 - c)
        cells[c] = d_new
        kind[c] = new
        if new and c > rightmost:
            rightmost = c
        elif not new and c == rightmost:
            while rightmost >= 0 and not kind[rightmost]:
                rightmost -= 1
        n2 = max(rightmost + 1, heads[t])
        if n2 > n:
            G = G * pw(n2 - n) + godel_of_digits(cells[n:n2], b)
        elif n2 < n:
            G //= pw(n - n2)
        n = n2
        nums.append(G)
        exps.append(n)

    out = ex.outcome
    period = (out.preperiod, out.period) if out.kind == "looped" else None
    return Orbit(RationalSequence.from_powers(nums, exps, b), "machine",
                 truncated=out.kind == "fuel_exhausted", period=period, outcome=out.kind)


###############################################################################
# classification and profiles
###############################################################################


@dataclass(frozen=True)
class SequenceProfile:
    accumulation_points: tuple[Fraction, ...]
    eps: Fraction
    tail_start: int
    visit_pattern: tuple[int, ...]  # cluster index per tail element, -1 if unassigned

    @property
    def dimension(self) -> int:
        return len(self.accumulation_points)

    @property
    def unassigned(self) -> int:
        return sum(1 for v in self.visit_pattern if v < 0)

    def representation(self) -> tuple[Fraction, ...]:
        return self.accumulation_points

    def min_separation(self) -> Fraction | None:
        pts = self.accumulation_points
        if len(pts) < 2:
            return None
        return min(b - a for a, b in zip(pts, pts[1:]))


@dataclass(frozen=True)
class OrbitClass:
    kind: str  # finite_halt | eventually_periodic | cauchy | non_cauchy | inconclusive
    preperiod: int | None = None
    period: int | None = None
    limit_estimate: Fraction | None = None
    profile: SequenceProfile | None = None
    reason: str | None = None


def _check_eps(eps) -> Fraction:
    eps = Fraction(eps)
    if eps <= 0:
        raise ValueError("eps must be positive")
    return eps


class _Tail:
    """Exact integer view of a tail: ``value_k == keys[k] / D``."""

    def __init__(self, values: RationalSequence):
        self.values = values
        self.keys, self.D = values.keys()
        self.order = sorted(range(len(self.keys)), key=self.keys.__getitem__)

    def within(self, diff: int, eps: Fraction) -> bool:
        # |diff| / D <= eps
        return abs(diff) * eps.denominator <= eps.numerator * self.D

    def below(self, diff: int, eps: Fraction) -> bool:
        return abs(diff) * eps.denominator < eps.numerator * self.D

    def clusters(self, eps: Fraction) -> list[list[int]]:
        """eps-linkage: neighbours in sorted order at most eps apart share a cluster."""
        out: list[list[int]] = []
        prev = None
        for k in self.order:
            if prev is None or not self.within(self.keys[k] - self.keys[prev], eps):
                out.append([])
            out[-1].append(k)
            prev = k
        return out

    def diameter_below(self, idx: Sequence[int], eps: Fraction) -> bool:
        ks = [self.keys[k] for k in idx]
        return self.below(max(ks) - min(ks), eps)


def _profile(tail: _Tail, eps: Fraction, start: int) -> SequenceProfile:
    groups = [sorted(g) for g in tail.clusters(eps)]
    # estimate each accumulation point by the most recently visited member
    merged = True
    while merged and len(groups) > 1:
        groups.sort(key=lambda g: tail.keys[g[-1]])
        merged = False
        for a in range(len(groups) - 1):
            ka, kb = tail.keys[groups[a][-1]], tail.keys[groups[a + 1][-1]]
            if tail.within(kb - ka, 2 * eps):
                groups[a] = sorted(groups[a] + groups.pop(a + 1))
                merged = True
                break
    groups.sort(key=lambda g: tail.keys[g[-1]])
    est = [tail.keys[g[-1]] for g in groups]
    pattern = []
    for k in range(len(tail.keys)):
        v = tail.keys[k]
        pos = bisect.bisect_left(est, v)
        hit = -1
        for c in (pos - 1, pos):
            if 0 <= c < len(est) and tail.within(v - est[c], eps):
                hit = c
                break
        pattern.append(hit)
    points = tuple(tail.values[g[-1]] for g in groups)
    return SequenceProfile(points, eps, start, tuple(pattern))


def sequence_profile(orbit: Orbit, eps=DEFAULT_EPS, tail_fraction=DEFAULT_TAIL) -> SequenceProfile:
    """Accumulation-point estimates of the tail, pairwise more than ``2*eps``
    apart, with the cluster visited by each tail element."""
    eps = _check_eps(eps)
    start = orbit.tail_start(tail_fraction)
    prof = _profile(_Tail(orbit.values[start:]), eps, start)
    if prof.unassigned == len(prof.visit_pattern):
        raise ValueError(f"no tail element lies within eps={eps} of an estimate; try a larger eps")
    return prof


def classify(orbit: Orbit, eps=DEFAULT_EPS, tail_fraction=DEFAULT_TAIL) -> OrbitClass:
    eps = _check_eps(eps)
    if orbit.period is not None:
        return OrbitClass("eventually_periodic", preperiod=orbit.period[0], period=orbit.period[1])
    if not orbit.truncated:
        return OrbitClass("finite_halt")
    L = len(orbit)
    if L < MIN_CLASSIFY_LENGTH:
        return OrbitClass("inconclusive", reason=f"orbit length {L} < {MIN_CLASSIFY_LENGTH}")
    start = orbit.tail_start(tail_fraction)
    tail = _Tail(orbit.values[start:])
    counts = {len(tail.clusters(e)) for e in (eps, eps * Fraction(9, 10), eps * Fraction(11, 10))}
    if len(counts) > 1:
        return OrbitClass("inconclusive", reason="cluster count changes under a 10% change of eps")
    (count,) = counts
    m = len(tail.keys)
    if count == 1:
        quarter = range(m - max(1, math.ceil(m / 4)), m)
        if tail.diameter_below(range(m), eps) and tail.diameter_below(quarter, eps / 4):
            return OrbitClass("cauchy", limit_estimate=orbit.values[L - 1])
        return OrbitClass("inconclusive", reason="single cluster without contraction of the tail")
    prof = _profile(tail, eps, start)
    if prof.unassigned:
        return OrbitClass("inconclusive", profile=prof,
                          reason=f"{prof.unassigned} tail elements within eps of no accumulation estimate")
    if prof.dimension < 2:
        return OrbitClass("inconclusive", profile=prof, reason="clusters merge into one without contraction")
    return OrbitClass("non_cauchy", profile=prof)


###############################################################################
# sensitive dependence
###############################################################################


@dataclass(frozen=True)
class ChaosVerdict:
    kind: str  # chaotic | non_sensitive | inconclusive
    eps: Fraction
    witness: tuple[int, int] | None = None
    divergence_step: int | None = None
    order_breaks: tuple[int, ...] = ()
    reason: str | None = None


def detect_sensitivity(orbit: Orbit, eps=DEFAULT_EPS, horizon: int = DEFAULT_HORIZON,
                       start: int = 0, profile: SequenceProfile | None = None) -> ChaosVerdict:
    """Lexicographically first ``(i, j, n)`` with ``|x_i - x_j| < eps`` and
    ``|x_{i+n} - x_{j+n}| > eps`` for ``1 <= n <= horizon``, over indices
    ``>= start``.  Witness indices are absolute orbit indices."""
    eps = _check_eps(eps)
    if horizon < 1:
        raise ValueError("horizon must be positive")
    seg = orbit.values[start:]
    if len(seg) < 2 * horizon:
        raise ValueError(f"need at least 2*horizon={2 * horizon} values, got {len(seg)}")
    breaks: tuple[int, ...] = ()
    if profile is not None and profile.dimension >= 2:
        try:
            breaks = tuple(order_break_scan(profile))
        except ValueError:
            breaks = ()
    keys, D = seg.keys()
    en, ed = eps.numerator, eps.denominator

    def resolve(kind: str, a: int, b: int) -> bool:
        lhs = abs(keys[a] - keys[b]) * ed
        rhs = en * D
        return lhs < rhs if kind == "lt" else lhs > rhs

    status, i, j, n = kernels.sensitivity_scan(seg.floats(), float(eps), horizon, resolve)
    if status == kernels.SCAN_CHAOTIC:
        return ChaosVerdict("chaotic", eps, (start + i, start + j), n, breaks)
    if status == kernels.SCAN_NON_SENSITIVE:
        return ChaosVerdict("non_sensitive", eps, order_breaks=breaks)
    return ChaosVerdict("inconclusive", eps, order_breaks=breaks, reason="no close pairs at eps")


def brute_force_sensitivity(values: Sequence, eps, horizon: int) -> tuple[str, tuple[int, int, int] | None]:
    """Reference triple loop over exact rationals."""
    vals = [Fraction(v) for v in values]
    eps = Fraction(eps)
    L = len(vals)
    eligible = False
    for i in range(L):
        for j in range(i + 1, L):
            if abs(vals[i] - vals[j]) >= eps or j + 1 >= L:
                continue
            eligible = True
            for n in range(1, horizon + 1):
                if j + n >= L:
                    break
                if abs(vals[i + n] - vals[j + n]) > eps:
                    return "chaotic", (i, j, n)
    return ("non_sensitive" if eligible else "inconclusive"), None


def order_break_scan(profile: SequenceProfile | Sequence[int]) -> list[int]:
    """Indices of the visit pattern where a run of out-of-order transitions begins.

    The cyclic order is read off the first full cycle (up to the first
    revisited cluster); a transition is in order when it moves to the
    successor of the previous cluster in that cycle.
    """
    if isinstance(profile, SequenceProfile):
        if profile.dimension < 2:
            raise ValueError("order breaks need at least two accumulation points")
        pattern = list(profile.visit_pattern)
    else:
        pattern = list(profile)
    seen: dict[int, int] = {}
    k = None
    for t, c in enumerate(pattern):
        if c in seen:
            k = t
            break
        seen[c] = t
    if k is None:
        raise ValueError("visit pattern is shorter than one full cycle")
    cycle = pattern[seen[pattern[k]]:k]
    succ = {c: cycle[(p + 1) % len(cycle)] for p, c in enumerate(cycle)}
    breaks = []
    in_order = True
    for t in range(k + 1, len(pattern)):
        prev, cur = pattern[t - 1], pattern[t]
        ok = prev >= 0 and succ.get(prev) == cur
        if not ok and in_order:
            breaks.append(t)
        in_order = ok
    return breaks


###############################################################################
# measure over the sequences space
###############################################################################


def _check_boxes(boxes) -> list[tuple[Fraction, Fraction]]:
    out = []
    if len(boxes) < 1:
        raise ValueError("need at least one box")
    for k, box in enumerate(boxes):
        try:
            lo, hi = box
        except (TypeError, ValueError) as exc:
            raise ValueError(f"box {k} is not a (lo, hi) pair") from exc
        lo, hi = Fraction(lo), Fraction(hi)
        if lo > hi:
            raise ValueError(f"box {k} has lo > hi")
        out.append((lo, hi))
    return out


def _peval(poly: list[Fraction], t: Fraction) -> Fraction:
    acc = Fraction(0)
    for c in reversed(poly):
        acc = acc * t + c
    return acc


def _pint(poly: list[Fraction]) -> list[Fraction]:
    return [Fraction(0)] + [c / (k + 1) for k, c in enumerate(poly)]


def measure(boxes: Sequence[tuple]) -> Fraction:
    """Exact volume of ``{a in prod [lo_k, hi_k] : a_1 <= ... <= a_n}``.

    ``F_k(t)`` is the volume of the first ``k`` coordinates constrained to
    be ordered and ``<= t``; it is piecewise polynomial between the box
    endpoints and each step integrates the previous one exactly.
    """
    boxes = _check_boxes(boxes)
    breaks = sorted({v for box in boxes for v in box})
    # segment s spans [breaks[s], breaks[s+1]]; polynomials in absolute t
    nseg = len(breaks) - 1
    lo1, hi1 = boxes[0]
    F: list[list[Fraction]] = []
    for s in range(nseg):
        a, b = breaks[s], breaks[s + 1]
        if b <= lo1:
            F.append([Fraction(0)])
        elif a >= hi1:
            F.append([hi1 - lo1])
        else:
            F.append([-lo1, Fraction(1)])
    right = hi1 - lo1  # value beyond the last break
    for lo, hi in boxes[1:]:
        G: list[list[Fraction]] = []
        acc = Fraction(0)
        for s in range(nseg):
            a, b = breaks[s], breaks[s + 1]
            if b <= lo or a >= hi:
                G.append([acc])
                continue
            P = _pint(F[s])
            base = acc - _peval(P, a)
            G.append([P[0] + base] + P[1:])
            acc = _peval(P, b) + base
        F = G
        right = acc
    if nseg == 0:
        return Fraction(0)  # every box is the same single point
    return right


def measure_monte_carlo(boxes: Sequence[tuple], samples: int = 1_000_000, seed: int = 0,
                        chunk: int = 1_000_000) -> float:
    """Hit-or-miss estimate of :func:`measure` from uniform samples in the box."""
    boxes = _check_boxes(boxes)
    lo = np.array([float(a) for a, _ in boxes])
    hi = np.array([float(b) for _, b in boxes])
    volume = float(np.prod(hi - lo))
    if volume == 0.0:
        return 0.0
    rng = np.random.Generator(np.random.Philox(seed))
    hits = 0
    done = 0
    while done < samples:
        m = min(chunk, samples - done)
        pts = lo + (hi - lo) * rng.random((m, len(boxes)))
        hits += kernels.count_ordered(pts)
        done += m
    return volume * hits / samples
