"""Decision trees over [0, 1], Cantor pre-fractals and box counting.

Tree nodes pair an injective rational affine transform with a threshold
decider returning one of ``0`` (reject), ``1`` (accept), ``l`` or ``r``
(continue in a child).  Because both parts are piecewise affine, the set of
inputs accepted within a depth bound is a finite union of intervals and is
computed exactly by pulling threshold pieces back through the transforms.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import kernels
from .intervals import Interval, IntervalSet
from .rationalize import format_rational, parse_rational

DECISIONS = ("0", "1", "l", "r")
MAX_TREE_DEPTH = 24
MAX_CANTOR_DEPTH = 30  # 3**m must fit in int64


class TreeError(ValueError):
    pass


@dataclass(frozen=True)
class AffineMap:
    p: Fraction
    q: Fraction = Fraction(0)

    def __post_init__(self) -> None:
        object.__setattr__(self, "p", Fraction(self.p))
        object.__setattr__(self, "q", Fraction(self.q))
        if self.p == 0:
            raise TreeError("affine transform must have p != 0")

    def __call__(self, x: Fraction) -> Fraction:
        return self.p * x + self.q

    def image(self, s: IntervalSet) -> IntervalSet:
        return s.affine_image(self.p, self.q)

    def preimage(self, s: IntervalSet) -> IntervalSet:
        return s.affine_preimage(self.p, self.q)

    def to_dict(self) -> dict:
        return {"p": format_rational(self.p), "q": format_rational(self.q)}


IDENTITY_MAP = AffineMap(Fraction(1))


@dataclass(frozen=True)
class Threshold:
    at: Fraction
    closed: str = "left"  # which side owns the threshold point


@dataclass(frozen=True)
class ThresholdDecider:
    """Partition of [0, 1] at rational thresholds, one decision per piece."""

    thresholds: tuple[Threshold, ...]
    decisions: tuple[str, ...]
    pieces: tuple[Interval, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        ts = self.thresholds
        if len(self.decisions) != len(ts) + 1:
            raise TreeError(f"{len(ts)} thresholds need {len(ts) + 1} decisions, got {len(self.decisions)}")
        for d in self.decisions:
            if d not in DECISIONS:
                raise TreeError(f"decision {d!r} is not one of {DECISIONS}")
        prev = Fraction(0)
        for t in ts:
            if t.closed not in ("left", "right"):
                raise TreeError(f"threshold side must be 'left' or 'right', got {t.closed!r}")
            if not prev < t.at < 1:
                raise TreeError("thresholds must increase strictly inside (0, 1)")
            prev = t.at
        pieces = []
        lo, lo_closed = Fraction(0), True
        for t in ts:
            pieces.append(Interval(lo, t.at, lo_closed, t.closed == "left"))
            lo, lo_closed = t.at, t.closed == "right"
        pieces.append(Interval(lo, Fraction(1), lo_closed, True))
        object.__setattr__(self, "pieces", tuple(pieces))

    @classmethod
    def constant(cls, decision: str) -> "ThresholdDecider":
        return cls((), (decision,))

    def __call__(self, y: Fraction) -> str:
        for piece, d in zip(self.pieces, self.decisions):
            if piece.contains(y):
                return d
        raise TreeError(f"{y} lies outside [0, 1]")

    def region(self, decision: str) -> IntervalSet:
        return IntervalSet(tuple(p for p, d in zip(self.pieces, self.decisions) if d == decision))


@dataclass(frozen=True)
class DecisionNode:
    name: str
    transform: AffineMap
    decider: ThresholdDecider
    left: str | None = None
    right: str | None = None


@dataclass(frozen=True)
class DecisionTree:
    """Finite template; child references may point back to earlier nodes,
    which unrolls into an infinite tree."""

    nodes: Mapping[str, DecisionNode]
    root: str
    truncate: str = "reject"  # policy when the depth budget runs out
    name: str = "tree"

    def __post_init__(self) -> None:
        if self.root not in self.nodes:
            raise TreeError(f"root {self.root!r} is not a node")
        if self.truncate not in ("accept", "reject"):
            raise TreeError("truncate policy must be 'accept' or 'reject'")
        for node in self.nodes.values():
            for child in (node.left, node.right):
                if child is not None and child not in self.nodes:
                    raise TreeError(f"node {node.name!r} refers to unknown child {child!r}")

    @classmethod
    def single(cls, decider: ThresholdDecider, transform: AffineMap = IDENTITY_MAP,
               truncate: str = "reject") -> "DecisionTree":
        return cls({"root": DecisionNode("root", transform, decider)}, "root", truncate)


def tree_from_dict(doc: dict) -> DecisionTree:
    try:
        nodes = {}
        for name, raw in doc["nodes"].items():
            t = raw.get("transform", {"p": "1", "q": "0"})
            transform = AffineMap(parse_rational(str(t["p"])), parse_rational(str(t.get("q", "0"))))
            ths = tuple(Threshold(parse_rational(str(th["at"])), th.get("closed", "left"))
                        for th in raw.get("thresholds", []))
            decider = ThresholdDecider(ths, tuple(str(d) for d in raw["decisions"]))
            nodes[name] = DecisionNode(name, transform, decider, raw.get("left"), raw.get("right"))
        return DecisionTree(nodes, doc.get("root", "root"), doc.get("truncate", "reject"),
                            doc.get("name", "tree"))
    except (KeyError, TypeError, AttributeError) as exc:
        raise TreeError(f"malformed tree template: {exc!r}") from None


def load_tree(path) -> DecisionTree:
    return tree_from_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class Evaluation:
    accepted: bool
    truncated: bool
    depth: int  # decider evaluations performed


def evaluate(tree: DecisionTree, x, depth_fuel: int) -> Evaluation:
    x = Fraction(x)
    if depth_fuel < 1:
        raise ValueError("depth_fuel must be positive")
    if not 0 <= x <= 1:
        raise ValueError(f"input {x} lies outside [0, 1]")
    node = tree.nodes[tree.root]
    for level in range(1, depth_fuel + 1):
        y = node.transform(x)
        if not 0 <= y <= 1:
            raise TreeError(f"transform of node {node.name!r} maps {x} to {y}, outside [0, 1]")
        d = node.decider(y)
        if d in ("0", "1"):
            return Evaluation(d == "1", False, level)
        child = node.left if d == "l" else node.right
        if child is None:
            return Evaluation(False, False, level)
        node, x = tree.nodes[child], y
    return Evaluation(tree.truncate == "accept", True, depth_fuel)


def accept_set(tree: DecisionTree, depth: int, max_depth: int = MAX_TREE_DEPTH) -> IntervalSet:
    """Inputs in [0, 1] accepted within ``depth`` decider evaluations."""
    if depth < 1:
        raise ValueError("depth must be positive")
    if depth > max_depth:
        raise ValueError(f"depth {depth} exceeds the safety bound {max_depth}")
    unit = IntervalSet.unit()
    memo: dict[tuple[str, int], IntervalSet] = {}

    def go(name: str, k: int) -> IntervalSet:
        if k == 0:
            return unit if tree.truncate == "accept" else IntervalSet()
        key = (name, k)
        if key not in memo:
            node = tree.nodes[name]
            # accepted values of y = transform(x)
            acc = node.decider.region("1")
            for d, child in (("l", node.left), ("r", node.right)):
                if child is not None:
                    acc = acc | (node.decider.region(d) & go(child, k - 1))
            memo[key] = node.transform.preimage(acc) & unit
        return memo[key]

    return go(tree.root, depth)


def cantor_prefractal(m: int, max_depth: int = MAX_CANTOR_DEPTH) -> IntervalSet:
    """Depth-``m`` truncation of the middle-thirds intersection, by direct
    evaluation of every level's constraint on the grid ``3**-m``."""
    if m < 0:
        raise ValueError("m must be non-negative")
    if m > max_depth:
        raise ValueError(f"m={m} exceeds the bound {max_depth}")
    N = 3 ** m
    lo = np.array([0], np.int64)
    hi = np.array([N], np.int64)
    for j in range(1, m + 1):
        # level j keeps [0, 1] minus the open middles ((3k+1)/3^j, (3k+2)/3^j)
        scale = 3 ** (m - j)
        k = np.arange(-1, 3 ** (j - 1), dtype=np.int64)
        plo = np.maximum((3 * k + 2) * scale, 0)
        phi = np.minimum((3 * k + 4) * scale, N)
        lo, hi = kernels.intersect_intervals(lo, hi, plo, phi)
    return IntervalSet(tuple(Interval(Fraction(int(a), N), Fraction(int(b), N)) for a, b in zip(lo, hi)))


@dataclass(frozen=True)
class SimilarityMapSet:
    maps: tuple[AffineMap, ...]

    def __post_init__(self) -> None:
        if not self.maps:
            raise ValueError("need at least one map")
        unit = IntervalSet.unit()
        for f in self.maps:
            img = f.image(unit)
            if not img <= unit:
                raise ValueError(f"map {f} does not send [0, 1] into itself")
            if img == unit:
                raise ValueError(f"map {f} is surjective onto [0, 1]")

    def image(self, s: IntervalSet) -> IntervalSet:
        out = IntervalSet()
        for f in self.maps:
            out = out | f.image(s)
        return out


CANTOR_MAPS = SimilarityMapSet((AffineMap(Fraction(1, 3)), AffineMap(Fraction(1, 3), Fraction(2, 3))))


@dataclass(frozen=True)
class SelfSimilarity:
    equal: bool
    residue: IntervalSet
    degenerate: bool


def check_self_similar(s: IntervalSet, maps: SimilarityMapSet,
                       target: IntervalSet | None = None) -> SelfSimilarity:
    """Compare ``union f(s)`` with ``target`` (default ``s`` itself)."""
    target = s if target is None else target
    residue = maps.image(s) ^ target
    return SelfSimilarity(residue.is_empty, residue, s.is_empty and target.is_empty)


@dataclass(frozen=True)
class BoxDimension:
    slope: float
    scales: tuple[Fraction, ...]
    counts: tuple[int, ...]


def box_count(s: IntervalSet, size: Fraction) -> int:
    """Cells ``[i*size, (i+1)*size)`` meeting ``s`` in positive length; a
    single point counts the cell holding it (the last cell holds 1)."""
    size = Fraction(size)
    ncells = math.ceil(1 / size)
    runs = []
    for iv in s:
        if iv.lo == iv.hi:
            k = min(math.floor(iv.lo / size), ncells - 1)
            runs.append((k, k))
        else:
            a = math.floor(iv.lo / size)
            b = min(math.ceil(iv.hi / size) - 1, ncells - 1)
            runs.append((a, b))
    count = 0
    last = -1
    for a, b in sorted(runs):
        a = max(a, last + 1)
        if b >= a:
            count += b - a + 1
            last = b
    return count


def box_dimension(s: IntervalSet, scales: Sequence) -> BoxDimension:
    if s.is_empty:
        raise ValueError("box dimension of the empty set is undefined")
    if len(scales) < 2:
        raise ValueError("need at least two scales")
    sizes = tuple(Fraction(e) for e in scales)
    if any(not 0 < e <= 1 for e in sizes) or len(set(sizes)) != len(sizes):
        raise ValueError("scales must be distinct and lie in (0, 1]")
    counts = tuple(box_count(s, e) for e in sizes)
    x = np.array([math.log(1 / e) for e in sizes])
    y = np.log(np.array(counts, dtype=float))
    slope = float(np.polyfit(x, y, 1)[0])
    return BoxDimension(slope, sizes, counts)


def geometric_scales(base: int, lo: int, hi: int) -> list[Fraction]:
    return [Fraction(1, base ** j) for j in range(lo, hi + 1)]
