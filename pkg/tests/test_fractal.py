import math
import random
from fractions import Fraction
from pathlib import Path

import pytest

from tmchaos import kernels
from tmchaos.fractal import (CANTOR_MAPS, AffineMap, DecisionNode, DecisionTree, SimilarityMapSet,
                             Threshold, ThresholdDecider, TreeError, accept_set, box_count,
                             box_dimension, cantor_prefractal, check_self_similar, evaluate,
                             geometric_scales, load_tree, tree_from_dict)
from tmchaos.intervals import IntervalSet, open_

DATA = Path(__file__).resolve().parents[1] / "src" / "tmchaos" / "data"
F = Fraction


def half_tree(left=None):
    decider = ThresholdDecider((Threshold(F(1, 2), "right"),), ("l", "1"))
    nodes = {"root": DecisionNode("root", AffineMap(1), decider, left=left)}
    if left:
        nodes[left] = DecisionNode(left, AffineMap(2), ThresholdDecider.constant("1"))
    return DecisionTree(nodes, "root")


def test_constant_deciders():
    reject = DecisionTree.single(ThresholdDecider.constant("0"))
    accept = DecisionTree.single(ThresholdDecider.constant("1"))
    for x in (F(0), F(1, 3), F(1)):
        assert not evaluate(reject, x, 5).accepted
        assert evaluate(accept, x, 5).accepted
    assert accept_set(accept, 3) == IntervalSet.unit()
    assert accept_set(reject, 3).is_empty


def test_missing_child_rejects():
    t = half_tree()
    e = evaluate(t, F(1, 4), 5)
    assert not e.accepted and not e.truncated and e.depth == 1
    assert evaluate(t, F(3, 4), 5).accepted
    assert accept_set(t, 2) == IntervalSet.of((F(1, 2), 1))


def test_child_transform_applied():
    t = half_tree(left="dbl")
    assert evaluate(t, F(1, 4), 5).accepted
    assert accept_set(t, 2) == IntervalSet.unit()


def test_truncation_flag_and_policy():
    tree = load_tree(DATA / "cantor_tree.json")
    e = evaluate(tree, F(1, 4), 3)
    assert e.truncated and e.accepted and e.depth == 3
    strict = DecisionTree(tree.nodes, tree.root, "reject")
    assert not evaluate(strict, F(1, 4), 3).accepted
    assert accept_set(strict, 5).is_empty


def test_transform_leaving_unit_interval_is_an_error():
    t = DecisionTree.single(ThresholdDecider.constant("1"), AffineMap(2))
    with pytest.raises(TreeError, match="outside"):
        evaluate(t, F(3, 4), 2)
    with pytest.raises(ValueError):
        evaluate(t, F(2), 2)


def test_decider_validation():
    with pytest.raises(TreeError):
        ThresholdDecider((Threshold(F(1, 2)),), ("1",))
    with pytest.raises(TreeError):
        ThresholdDecider((Threshold(F(1, 2)), Threshold(F(1, 3))), ("1", "0", "1"))
    with pytest.raises(TreeError):
        ThresholdDecider((), ("x",))
    with pytest.raises(TreeError):
        AffineMap(0)
    with pytest.raises(TreeError, match="unknown child"):
        tree_from_dict({"nodes": {"root": {"decisions": ["l"], "left": "nowhere"}}})
    with pytest.raises(TreeError, match="malformed"):
        tree_from_dict({"nodes": {"root": {}}})


def test_threshold_pieces_partition_unit_interval():
    d = ThresholdDecider((Threshold(F(1, 3), "left"), Threshold(F(2, 3), "right")), ("l", "0", "r"))
    union = IntervalSet()
    for p in d.pieces:
        piece = IntervalSet((p,))
        assert (union & piece).is_empty
        union = union | piece
    assert union == IntervalSet.unit()
    assert d(F(1, 3)) == "l" and d(F(2, 3)) == "r" and d(F(1, 2)) == "0"


def test_depth_bound():
    with pytest.raises(ValueError, match="safety bound"):
        accept_set(load_tree(DATA / "cantor_tree.json"), 25)


def test_cantor_examples():
    assert cantor_prefractal(0) == IntervalSet.unit()
    assert cantor_prefractal(1) == IntervalSet.of((0, F(1, 3)), (F(2, 3), 1))
    assert cantor_prefractal(2) == IntervalSet.of((0, F(1, 9)), (F(2, 9), F(1, 3)), (F(2, 3), F(7, 9)), (F(8, 9), 1))


def test_cantor_backends_agree():
    names = ("numba", "numpy") if kernels.HAS_NUMBA else ("numpy",)
    results = []
    for name in names:
        with kernels.use_backend(name):
            results.append(cantor_prefractal(9))
    assert all(r == results[0] for r in results)


def test_cantor_tree_matches_prefractal():
    tree = load_tree(DATA / "cantor_tree.json")
    for m in range(1, 9):
        assert accept_set(tree, m) == cantor_prefractal(m)


def test_accept_set_agrees_with_evaluate():
    tree = load_tree(DATA / "cantor_tree.json")
    rng = random.Random(4)
    for depth in (1, 3, 6):
        acc = accept_set(tree, depth)
        pts = [F(rng.randrange(0, 3 ** 8 + 1), 3 ** 8) for _ in range(500)]
        pts += [F(rng.randrange(0, 1001), 1000) for _ in range(500)]
        for x in pts:
            assert evaluate(tree, x, depth).accepted == (x in acc)


def test_accept_set_agrees_with_evaluate_on_a_mixed_tree():
    doc = {
        "root": "a", "truncate": "reject",
        "nodes": {
            "a": {"transform": {"p": "1", "q": "0"},
                  "thresholds": [{"at": "1/4", "closed": "left"}, {"at": "1/2", "closed": "right"},
                                 {"at": "3/4", "closed": "left"}],
                  "decisions": ["1", "l", "0", "r"], "left": "b", "right": "c"},
            # b and c map the piece routed to them onto [0, 1]; "a" is the identity
            "b": {"transform": {"p": "-4", "q": "2"},
                  "thresholds": [{"at": "1/2", "closed": "left"}],
                  "decisions": ["1", "l"], "left": "a"},
            "c": {"transform": {"p": "4", "q": "-3"},
                  "thresholds": [{"at": "1/2", "closed": "right"}],
                  "decisions": ["r", "0"], "right": "a"},
        },
    }
    tree = tree_from_dict(doc)
    rng = random.Random(9)
    for depth in (1, 2, 5, 9):
        acc = accept_set(tree, depth)
        assert 0 < acc.total_length() < 1
        for _ in range(1000):
            x = F(rng.randrange(0, 4097), 4096)
            assert evaluate(tree, x, depth).accepted == (x in acc)


def test_self_similarity_examples():
    for m in range(6):
        r = check_self_similar(cantor_prefractal(m), CANTOR_MAPS, cantor_prefractal(m + 1))
        assert r.equal and r.residue.is_empty and not r.degenerate
    r = check_self_similar(IntervalSet.unit(), CANTOR_MAPS)
    assert not r.equal and r.residue == IntervalSet((open_(F(1, 3), F(2, 3)),))
    r = check_self_similar(IntervalSet(), CANTOR_MAPS)
    assert r.equal and r.degenerate


def test_similarity_maps_validated():
    with pytest.raises(ValueError, match="surjective"):
        SimilarityMapSet((AffineMap(-1, 1),))
    with pytest.raises(ValueError, match="into itself"):
        SimilarityMapSet((AffineMap(F(1, 2), F(3, 4)),))


def test_cantor_counting_identities():
    for m in range(8):
        c = cantor_prefractal(m)
        assert len(c) == 2 ** m and c.total_length() == F(2, 3) ** m
        assert cantor_prefractal(m + 1) <= c
        assert all(iv.length == F(1, 3 ** m) for iv in c)


def test_box_counts():
    c = cantor_prefractal(6)
    for j in range(1, 7):
        assert box_count(c, F(1, 3 ** j)) == 2 ** j
    assert box_count(IntervalSet.unit(), F(1, 8)) == 8
    assert box_count(IntervalSet.of((1, 1)), F(1, 8)) == 1
    assert box_count(IntervalSet.of((F(1, 8), F(1, 4))), F(1, 8)) == 1


def test_box_dimension_examples():
    d = box_dimension(cantor_prefractal(10), geometric_scales(3, 1, 10))
    assert abs(d.slope - math.log(2) / math.log(3)) < 0.005
    assert d.counts == tuple(2 ** j for j in range(1, 11))
    assert abs(box_dimension(IntervalSet.unit(), geometric_scales(2, 1, 10)).slope - 1) < 0.01
    assert abs(box_dimension(IntervalSet.of((F(1, 2), F(1, 2))), geometric_scales(2, 1, 10)).slope) < 0.01


def test_box_dimension_errors():
    with pytest.raises(ValueError):
        box_dimension(IntervalSet(), geometric_scales(2, 1, 3))
    with pytest.raises(ValueError):
        box_dimension(IntervalSet.unit(), [F(1, 2)])
