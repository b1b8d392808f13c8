import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from privwave.classifier import (
    DecisionTree,
    TrainingSet,
    candidate_splits,
    predict,
    predict_points,
    split_train_test,
    train,
    training_set,
)
from privwave.dp import SeededRng
from privwave.grid import PointSet
from privwave.wavecluster import GridClustering


def H(labels):
    n = len(labels)
    if n == 0:
        return 0.0
    return -sum((c / n) * math.log2(c / n) for c in (labels.count(v) for v in set(labels)))


def brute_force_split(x, y, t):
    left = [b for a, b in zip(x, y) if a <= t]
    right = [b for a, b in zip(x, y) if a > t]
    n = len(y)
    gain = H(list(y)) - len(left) / n * H(left) - len(right) / n * H(right)
    split_info = H(["L"] * len(left) + ["R"] * len(right))
    return gain, gain / split_info


@settings(max_examples=150, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 6), st.integers(0, 2)), min_size=2, max_size=20))
def test_gain_ratio_matches_entropy_oracle(samples):
    x = np.array([s[0] for s in samples], dtype=float)
    y = [s[1] for s in samples]
    _, y_idx = np.unique(y, return_inverse=True)
    thresholds, gains, ratios = candidate_splits(x, y_idx, int(y_idx.max()) + 1, 1)
    distinct = sorted(set(x))
    assert thresholds.tolist() == [(a + b) / 2 for a, b in zip(distinct, distinct[1:])]
    for t, g, r in zip(thresholds, gains, ratios):
        bg, br = brute_force_split(x, y, t)
        assert g == pytest.approx(bg, abs=1e-9)
        assert r == pytest.approx(br, abs=1e-9)


def test_single_class_is_a_leaf():
    tree = train(TrainingSet([[0.1, 0.2], [0.5, 0.9], [0.7, 0.3]], [4, 4, 4]))
    assert tree.depth() == 0
    assert predict(tree, [[0.0, 0.0], [1.0, 1.0]]).tolist() == [4, 4]


def test_empty_training_set_rejected():
    with pytest.raises(ValueError):
        TrainingSet(np.empty((0, 2)), [])


def test_separable_on_x():
    X = [[0.1, 0.3], [0.2, 0.8], [0.3, 0.5], [0.7, 0.2], [0.8, 0.9], [0.9, 0.6]]
    y = [1, 1, 1, 2, 2, 2]
    tree = train(TrainingSet(X, y))
    assert tree.depth() == 1
    assert tree.root.feature == 0 and tree.root.threshold == pytest.approx(0.5)
    assert predict(tree, X).tolist() == y


def test_xor_quadrants_need_depth_two():
    X, y = [], []
    for cls, (cx, cy) in enumerate([(0.25, 0.25), (0.75, 0.75), (0.25, 0.75), (0.75, 0.25)], start=1):
        for dx in (-0.1, 0.1):
            for dy in (-0.1, 0.1):
                X.append([cx + dx, cy + dy])
                y.append(cls)
    tree = train(TrainingSet(X, y))
    assert tree.depth() == 2
    assert predict(tree, X).tolist() == y


def test_threshold_ties_route_left():
    tree = train(TrainingSet([[0.0, 0.0], [1.0, 0.0]], [1, 2]))
    assert tree.root.threshold == 0.5
    assert predict(tree, [[0.5, 0.3]]).tolist() == [1]


def test_majority_ties_go_to_smaller_class():
    tree = train(TrainingSet([[0.2, 0.5], [0.2, 0.5]], [3, 1]))
    assert predict(tree, [[0.9, 0.9]]).tolist() == [1]


def test_low_gain_splits_are_ineligible():
    # isolating the first point has the best ratio but a below-average gain
    x = np.arange(12.0)
    y = np.array([1, 0, 1, 1, 1, 0, 1, 0, 0, 0, 1, 0])
    thresholds, gains, ratios = candidate_splits(x, y, 2, 1)
    positive = gains > 1e-12
    mean_gain = gains[positive].mean()
    assert gains[np.argmax(ratios)] < mean_gain
    eligible = positive & (gains >= mean_gain - 1e-12)
    expected = thresholds[eligible][np.argmax(ratios[eligible])]
    assert expected == 4.5  # ties on ratio go to the smaller threshold
    tree = train(TrainingSet(np.column_stack([x / 12, np.zeros(12)]), y), max_depth=1)
    assert tree.root.threshold == pytest.approx(expected / 12)


def test_max_depth_and_min_leaf():
    rng = np.random.default_rng(0)
    X = rng.random((200, 2))
    y = rng.integers(0, 3, 200)
    assert train(TrainingSet(X, y), max_depth=3).depth() <= 3
    tree = train(TrainingSet(X, y), min_leaf=20)

    def leaf_sizes(node, idx):
        if node.is_leaf:
            return [idx.size]
        left = X[idx, node.feature] <= node.threshold
        return leaf_sizes(node.left, idx[left]) + leaf_sizes(node.right, idx[~left])

    assert min(leaf_sizes(tree.root, np.arange(200))) >= 20


def test_json_round_trip():
    X = [[0.1, 0.3], [0.2, 0.8], [0.7, 0.2], [0.8, 0.9]]
    tree = train(TrainingSet(X, [1, 2, 3, 4]))
    again = DecisionTree.from_json(tree.to_json())
    assert again.to_json() == tree.to_json()
    assert predict(again, X).tolist() == [1, 2, 3, 4]


def test_training_set_from_clustering():
    gc = GridClustering(np.array([[0, 1], [2, 2]]))
    ts = training_set(gc)
    np.testing.assert_allclose(ts.X, [[0.25, 0.25], [0.25, 0.75], [0.75, 0.25], [0.75, 0.75]])
    assert ts.y.tolist() == [0, 1, 2, 2]
    tree = train(ts)
    assert predict(tree, ts.X).tolist() == [0, 1, 2, 2]


def test_predict_points_normalizes_by_bounds():
    gc = GridClustering(np.array([[1, 0], [0, 2]]))
    tree = train(training_set(gc))
    d = PointSet([(10.0, 100.0), (19.0, 199.0)], (10.0, 20.0, 100.0, 200.0))
    assert predict_points(tree, d).tolist() == [1, 2]


def test_split_sizes_and_determinism():
    d = PointSet(np.arange(200.0).reshape(100, 2))
    tr, te = split_train_test(d, 0.9, SeededRng(1))
    assert (len(tr), len(te)) == (90, 10)
    tr2, _ = split_train_test(d, 0.9, SeededRng(1))
    np.testing.assert_array_equal(tr.points, tr2.points)
    union = np.vstack([tr.points, te.points])
    assert sorted(map(tuple, union)) == sorted(map(tuple, d.points))
    assert tr.bounds == d.bounds


@pytest.mark.parametrize("fraction", [0.0, 1.0, 0.001])
def test_split_rejects_degenerate(fraction):
    with pytest.raises(ValueError):
        split_train_test(PointSet(np.arange(20.0).reshape(10, 2)), fraction, SeededRng(0))
