"""Gain-ratio decision tree for clustering-first-then-classification evaluation."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .grid import PointSet
from .wavecluster import GridClustering


@dataclass
class TrainingSet:
    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float).reshape(-1, 2)
        self.y = np.asarray(self.y, dtype=np.int64)
        if len(self.X) == 0 or len(self.X) != len(self.y):
            raise ValueError("training set needs at least one labeled sample")


def normalize(points: np.ndarray, bounds) -> np.ndarray:
    xmin, xmax, ymin, ymax = bounds
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    return np.column_stack([(pts[:, 0] - xmin) / (xmax - xmin), (pts[:, 1] - ymin) / (ymax - ymin)])


def training_set(clustering: GridClustering) -> TrainingSet:
    """One sample per subband grid at its normalized cell center; noise grids get class 0."""
    n1, n2 = clustering.dims
    ii, jj = np.meshgrid(np.arange(n1), np.arange(n2), indexing="ij")
    X = np.column_stack([(ii.ravel() + 0.5) / n1, (jj.ravel() + 0.5) / n2])
    return TrainingSet(X, clustering.labels.ravel())


@dataclass
class Node:
    label: int
    feature: int | None = None
    threshold: float | None = None
    left: "Node | None" = None
    right: "Node | None" = None

    @property
    def is_leaf(self) -> bool:
        return self.feature is None

    def to_dict(self) -> dict:
        if self.is_leaf:
            return {"class": self.label}
        return {
            "feature": "xy"[self.feature],
            "threshold": self.threshold,
            "class": self.label,
            "left": self.left.to_dict(),
            "right": self.right.to_dict(),
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "Node":
        if "feature" not in raw:
            return cls(int(raw["class"]))
        return cls(
            int(raw["class"]),
            "xy".index(raw["feature"]),
            float(raw["threshold"]),
            cls.from_dict(raw["left"]),
            cls.from_dict(raw["right"]),
        )


@dataclass
class DecisionTree:
    root: Node

    def depth(self) -> int:
        def walk(n):
            return 0 if n.is_leaf else 1 + max(walk(n.left), walk(n.right))
        return walk(self.root)

    def leaves(self) -> int:
        def walk(n):
            return 1 if n.is_leaf else walk(n.left) + walk(n.right)
        return walk(self.root)

    def to_json(self) -> str:
        return json.dumps(self.root.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "DecisionTree":
        return cls(Node.from_dict(json.loads(text)))


def entropy(counts) -> np.ndarray:
    """Base-2 entropy along the last axis of a count array."""
    counts = np.asarray(counts, dtype=float)
    n = counts.sum(axis=-1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        p = np.where(n > 0, counts / n, 0.0)
        terms = np.where(p > 0, -p * np.log2(p), 0.0)
    return terms.sum(axis=-1)


def _majority(counts: np.ndarray, classes: np.ndarray) -> int:
    # argmax returns the first maximum, i.e. the smallest class id
    return int(classes[int(np.argmax(counts))])


def candidate_splits(x: np.ndarray, y_idx: np.ndarray, n_classes: int, min_leaf: int):
    """Midpoint thresholds with their (gain, gain ratio) for one feature."""
    order = np.argsort(x, kind="stable")
    xs, ys = x[order], y_idx[order]
    n = xs.size
    boundary = np.nonzero(xs[1:] > xs[:-1])[0]  # split after position b
    n_left = boundary + 1
    keep = (n_left >= min_leaf) & (n - n_left >= min_leaf)
    boundary, n_left = boundary[keep], n_left[keep]
    if boundary.size == 0:
        return np.empty(0), np.empty(0), np.empty(0)
    onehot = np.zeros((n, n_classes))
    onehot[np.arange(n), ys] = 1
    cum = np.cumsum(onehot, axis=0)
    left = cum[boundary]
    right = cum[-1] - left
    wl = n_left / n
    wr = 1 - wl
    gain = entropy(cum[-1]) - wl * entropy(left) - wr * entropy(right)
    split_info = -(wl * np.log2(wl) + wr * np.log2(wr))
    thresholds = (xs[boundary] + xs[boundary + 1]) / 2
    return thresholds, gain, gain / split_info


def train(ts: TrainingSet, max_depth: int = 12, min_leaf: int = 1) -> DecisionTree:
    """Greedy top-down induction maximizing gain ratio.

    As in C4.5, only tests whose gain is at least the average gain of all
    positive-gain candidates at the node are eligible. Ties go to feature x,
    then the smaller threshold.
    """
    if min_leaf < 1 or max_depth < 0:
        raise ValueError("min_leaf must be >= 1 and max_depth >= 0")
    classes, y_idx = np.unique(ts.y, return_inverse=True)
    n_classes = classes.size

    def build(idx: np.ndarray, depth: int) -> Node:
        counts = np.bincount(y_idx[idx], minlength=n_classes)
        node = Node(_majority(counts, classes))
        if depth >= max_depth or np.count_nonzero(counts) <= 1 or idx.size < 2 * min_leaf:
            return node
        cands = []
        for f in (0, 1):
            th, gain, ratio = candidate_splits(ts.X[idx, f], y_idx[idx], n_classes, min_leaf)
            cands.extend((f, t, g, r) for t, g, r in zip(th, gain, ratio) if g > 1e-12)
        if not cands:
            return node
        mean_gain = math.fsum(c[2] for c in cands) / len(cands)
        eligible = [c for c in cands if c[2] >= mean_gain - 1e-12]
        f, t, _, _ = max(eligible, key=lambda c: (c[3], -c[0], -c[1]))
        go_left = ts.X[idx, f] <= t
        node.feature, node.threshold = f, float(t)
        node.left = build(idx[go_left], depth + 1)
        node.right = build(idx[~go_left], depth + 1)
        return node

    return DecisionTree(build(np.arange(len(ts.y)), 0))


def predict(tree: DecisionTree, X) -> np.ndarray:
    """Class per row of ``X`` (normalized coordinates); ties at a threshold go left."""
    X = np.asarray(X, dtype=float).reshape(-1, 2)
    out = np.empty(len(X), dtype=np.int64)

    def route(node: Node, idx: np.ndarray):
        if idx.size == 0:
            return
        if node.is_leaf:
            out[idx] = node.label
            return
        left = X[idx, node.feature] <= node.threshold
        route(node.left, idx[left])
        route(node.right, idx[~left])

    route(tree.root, np.arange(len(X)))
    return out


def predict_points(tree: DecisionTree, d: PointSet) -> np.ndarray:
    return predict(tree, normalize(d.points, d.bounds))


def split_train_test(d: PointSet, fraction: float, rng) -> tuple[PointSet, PointSet]:
    if not 0 < fraction < 1:
        raise ValueError(f"train fraction must lie in (0, 1), got {fraction}")
    n = len(d)
    n_train = int(math.floor(fraction * n + 0.5))
    if not 0 < n_train < n:
        raise ValueError(f"a {fraction} split of {n} points leaves an empty side")
    perm = rng.permutation(n)
    return d.subset(np.sort(perm[:n_train])), d.subset(np.sort(perm[n_train:]))
