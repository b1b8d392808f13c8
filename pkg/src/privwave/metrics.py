"""Dissimilarity between true and private clusterings.

DSG_C compares significant grids and clusters under an optimal one-to-one
cluster matching. OCM and 2CE compare the predictions of classifiers trained
on each clustering. F-measure is included for contrast: it allows many-to-one
matches and so can score a collapsed clustering highly.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .wavecluster import GridClustering


@dataclass(frozen=True)
class Assignment:
    pairs: list
    total_cost: float


def hungarian_min(cost) -> Assignment:
    """Minimum-cost assignment of min(n, m) row/column pairs."""
    cost = np.asarray(cost, dtype=float)
    if cost.size == 0:
        return Assignment([], 0.0)
    if not np.isfinite(cost).all():
        raise ValueError("cost matrix must be finite")
    rows, cols = linear_sum_assignment(cost)
    pairs = [(int(r), int(c)) for r, c in zip(rows, cols)]
    return Assignment(pairs, float(cost[rows, cols].sum()))


def cluster_distance(ci, cj) -> int:
    ci, cj = set(ci), set(cj)
    return max(len(ci - cj), len(cj - ci))


def matching_cost(truth: list, priv: list) -> float:
    """Minimum M_cost: matched distances plus sizes of unmatched clusters on both sides.

    Shifting each pair's cost by -(|Ci| + |Kj|) turns "unmatched clusters pay
    their size" into a plain rectangular assignment; the shifted costs are
    never positive, so a maximum-cardinality matching is optimal.
    """
    sizes_t = np.array([len(c) for c in truth], dtype=float)
    sizes_p = np.array([len(c) for c in priv], dtype=float)
    total = sizes_t.sum() + sizes_p.sum()
    if not truth or not priv:
        return float(total)
    shifted = np.empty((len(truth), len(priv)))
    for i, ci in enumerate(truth):
        for j, kj in enumerate(priv):
            shifted[i, j] = cluster_distance(ci, kj) - sizes_t[i] - sizes_p[j]
    return float(total + hungarian_min(shifted).total_cost)


def _clusters(c) -> list:
    return c.clusters if isinstance(c, GridClustering) else [frozenset(x) for x in c]


def dsgc(truth, priv) -> float:
    """M_cost normalised by the number of true significant grids.

    Both arguments are GridClusterings or lists of grid-id sets.
    """
    t, s = _clusters(truth), _clusters(priv)
    n_true = sum(len(c) for c in t)
    if n_true == 0:
        raise ValueError("true clustering has no significant grids")
    return matching_cost(t, s) / n_true


def contingency(a, b) -> np.ndarray:
    a, b = np.asarray(a), np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"label vectors differ in length: {a.size} vs {b.size}")
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    table = np.zeros((ai.max(initial=-1) + 1, bi.max(initial=-1) + 1), dtype=np.int64)
    np.add.at(table, (ai, bi), 1)
    return table


def ocm(true_labels, priv_labels) -> float:
    """1 - CT/TT with CT the optimally matched class overlap."""
    table = contingency(true_labels, priv_labels)
    n = int(table.sum())
    if n == 0:
        raise ValueError("no samples")
    ct = -hungarian_min(-table).total_cost
    return 1.0 - ct / n


def _pairs(x):
    x = np.asarray(x, dtype=object)
    return sum(int(v) * (int(v) - 1) // 2 for v in x.ravel())


def tce(true_labels, priv_labels) -> float:
    """Fraction of sample pairs grouped together by one labeling but not the other."""
    table = contingency(true_labels, priv_labels)
    n = int(table.sum())
    if n < 2:
        raise ValueError("2CE needs at least two samples")
    inconsistent = _pairs(table.sum(axis=1)) + _pairs(table.sum(axis=0)) - 2 * _pairs(table)
    return inconsistent / (n * (n - 1) // 2)


def fmeasure(truth, priv) -> float:
    t, s = _clusters(truth), _clusters(priv)
    if not t or not s:
        raise ValueError("F-measure needs at least one cluster on each side")
    n_true = sum(len(c) for c in t)
    weighted = []
    for ci in t:
        best = 0.0
        for kj in s:
            common = len(ci & kj)
            if common:
                best = max(best, 2.0 * common / (len(ci) + len(kj)))
        weighted.append(len(ci) * best)
    return math.fsum(weighted) / n_true


@dataclass
class MetricsReport:
    dsgc: float
    ocm: float
    tce: float
    fmeasure: float
    k_true: int
    k_prime: int

    def as_dict(self) -> dict:
        return asdict(self)
