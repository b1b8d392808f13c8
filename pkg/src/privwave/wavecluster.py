"""Non-private WaveCluster: significant grids and connected-component clusters."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import ndimage

from .grid import GridSpec, PointSet, cell_indices, quantize
from .wavelet import HAAR, Subband, TransformProfile, haar_average_subband

NOISE = 0

# 4-connectivity: cells sharing an edge
_FOUR = ndimage.generate_binary_structure(2, 1)


class EmptySubbandError(ValueError):
    pass


@dataclass(frozen=True)
class DensityThreshold:
    p: float
    k: int
    d: float


def top_k_count(n: int, p: float) -> int:
    """floor((1 - p) * n), at least 1 when n >= 1."""
    if n < 1:
        return 0
    # guard against (1-p)*n landing a hair below an integer
    k = math.floor((1.0 - p) * n + 1e-9)
    return max(1, k)


def threshold_from_list(L: np.ndarray, p: float) -> DensityThreshold:
    if not 0 <= p < 1:
        raise ValueError(f"density threshold p must lie in [0, 1), got {p}")
    if len(L) == 0:
        raise EmptySubbandError("no positive subband values")
    k = top_k_count(len(L), p)
    return DensityThreshold(p, k, float(L[-k]))


def significant_threshold(s: Subband, p: float) -> DensityThreshold:
    return threshold_from_list(s.L, p)


def significant_grids(s, d: float) -> np.ndarray:
    values = s.values if isinstance(s, Subband) else np.asarray(s)
    return values >= d


@dataclass(frozen=True)
class GridClustering:
    """Cluster ids over the subband lattice; 0 marks noise."""

    labels: np.ndarray

    @property
    def dims(self) -> tuple[int, int]:
        return self.labels.shape

    @property
    def cluster_count(self) -> int:
        return int(self.labels.max(initial=0))

    @property
    def mask(self) -> np.ndarray:
        return self.labels != NOISE

    @cached_property
    def clusters(self) -> list[frozenset]:
        """Row-major flat grid indices per cluster, in id order."""
        flat = self.labels.ravel()
        order = np.argsort(flat, kind="stable")
        counts = np.bincount(flat, minlength=self.cluster_count + 1)
        bounds = np.cumsum(counts)
        return [
            frozenset(order[bounds[c - 1]:bounds[c]].tolist())
            for c in range(1, self.cluster_count + 1)
        ]

    @property
    def significant_count(self) -> int:
        return int(self.mask.sum())


def canonicalize(labels: np.ndarray) -> np.ndarray:
    """Renumber ids 1..n by each cluster's smallest row-major member."""
    flat = labels.ravel()
    ids = flat[flat != NOISE]
    if ids.size == 0:
        return np.zeros_like(labels)
    _, first = np.unique(ids, return_index=True)
    uniq = ids[np.sort(first)]
    remap = np.zeros(int(labels.max()) + 1, dtype=np.int64)
    remap[uniq] = np.arange(1, uniq.size + 1)
    return remap[labels]


def connected_components(mask: np.ndarray) -> GridClustering:
    mask = np.asarray(mask, dtype=bool)
    labels, _ = ndimage.label(mask, structure=_FOUR)
    return GridClustering(canonicalize(labels.astype(np.int64)))


@dataclass(frozen=True)
class WaveClusterResult:
    clustering: GridClustering
    threshold: DensityThreshold
    subband: Subband
    point_labels: np.ndarray


def point_labels(d: PointSet, g: GridSpec, clustering: GridClustering) -> np.ndarray:
    """Label of the subband grid covering each point (0 for noise)."""
    if len(d) == 0:
        return np.zeros(0, dtype=np.int64)
    i, j = cell_indices(d, g)
    return clustering.labels[i // 2, j // 2]


def run_wavecluster(d: PointSet, g: GridSpec, p: float,
                    profile: TransformProfile = HAAR) -> WaveClusterResult:
    s = haar_average_subband(quantize(d, g), profile)
    th = significant_threshold(s, p)
    clustering = connected_components(significant_grids(s, th.d))
    return WaveClusterResult(clustering, th, s, point_labels(d, g, clustering))
