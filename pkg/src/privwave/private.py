"""The four epsilon-DP WaveCluster pipelines: baseline, privqt, privthr, privthr_em."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dp import Budget, SeededRng, budget_split, exp_mech_rank, laplace, perturb_counts
from .grid import CountMatrix, GridSpec, PointSet, quantize, resample_uniform
from .wavecluster import (
    EmptySubbandError,
    GridClustering,
    connected_components,
    run_wavecluster,
    significant_grids,
    threshold_from_list,
    top_k_count,
)
from .wavelet import HAAR, TransformProfile, haar_average_subband

MECHANISMS = ("baseline", "privqt", "privthr", "privthr_em")
DEFAULT_ALPHA = {"privthr": 0.9, "privthr_em": 0.7}


@dataclass(frozen=True)
class PrivateRunConfig:
    mechanism: str
    epsilon: float
    grid: GridSpec
    p: float
    seed: int = 0
    alpha: float | None = None
    profile: TransformProfile = HAAR

    def __post_init__(self):
        if self.mechanism not in MECHANISMS:
            raise ValueError(f"unknown mechanism {self.mechanism!r}; expected one of {MECHANISMS}")
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if not 0 <= self.p < 1:
            raise ValueError(f"p must lie in [0, 1), got {self.p}")
        if self.mechanism in DEFAULT_ALPHA:
            if self.alpha is None:
                object.__setattr__(self, "alpha", DEFAULT_ALPHA[self.mechanism])
            if not 0 < self.alpha < 1:
                raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")


@dataclass
class PrivateResult:
    """Clustering plus the diagnostics written to each run record.

    ``k_true`` comes from the noiseless subband and is for evaluation only.
    ``degenerate`` marks runs that ended with no candidate values (0 clusters).
    """

    mechanism: str
    clustering: GridClustering
    k_true: int
    k_prime: int
    d_prime: float
    budget: Budget
    degenerate: bool = False
    extra: dict = field(default_factory=dict)

    def record(self, cfg: PrivateRunConfig) -> dict:
        return {
            "mechanism": self.mechanism,
            "epsilon": cfg.epsilon,
            "alpha": cfg.alpha,
            "seed": cfg.seed,
            "k_true": self.k_true,
            "k_prime": self.k_prime,
            "d_prime": None if not math.isfinite(self.d_prime) else self.d_prime,
            "cluster_count": self.clustering.cluster_count,
            "grid": [cfg.grid.g1, cfg.grid.g2],
            "degenerate": self.degenerate,
            **self.extra,
        }


def _true_k(m: CountMatrix, p: float, profile) -> int:
    return top_k_count(haar_average_subband(m, profile).L.size, p)


def _empty(shape) -> GridClustering:
    return GridClustering(np.zeros(shape, dtype=np.int64))


def _threshold_and_cluster(mechanism, w_noisy, candidates, p, k_true, budget, extra=None):
    """Top-k' of ``candidates`` sets d'; cluster the noisy subband at d'."""
    try:
        th = threshold_from_list(candidates, p)
    except EmptySubbandError:
        return PrivateResult(mechanism, _empty(w_noisy.shape), k_true, 0, math.inf, budget,
                             degenerate=True, extra=extra or {})
    clustering = connected_components(significant_grids(w_noisy, th.d))
    return PrivateResult(mechanism, clustering, k_true, th.k, th.d, budget, extra=extra or {})


def baseline_counts(m: CountMatrix, cfg: PrivateRunConfig, rng, budget: Budget):
    """Noisy counts clamped at zero and rounded: the single-grid publisher."""
    noisy = perturb_counts(m, cfg.epsilon, rng, budget, label="publish")
    return np.floor(np.maximum(noisy.cells, 0.0) + 0.5).astype(np.int64)


def baseline(d: PointSet, cfg: PrivateRunConfig, m: CountMatrix | None = None) -> PrivateResult:
    """Publish noisy counts, synthesize points inside cells, run WaveCluster on them."""
    rng = SeededRng(cfg.seed)
    budget = Budget(cfg.epsilon)
    m = quantize(d, cfg.grid) if m is None else m
    k_true = _true_k(m, cfg.p, cfg.profile)
    counts = baseline_counts(m, cfg, rng, budget)
    synthetic = resample_uniform(counts, d.bounds, rng)
    extra = {"synthetic_points": len(synthetic)}
    try:
        res = run_wavecluster(synthetic, cfg.grid, cfg.p, cfg.profile)
    except EmptySubbandError:
        return PrivateResult("baseline", _empty((cfg.grid.g1 // 2, cfg.grid.g2 // 2)), k_true, 0,
                             math.inf, budget, degenerate=True, extra=extra)
    return PrivateResult("baseline", res.clustering, k_true, res.threshold.k, res.threshold.d,
                         budget, extra=extra)


def privqt(d: PointSet, cfg: PrivateRunConfig, m: CountMatrix | None = None) -> PrivateResult:
    rng = SeededRng(cfg.seed)
    budget = Budget(cfg.epsilon)
    m = quantize(d, cfg.grid) if m is None else m
    k_true = _true_k(m, cfg.p, cfg.profile)
    w_noisy = haar_average_subband(perturb_counts(m, cfg.epsilon, rng, budget), cfg.profile)
    return _threshold_and_cluster("privqt", w_noisy.values, w_noisy.L, cfg.p, k_true, budget)


def noisy_nonpositive_count(m: CountMatrix, eps: float, rng, profile=HAAR,
                            budget: Budget | None = None) -> tuple[int, float]:
    """True |Z| of the noiseless subband and its Laplace-protected release."""
    if budget is not None:
        budget.spend("zcount", eps)
    z = haar_average_subband(m, profile).zcount
    return z, z + laplace(rng, profile.zcount_sensitivity / eps)


def removal_count(z_noisy: float, available: int) -> int:
    """round(|Z|'/2) clamped to [0, available]; halves round up."""
    return int(min(max(math.floor(z_noisy / 2.0 + 0.5), 0), available))


def privthr(d: PointSet, cfg: PrivateRunConfig, m: CountMatrix | None = None) -> PrivateResult:
    rng = SeededRng(cfg.seed)
    budget = Budget(cfg.epsilon)
    eps1, eps2 = budget_split(budget, cfg.alpha, labels=("quantization", "zcount"))
    m = quantize(d, cfg.grid) if m is None else m
    k_true = _true_k(m, cfg.p, cfg.profile)
    w_noisy = haar_average_subband(perturb_counts(m, eps1, rng), cfg.profile)
    L_noisy = w_noisy.L
    _, z_noisy = noisy_nonpositive_count(m, eps2, rng, cfg.profile)
    r = removal_count(z_noisy, L_noisy.size)
    extra = {"z_noisy": z_noisy, "removed": r}
    return _threshold_and_cluster("privthr", w_noisy.values, L_noisy[r:], cfg.p, k_true, budget, extra)


def privthr_em(d: PointSet, cfg: PrivateRunConfig, m: CountMatrix | None = None) -> PrivateResult:
    rng = SeededRng(cfg.seed)
    budget = Budget(cfg.epsilon)
    eps1, eps2 = budget_split(budget, cfg.alpha, labels=("quantization", "threshold"))
    m = quantize(d, cfg.grid) if m is None else m
    w_noisy = haar_average_subband(perturb_counts(m, eps1, rng), cfg.profile)
    L = haar_average_subband(m, cfg.profile).L
    if L.size == 0:
        raise EmptySubbandError("no positive subband values to select a threshold from")
    k_true = top_k_count(L.size, cfg.p)
    k_prime, d_prime = exp_mech_rank(L, k_true, eps2, rng, cfg.profile.quality_sensitivity)
    clustering = connected_components(significant_grids(w_noisy.values, d_prime))
    return PrivateResult("privthr_em", clustering, k_true, k_prime, d_prime, budget)


PIPELINES = {
    "baseline": baseline,
    "privqt": privqt,
    "privthr": privthr,
    "privthr_em": privthr_em,
}


def run_private(d: PointSet, cfg: PrivateRunConfig, m: CountMatrix | None = None) -> PrivateResult:
    """Dispatch on ``cfg.mechanism``. Pass ``m`` to reuse a precomputed count matrix."""
    return PIPELINES[cfg.mechanism](d, cfg, m)
