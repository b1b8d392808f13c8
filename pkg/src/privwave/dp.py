"""Seeded randomness, the Laplace and Exponential mechanisms, budget accounting."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .grid import CountMatrix

_FRACTION_SLACK = 1e-12


class BudgetExceededError(ValueError):
    def __init__(self, label: str, requested: float, remaining: float):
        super().__init__(
            f"privacy budget exceeded by {label!r}: requested fraction {requested:.6g}, "
            f"remaining {remaining:.6g}"
        )
        self.label = label


class SeededRng:
    """PCG64 stream keyed by ``(seed, stream)``.

    Two instances with the same key produce identical draws on every platform.
    """

    def __init__(self, seed: int, stream: int = 0):
        self.seed = int(seed)
        self.stream = int(stream)
        ss = np.random.SeedSequence(entropy=self.seed & (2**64 - 1), spawn_key=(self.stream,))
        self._gen = np.random.Generator(np.random.PCG64(ss))

    def random(self, size=None):
        return self._gen.random(size)

    def permutation(self, n: int) -> np.ndarray:
        return self._gen.permutation(n)

    def normal(self, loc=0.0, scale=1.0, size=None):
        return self._gen.normal(loc, scale, size)

    def integers(self, low, high=None, size=None):
        return self._gen.integers(low, high, size)

    def child(self, stream: int) -> "SeededRng":
        """Independent stream derived from this rng's seed."""
        return SeededRng(self.seed, self.stream * 1_000_003 + stream + 1)

    def __repr__(self):
        return f"SeededRng(seed={self.seed}, stream={self.stream})"


def laplace(rng, b: float, size=None):
    """Draw from Laplace(0, b) by inverting the CDF of a uniform on (-1/2, 1/2)."""
    if not b > 0:
        raise ValueError(f"Laplace scale must be positive, got {b}")
    u = np.asarray(rng.random(size)) - 0.5
    # u == -0.5 would give log(0)
    u = np.maximum(u, np.nextafter(-0.5, 0.0))
    x = -b * np.sign(u) * np.log1p(-2.0 * np.abs(u))
    return float(x) if size is None else x


@dataclass
class Budget:
    """Total epsilon plus a ledger of (label, fraction) charges.

    Sequential composition: the fractions may sum to at most 1.
    """

    epsilon: float
    spent: list = field(default_factory=list)

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")

    @property
    def fraction_spent(self) -> float:
        return math.fsum(f for _, f in self.spent)

    @property
    def epsilon_spent(self) -> float:
        return self.fraction_spent * self.epsilon

    def spend_fraction(self, label: str, fraction: float) -> float:
        """Record a charge and return the epsilon it buys."""
        if not fraction > 0:
            raise ValueError(f"charge {label!r} must be a positive fraction, got {fraction}")
        remaining = 1.0 - self.fraction_spent
        if fraction > remaining + _FRACTION_SLACK:
            raise BudgetExceededError(label, fraction, remaining)
        self.spent.append((label, float(fraction)))
        return fraction * self.epsilon

    def spend(self, label: str, eps: float) -> float:
        return self.spend_fraction(label, eps / self.epsilon)


def budget_split(total: Budget, alpha: float, labels=("quantization", "threshold")) -> tuple[float, float]:
    """Charge ``alpha`` and ``1 - alpha`` of the budget; return (eps1, eps2)."""
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    eps1 = total.spend_fraction(labels[0], alpha)
    eps2 = total.spend_fraction(labels[1], 1.0 - alpha)
    return eps1, eps2


def perturb_counts(m: CountMatrix, eps: float, rng, budget: Budget | None = None,
                   label: str = "quantization") -> CountMatrix:
    """Add independent Lap(1/eps) noise to every cell.

    Cells partition the data, so the whole matrix costs eps once (parallel
    composition); ``budget`` receives a single charge. Output may be negative.
    """
    if not eps > 0:
        raise ValueError(f"epsilon must be positive, got {eps}")
    if budget is not None:
        budget.spend(label, eps)
    noise = laplace(rng, 1.0 / eps, size=m.cells.shape)
    return CountMatrix(m.cells + noise)


def rank_partitions(L: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Descending values x_1..x_m with partition lower/upper ends.

    Rank i (1-based) owns (x_{i+1}, x_i]; rank m owns (0, x_m].
    """
    x = np.asarray(L, dtype=float)[::-1]
    lower = np.append(x[1:], 0.0)
    return x, lower, x - lower


def exp_mech_probabilities(L, k: int, eps: float, sensitivity: float = 1.0) -> np.ndarray:
    """Selection probability of each rank 1..|L|: width * exp(-eps |i - k| / (2 S))."""
    _, _, width = rank_partitions(L)
    ranks = np.arange(1, width.size + 1)
    with np.errstate(divide="ignore"):
        logw = np.log(width) - (eps / (2.0 * sensitivity)) * np.abs(ranks - k)
    if not np.isfinite(logw).any():
        raise ValueError("all partitions have zero width")
    logw -= logw[np.isfinite(logw)].max()
    w = np.exp(logw)
    return w / w.sum()


def exp_mech_rank(L, k: int, eps: float, rng, sensitivity: float = 1.0) -> tuple[int, float]:
    """Sample a rank k' and a threshold d' uniform within its partition."""
    L = np.asarray(L, dtype=float)
    if L.size == 0:
        raise ValueError("exponential mechanism needs at least one positive value")
    if not 1 <= k <= L.size:
        raise ValueError(f"target rank {k} outside 1..{L.size}")
    if not eps > 0:
        raise ValueError(f"epsilon must be positive, got {eps}")
    probs = exp_mech_probabilities(L, k, eps, sensitivity)
    cdf = np.cumsum(probs)
    idx = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
    idx = min(idx, L.size - 1)
    # searchsorted can land on a zero-probability rank only at float ties; step off it
    while probs[idx] == 0.0:
        idx -= 1
    x, lower, width = rank_partitions(L)
    d_prime = lower[idx] + (1.0 - rng.random()) * width[idx]
    return idx + 1, float(d_prime)
