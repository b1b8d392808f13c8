"""Utility-bound calculators for the private pipelines and Monte-Carlo checks of them."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import stats

from .dp import SeededRng, laplace
from .grid import CountMatrix, GridSpec
from .private import DEFAULT_ALPHA, PrivateRunConfig, run_private
from .wavecluster import top_k_count
from .wavelet import HAAR, Subband, haar_average_subband


@dataclass(frozen=True)
class BoundInputs:
    l_size: int
    zcount: int
    k: int
    p: float
    omega: float
    eps1: float
    eps2: float
    w_k: float
    w_max: float
    theta: float = 0.0

    def __post_init__(self):
        if not 0 < self.omega < 1:
            raise ValueError(f"omega must lie in (0, 1), got {self.omega}")
        if not self.w_max >= self.w_k > 0:
            raise ValueError(f"need w_max >= w_k > 0, got w_max={self.w_max}, w_k={self.w_k}")


@dataclass(frozen=True)
class Bounds:
    eta1: float
    eta2: float
    gamma: float
    k_min: float
    k_max: float
    beta: float | None = None

    def covers(self, k_prime: float) -> bool:
        return self.k_min <= k_prime <= self.k_max


def _eta_binomial(z: int, omega: float) -> tuple[float, float]:
    half = math.sqrt(z * math.log(1 / omega) / 2)
    return z / 2 - half, z / 2 + half


def _gamma(b: BoundInputs, eps: float) -> float:
    return 8.0 / eps * math.log(4 * (b.l_size + b.zcount) / b.omega)


def bounds_privqt(b: BoundInputs) -> Bounds:
    """Binomial spread of zero-quad flips around k; ``eps1`` is the full budget."""
    eta1, eta2 = _eta_binomial(b.zcount, b.omega)
    return Bounds(
        eta1, eta2, _gamma(b, b.eps1),
        k_min=b.k + (1 - b.p) * (eta1 - b.theta),
        k_max=b.k + (1 - b.p) * (eta2 - b.theta),
    )


def bounds_privthr(b: BoundInputs) -> Bounds:
    eta1, eta2 = _eta_binomial(b.zcount, b.omega)
    beta = 2.0 / b.eps2 * math.log(1 / b.omega)
    half_z = b.zcount / 2
    return Bounds(
        eta1, eta2, _gamma(b, b.eps1),
        k_min=b.k + (1 - b.p) * (eta1 - b.theta - half_z - beta),
        k_max=b.k + (1 - b.p) * (eta2 - b.theta - half_z + beta),
        beta=beta,
    )


def bounds_privthr_em(b: BoundInputs) -> Bounds:
    gap = abs(b.w_max - b.w_k)
    if gap == 0:
        raise ValueError("bound undefined: w_max equals w_k")
    scale = 2.0 / b.eps2
    eta1 = b.l_size - b.k - 1 + scale * math.log(gap / (abs(b.w_k) * b.omega))
    eta2 = b.k - 2 + scale * math.log(abs(b.w_k) / (gap * b.omega))
    return Bounds(eta1, eta2, _gamma(b, b.eps1), k_min=b.k - eta1, k_max=b.k + eta2)


THEOREMS = {
    "privqt": bounds_privqt,
    "privthr": bounds_privthr,
    "privthr_em": bounds_privthr_em,
}


def _quad_noise(rng, eps: float, shape, divisor: float) -> np.ndarray:
    """Noise on one subband value: the sum of four Lap(1/eps) draws over ``divisor``."""
    return laplace(rng, 1.0 / eps, size=(*shape, 4)).sum(axis=-1) / divisor


@dataclass(frozen=True)
class ZeroFlipSummary:
    zcount: int
    reps: int
    mean: float
    variance: float
    max_cdf_deviation: float
    gof_pvalue: float
    binom_pvalue: float
    counts: np.ndarray


def binomial_gof_pvalue(counts: np.ndarray, n: int, p: float = 0.5, min_expected: float = 5.0) -> float:
    """Chi-square goodness of fit of integer ``counts`` to Binomial(n, p).

    Outcomes are pooled from both tails inward until every bin expects at
    least ``min_expected`` observations.
    """
    counts = np.asarray(counts, dtype=np.int64)
    if n == 0:
        return 1.0 if (counts == 0).all() else 0.0
    reps = counts.size
    expected = stats.binom.pmf(np.arange(n + 1), n, p) * reps
    observed = np.bincount(counts, minlength=n + 1).astype(float)
    edges = [0]
    acc = 0.0
    for v in range(n + 1):
        acc += expected[v]
        if acc >= min_expected:
            edges.append(v + 1)
            acc = 0.0
    if edges[-1] != n + 1:
        edges[-1] = n + 1
    if len(edges) < 3:
        return 1.0
    exp_b = np.add.reduceat(expected, edges[:-1])
    obs_b = np.add.reduceat(observed, edges[:-1])
    exp_b *= obs_b.sum() / exp_b.sum()
    return float(stats.chisquare(obs_b, exp_b).pvalue)


def validate_zero_flips(zcount: int, eps: float, reps: int, rng, divisor: float = HAAR.quad_divisor) -> ZeroFlipSummary:
    """Count zero quads pushed positive by quantization noise, ``reps`` times."""
    if reps < 100:
        raise ValueError("need at least 100 repetitions")
    if zcount == 0:
        counts = np.zeros(reps, dtype=np.int64)
    else:
        counts = (_quad_noise(rng, eps, (reps, zcount), divisor) > 0).sum(axis=1)
    grid = np.arange(zcount + 1)
    emp_cdf = np.searchsorted(np.sort(counts), grid, side="right") / reps
    dev = float(np.abs(emp_cdf - stats.binom.cdf(grid, zcount, 0.5)).max())
    if zcount:
        binom_p = stats.binomtest(int(counts.sum()), reps * zcount, 0.5).pvalue
    else:
        binom_p = 1.0
    return ZeroFlipSummary(
        zcount, reps, float(counts.mean()), float(counts.var(ddof=1)), dev,
        binomial_gof_pvalue(counts, zcount), float(binom_p), counts,
    )


def estimate_theta(s, eps: float, reps: int, rng, noise_divisor: float = HAAR.quad_divisor) -> float:
    """Expected number of positive subband values pushed to <= 0 by noise.

    The noise on a value is four Lap(1/eps) draws summed and divided by
    ``noise_divisor``, which defaults to the Haar quad divisor so the estimate
    matches the flip rate of the implemented pipelines.
    """
    if reps < 100:
        raise ValueError("need at least 100 repetitions")
    L = s.L if isinstance(s, Subband) else np.asarray(s, dtype=float)
    L = L[L > 0]
    if L.size == 0:
        return 0.0
    flips = np.zeros(L.size)
    # chunk to bound memory on large subbands
    step = max(1, 2_000_000 // (4 * L.size))
    done = 0
    while done < reps:
        m = min(step, reps - done)
        noise = _quad_noise(rng, eps, (m, L.size), noise_divisor)
        flips += (L + noise <= 0).sum(axis=0)
        done += m
    return float(flips.sum() / reps)


def bound_inputs(m: CountMatrix, p: float, eps1: float, eps2: float, omega: float,
                 theta: float = 0.0, profile=HAAR) -> BoundInputs:
    """Bound inputs read off the noiseless subband of ``m``."""
    s = haar_average_subband(m, profile)
    L = s.L
    k = top_k_count(L.size, p)
    return BoundInputs(
        l_size=int(L.size), zcount=s.zcount, k=k, p=p, omega=omega,
        eps1=eps1, eps2=eps2, w_k=float(L[-k]), w_max=float(L[-1]), theta=theta,
    )


@dataclass(frozen=True)
class CoverageReport:
    theorem: str
    omega: float
    k_min: float
    k_max: float
    empirical_coverage: float
    required_coverage: float
    reps: int
    epsilon: float
    alpha: float | None
    theta: float

    @property
    def passed(self) -> bool:
        return self.empirical_coverage >= self.required_coverage

    def as_dict(self) -> dict:
        return {**asdict(self), "passed": self.passed}


# probability guarantee exponent of each theorem
_GUARANTEE_POWER = {"privqt": 2, "privthr": 3, "privthr_em": 2}


def theorem_coverage(m: CountMatrix, grid: GridSpec, p: float, mechanism: str, epsilon: float,
                     omega: float = 0.05, reps: int = 1000, seed: int = 0,
                     alpha: float | None = None, theta_reps: int = 2000) -> CoverageReport:
    """Fraction of ``reps`` mechanism runs whose k' falls inside the theorem's interval.

    theta is estimated by Monte Carlo at the quantization budget.
    """
    if mechanism == "privqt":
        alpha = None
        eps1, eps2 = epsilon, epsilon
    else:
        alpha = DEFAULT_ALPHA[mechanism] if alpha is None else alpha
        eps1, eps2 = alpha * epsilon, (1 - alpha) * epsilon
    s = haar_average_subband(m)
    theta = estimate_theta(s, eps1, theta_reps, SeededRng(seed, 1))
    b = bound_inputs(m, p, eps1, eps2, omega, theta)
    bnd = THEOREMS[mechanism](b)
    hits = 0
    for r in range(reps):
        cfg = PrivateRunConfig(mechanism, epsilon, grid, p, seed=seed * 1_000_003 + r, alpha=alpha)
        hits += bnd.covers(run_private(None, cfg, m).k_prime)
    return CoverageReport(
        mechanism, omega, bnd.k_min, bnd.k_max, hits / reps,
        (1 - omega) ** _GUARANTEE_POWER[mechanism], reps, epsilon, alpha, theta,
    )
