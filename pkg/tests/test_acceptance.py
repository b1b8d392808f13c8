"""Acceptance suite: one PASS/FAIL line per criterion, reported in the terminal summary."""

import itertools
import math
import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from privwave.bounds import estimate_theta, theorem_coverage, validate_zero_flips
from privwave.datagen import DATASETS, generate
from privwave.dp import Budget, BudgetExceededError, SeededRng, budget_split, exp_mech_rank, laplace
from privwave.experiment import ExperimentConfig, run_experiment
from privwave.grid import GridSpec, quantize
from privwave.metrics import dsgc, fmeasure, hungarian_min, ocm, tce
from privwave.private import MECHANISMS, PrivateRunConfig, run_private
from privwave.wavecluster import GridClustering, run_wavecluster
from privwave.wavelet import haar_average_subband

MASTER_SEED = 2024
SWEEP_EPS = (0.1, 0.5, 1.0, 2.0)


@pytest.fixture(scope="module")
def ds2():
    spec, g, p = DATASETS["ds2"]
    grid = GridSpec.square(g)
    data = generate(spec)
    m = quantize(data, grid)
    return data, grid, p, m, run_wavecluster(data, grid, p)


@pytest.fixture(scope="module")
def sweeps(tmp_path_factory):
    out = {}
    for name in DATASETS:
        cfg = ExperimentConfig.from_dict(
            {"dataset": name, "repetitions": 10, "epsilons": list(SWEEP_EPS), "master_seed": MASTER_SEED,
             "output_dir": name},
            tmp_path_factory.mktemp("sweep"),
        )
        out[name] = run_experiment(cfg)
    return out


def cell(result, mech, eps):
    return [r for r in result.records if r["mechanism"] == mech and r["epsilon"] == eps and r["error"] is None]


# quantitative anchors


def test_c01_zero_flip_law(verdict):
    t0 = time.perf_counter()
    s = validate_zero_flips(241, 1.0, 1000, SeededRng(MASTER_SEED, 1))
    dt = time.perf_counter() - t0
    ok = abs(s.mean - 120.5) <= 2.0 and s.gof_pvalue >= 0.01 and dt < 10
    assert verdict(1, ok, f"mean={s.mean:.2f} (120.5+-2), GOF p={s.gof_pvalue:.3f} (>=0.01), {dt:.2f}s")


def test_c02_privqt_bias(ds2, verdict):
    data, grid, p, m, truth = ds2
    s = haar_average_subband(m)
    k = truth.threshold.k
    t0 = time.perf_counter()
    diffs = [run_private(None, PrivateRunConfig("privqt", 1.0, grid, p, seed=MASTER_SEED + r), m).k_prime - k
             for r in range(100)]
    dt = time.perf_counter() - t0
    target = (1 - p) * s.zcount / 2
    mean = float(np.mean(diffs))
    ok = (k == 144 and abs(s.zcount - 241) <= 24.1 and abs(mean - target) <= 0.15 * target and dt < 60)
    assert verdict(2, ok, f"k={k}, |Z|={s.zcount}, mean(k'-k)={mean:.2f} vs {target:.2f} +-15%, {dt:.1f}s")


def test_c03_threshold_accuracy(sweeps, verdict):
    bad = []
    worst = {"privthr": 0.0, "privthr_em": 0.0, "privqt": math.inf, "baseline": math.inf}
    for name, res in sweeps.items():
        for eps in SWEEP_EPS[1:]:
            for mech in MECHANISMS:
                recs = cell(res, mech, eps)
                rel = float(np.mean([abs(r["k_prime"] - r["k_true"]) / r["k_true"] for r in recs]))
                good = rel < 0.05 if mech in ("privthr", "privthr_em") else rel > 0.30
                if mech in ("privthr", "privthr_em"):
                    worst[mech] = max(worst[mech], rel)
                else:
                    worst[mech] = min(worst[mech], rel)
                if not good or len(recs) != 10:
                    bad.append(f"{name}/{mech}/eps={eps}: {rel:.3f}")
    detail = ", ".join(f"{m} {'max' if m.startswith('privthr') else 'min'}={v:.3f}" for m, v in worst.items())
    assert verdict(3, not bad, detail + ("; misses: " + "; ".join(bad) if bad else ""))


def test_c04_low_budget_crossover(sweeps, verdict):
    res = sweeps["ds2"]
    thr = [abs(r["k_prime"] - r["k_true"]) for r in cell(res, "privthr", 0.1)]
    em = [abs(r["k_prime"] - r["k_true"]) for r in cell(res, "privthr_em", 0.1)]
    bias_thr = abs(np.mean([r["k_prime"] - r["k_true"] for r in cell(res, "privthr", 0.1)]))
    bias_em = abs(np.mean([r["k_prime"] - r["k_true"] for r in cell(res, "privthr_em", 0.1)]))
    ok = np.mean(thr) < np.mean(em)
    assert verdict(4, ok, f"mean|k'-k| privthr={np.mean(thr):.1f} < privthr_em={np.mean(em):.1f} "
                          f"(|mean(k'-k)|: {bias_thr:.1f} vs {bias_em:.1f})")


def test_c05_method_ordering(sweeps, verdict):
    bad = []
    for name, res in sweeps.items():
        for eps in SWEEP_EPS[1:]:
            mean = {m: np.mean([r["dsgc"] for r in cell(res, m, eps)]) for m in MECHANISMS}
            ceiling = min(mean["privqt"], mean["baseline"])
            for m in ("privthr", "privthr_em"):
                if not mean[m] < ceiling:
                    bad.append(f"{name}/eps={eps}: {m}={mean[m]:.3f} vs {ceiling:.3f}")
    assert verdict(5, not bad, "all 9 cells ordered" if not bad else "; ".join(bad))


def test_c06_theorem_coverage(ds2, verdict):
    data, grid, p, m, truth = ds2
    t0 = time.perf_counter()
    reports = [theorem_coverage(m, grid, p, mech, 1.0, omega=0.05, reps=1000, seed=MASTER_SEED)
               for mech in ("privqt", "privthr", "privthr_em")]
    dt = time.perf_counter() - t0
    ok = all(r.passed for r in reports) and dt < 300
    parts = [f"{r.theorem} {r.empirical_coverage:.3f}>={r.required_coverage:.3f}"
             f" [{r.k_min:.1f},{r.k_max:.1f}]" for r in reports]
    assert verdict(6, ok, "; ".join(parts) + f", {dt:.1f}s")


def test_c07_theta_anchors(verdict):
    n = 400
    large = estimate_theta(np.full(n, 20.0), 1.0, 2000, SeededRng(MASTER_SEED, 2)) / n
    half = estimate_theta(np.full(n, 0.5), 1.0, 2000, SeededRng(MASTER_SEED, 3)) / n
    ok_large = large <= 0.01
    ok_half = abs(half - 0.43) <= 0.15 * 0.43
    assert verdict(7, ok_large and ok_half,
                   f"all-large theta/|L|={large:.4f} (~0), all-0.5 theta/|L|={half:.3f} (0.43+-15%)")


# property and oracle suites


def test_c08_hungarian_bruteforce(verdict):
    rng = np.random.default_rng(MASTER_SEED)
    mismatches = 0
    for _ in range(500):
        r, c = (int(v) for v in rng.integers(1, 7, size=2))
        cost = rng.integers(-20, 50, size=(r, c)).astype(float)
        if r <= c:
            best = min(sum(cost[i, j] for i, j in enumerate(perm)) for perm in itertools.permutations(range(c), r))
        else:
            best = min(sum(cost[i, j] for j, i in enumerate(perm)) for perm in itertools.permutations(range(r), c))
        mismatches += not math.isclose(hungarian_min(cost).total_cost, best, abs_tol=1e-9)
    assert verdict(8, mismatches == 0, f"{500 - mismatches}/500 matrices agree")


def test_c09_tce_pair_enumeration(verdict):
    rng = np.random.default_rng(MASTER_SEED + 1)
    mismatches = 0
    for _ in range(100):
        n = int(rng.integers(2, 201))
        a, b = rng.integers(0, rng.integers(1, 6), size=n), rng.integers(0, rng.integers(1, 6), size=n)
        bad = sum((a[i] == a[j]) != (b[i] == b[j]) for i in range(n) for j in range(i + 1, n))
        mismatches += not math.isclose(tce(a, b), bad / (n * (n - 1) / 2), abs_tol=1e-12)
    assert verdict(9, mismatches == 0, f"{100 - mismatches}/100 labelings agree")


def test_c10_noiseless_limit(ds2, verdict):
    data, grid, p, m, truth = ds2
    hits = {}
    for mech in ("privqt", "privthr", "privthr_em"):
        hits[mech] = sum(
            dsgc(truth.clustering, run_private(None, PrivateRunConfig(mech, 1e6, grid, p, seed=s), m).clustering) == 0
            for s in range(1000)
        )
    ok = all(h >= 999 for h in hits.values())
    assert verdict(10, ok, ", ".join(f"{k} {v}/1000" for k, v in hits.items()) + " (need >=999)")


labelings = st.integers(2, 60).flatmap(
    lambda n: st.tuples(st.lists(st.integers(0, 4), min_size=n, max_size=n),
                        st.lists(st.integers(0, 4), min_size=n, max_size=n),
                        st.permutations(range(5)))
)
label_grids = st.lists(st.lists(st.integers(0, 3), min_size=6, max_size=6), min_size=6, max_size=6)


def test_c11_metric_identities(verdict):
    failures = []

    @settings(max_examples=200, deadline=None)
    @given(labelings)
    def renaming(args):
        a, b, perm = args
        a, b = np.array(a), np.array(b)
        renamed = np.array(perm)[b]
        assert ocm(a, a) == 0 and tce(a, a) == 0
        assert math.isclose(ocm(a, renamed), ocm(a, b), abs_tol=1e-12)
        assert tce(a, renamed) == tce(a, b)

    @settings(max_examples=200, deadline=None)
    @given(label_grids)
    def identity(rows):
        c = GridClustering(np.array(rows))
        if c.cluster_count:
            assert dsgc(c, c) == 0 and fmeasure(c, c) == 1.0

    for prop in (renaming, identity):
        try:
            prop()
        except AssertionError as exc:
            failures.append(f"{prop.__name__}: {exc}")
    assert verdict(11, not failures, "identities and renaming invariance hold" if not failures else "; ".join(failures))


def test_c12_samplers(verdict):
    b = 2.0
    x = laplace(SeededRng(MASTER_SEED, 4), b, size=1_000_000)
    mad, var = float(np.abs(x).mean()), float(x.var())
    ok_lap = abs(mad - b) <= 0.01 * b and abs(var - 2 * b * b) <= 0.05 * 2 * b * b
    worst = 0.0
    rng = SeededRng(MASTER_SEED, 5)
    vals = np.random.default_rng(MASTER_SEED).uniform(0.5, 10.0, size=6)
    for size in range(1, 7):
        L = np.sort(vals[:size])
        k = (size + 1) // 2
        eps = 1.0
        desc = sorted(L, reverse=True) + [0.0]
        w = [(desc[i] - desc[i + 1]) * math.exp(-eps * abs(i + 1 - k) / 2) for i in range(size)]
        expected = np.array(w) / sum(w)
        draws = 20_000
        counts = np.bincount([exp_mech_rank(L, k, eps, rng)[0] - 1 for _ in range(draws)], minlength=size)
        worst = max(worst, float(np.abs(counts / draws - expected).sum()))
    ok_em = worst <= 0.02
    assert verdict(12, ok_lap and ok_em,
                   f"mean|x|={mad:.4f} (2+-1%), var={var:.3f} (8+-5%), EM worst L1={worst:.4f} (<=0.02)")


def test_c13_budget_accounting(ds2, verdict):
    data, grid, p, m, truth = ds2
    totals = {}
    for mech in MECHANISMS:
        for eps in (0.1, 0.7, 1.3):
            res = run_private(data, PrivateRunConfig(mech, eps, grid, p, seed=1), m)
            totals.setdefault(mech, []).append(math.isclose(res.budget.epsilon_spent, eps, rel_tol=1e-12)
                                               and math.isclose(res.budget.fraction_spent, 1.0, rel_tol=1e-12))
    rejected = 0
    b = Budget(1.0)
    budget_split(b, 0.9)
    try:
        b.spend("extra", 0.01)
    except BudgetExceededError:
        rejected += 1
    try:
        Budget(1.0).spend("huge", 1.5)
    except BudgetExceededError:
        rejected += 1
    ok = all(all(v) for v in totals.values()) and rejected == 2
    assert verdict(13, ok, f"exact totals for {sum(all(v) for v in totals.values())}/4 pipelines, "
                           f"{rejected}/2 overspends rejected")


def test_c14_determinism(tmp_path, verdict):
    raw = {"dataset": "ds1", "repetitions": 10, "epsilons": list(SWEEP_EPS), "master_seed": MASTER_SEED}
    dirs = []
    for tag in ("a", "b"):
        cfg = ExperimentConfig.from_dict({**raw, "output_dir": tag}, tmp_path)
        run_experiment(cfg)
        dirs.append(tmp_path / tag)
    same = [(d0 / f).read_bytes() == (d1 / f).read_bytes()
            for d0, d1 in [dirs] for f in ("runs.jsonl", "aggregate.csv", "truth.json")]
    assert verdict(14, all(same), f"{sum(same)}/3 output files byte-identical")
