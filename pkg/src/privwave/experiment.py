"""Configuration-driven sweeps over mechanisms, budgets and repetitions."""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .classifier import normalize, predict, split_train_test, train, training_set
from .datagen import DATASETS, GeneratorError, GeneratorSpec, generate, ingest_csv
from .dp import SeededRng
from .grid import GridError, GridSpec, PointSet, quantize
from .metrics import dsgc, fmeasure, ocm, tce
from .private import DEFAULT_ALPHA, MECHANISMS, PrivateRunConfig, run_private
from .wavecluster import run_wavecluster

METRICS = ("dsgc", "ocm", "tce", "fmeasure", "k_prime", "k_abs_error")


class ConfigError(ValueError):
    """Invalid experiment configuration; ``path`` names the offending field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass(frozen=True)
class CsvSource:
    path: str
    sample_n: int | None = None


@dataclass(frozen=True)
class BoundsRequest:
    mechanisms: tuple = ("privqt", "privthr", "privthr_em")
    epsilon: float = 1.0
    omega: float = 0.05
    reps: int = 1000


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: GeneratorSpec | CsvSource
    grid: GridSpec
    p: float
    mechanisms: tuple = MECHANISMS
    epsilons: tuple = (0.1, 0.5, 1.0, 2.0)
    alpha: dict = field(default_factory=dict)
    repetitions: int = 10
    master_seed: int = 0
    train_fraction: float = 0.8
    output_dir: str = "out"
    workers: int = 1
    bounds: BoundsRequest = field(default_factory=BoundsRequest)

    @classmethod
    def from_dict(cls, raw: dict, base_dir: str | os.PathLike = ".") -> "ExperimentConfig":
        return _parse_config(raw, Path(base_dir))


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"invalid JSON in {path}: {exc}") from None
    return ExperimentConfig.from_dict(raw, path.parent)


def _number(raw, path, kind=float, positive=False):
    if isinstance(raw, bool) or not isinstance(raw, (int, float)):
        raise ConfigError(path, f"expected a number, got {raw!r}")
    if kind is int and raw != int(raw):
        raise ConfigError(path, f"expected an integer, got {raw!r}")
    val = kind(raw)
    if not math.isfinite(val) or (positive and val <= 0):
        raise ConfigError(path, f"expected a positive finite number, got {raw!r}")
    return val


def _parse_dataset(raw, base_dir: Path):
    """Returns (source, default grid, default p)."""
    if isinstance(raw, str):
        if raw not in DATASETS:
            raise ConfigError("dataset", f"unknown dataset name {raw!r}; expected one of {sorted(DATASETS)}")
        return DATASETS[raw]
    if not isinstance(raw, dict):
        raise ConfigError("dataset", "expected a dataset name, a generator spec or {path, sample_n}")
    if "path" in raw:
        sample_n = raw.get("sample_n")
        if sample_n is not None:
            sample_n = _number(sample_n, "dataset.sample_n", int, positive=True)
        return CsvSource(str(base_dir / raw["path"]), sample_n), None, None
    if "kind" not in raw:
        raise ConfigError("dataset.kind", "missing generator kind")
    try:
        return GeneratorSpec.from_dict(raw), None, None
    except GeneratorError as exc:
        raise ConfigError("dataset", str(exc)) from None


def _parse_config(raw: dict, base_dir: Path) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config", "expected a JSON object")
    known = {"dataset", "grid", "p", "mechanisms", "epsilons", "alpha", "repetitions",
             "master_seed", "train_fraction", "output_dir", "workers", "bounds"}
    extra = sorted(set(raw) - known)
    if extra:
        raise ConfigError(extra[0], "unknown field")
    if "dataset" not in raw:
        raise ConfigError("dataset", "missing required field")
    source, grid_default, p_default = _parse_dataset(raw["dataset"], base_dir)

    g = raw.get("grid", grid_default)
    if g is None:
        raise ConfigError("grid", "missing required field")
    try:
        if isinstance(g, GridSpec):
            grid = g
        elif isinstance(g, list) and len(g) == 2:
            grid = GridSpec(_number(g[0], "grid[0]", int), _number(g[1], "grid[1]", int))
        else:
            grid = GridSpec.square(_number(g, "grid", int))
    except GridError as exc:
        raise ConfigError("grid", str(exc)) from None

    p = raw.get("p", p_default)
    if p is None:
        raise ConfigError("p", "missing required field")
    p = _number(p, "p")
    if p > 1:
        p /= 100.0
    if not 0 <= p < 1:
        raise ConfigError("p", f"density threshold must lie in [0, 1) or (1, 100), got {raw.get('p')!r}")

    mechs = raw.get("mechanisms", list(MECHANISMS))
    if not isinstance(mechs, list) or not mechs:
        raise ConfigError("mechanisms", "expected a non-empty list")
    for i, mname in enumerate(mechs):
        if mname not in MECHANISMS:
            raise ConfigError(f"mechanisms[{i}]", f"unknown mechanism {mname!r}")
    if len(set(mechs)) != len(mechs):
        raise ConfigError("mechanisms", "duplicate mechanism")

    eps = raw.get("epsilons", [0.1, 0.5, 1.0, 2.0])
    if isinstance(eps, (int, float)) and not isinstance(eps, bool):
        eps = [eps]
    if not isinstance(eps, list) or not eps:
        raise ConfigError("epsilons", "expected a non-empty list of positive numbers")
    eps = tuple(_number(e, f"epsilons[{i}]", positive=True) for i, e in enumerate(eps))

    alpha_raw = raw.get("alpha", {})
    if not isinstance(alpha_raw, dict):
        raise ConfigError("alpha", "expected an object mapping mechanism to alpha")
    alpha = {}
    for mname, a in alpha_raw.items():
        if mname not in DEFAULT_ALPHA:
            raise ConfigError(f"alpha.{mname}", "alpha applies only to privthr and privthr_em")
        a = _number(a, f"alpha.{mname}")
        if not 0 < a < 1:
            raise ConfigError(f"alpha.{mname}", f"must lie in (0, 1), got {a}")
        alpha[mname] = a

    reps = _number(raw.get("repetitions", 10), "repetitions", int)
    if reps < 1:
        raise ConfigError("repetitions", "must be >= 1")
    seed = _number(raw.get("master_seed", 0), "master_seed", int)
    frac = _number(raw.get("train_fraction", 0.8), "train_fraction")
    if not 0 < frac < 1:
        raise ConfigError("train_fraction", f"must lie in (0, 1), got {frac}")
    workers = _number(raw.get("workers", 1), "workers", int)
    if workers < 1:
        raise ConfigError("workers", "must be >= 1")
    out = raw.get("output_dir", "out")
    if not isinstance(out, str) or not out:
        raise ConfigError("output_dir", "expected a non-empty string")

    b = raw.get("bounds", {})
    if not isinstance(b, dict):
        raise ConfigError("bounds", "expected an object")
    b_mechs = b.get("mechanisms", list(BoundsRequest.mechanisms))
    if isinstance(b_mechs, str):
        b_mechs = [b_mechs]
    for i, mname in enumerate(b_mechs):
        if mname not in BoundsRequest.mechanisms:
            raise ConfigError(f"bounds.mechanisms[{i}]", f"no utility theorem for {mname!r}")
    omega = _number(b.get("omega", 0.05), "bounds.omega")
    if not 0 < omega < 1:
        raise ConfigError("bounds.omega", f"must lie in (0, 1), got {omega}")
    b_reps = _number(b.get("reps", 1000), "bounds.reps", int)
    if b_reps < 1:
        raise ConfigError("bounds.reps", "must be >= 1")
    bounds = BoundsRequest(tuple(b_mechs), _number(b.get("epsilon", 1.0), "bounds.epsilon", positive=True),
                           omega, b_reps)

    return ExperimentConfig(source, grid, p, tuple(mechs), eps, alpha, reps, seed, frac,
                            str(base_dir / out), workers, bounds)


def derive_seed(master_seed: int, *labels) -> int:
    """Stable 63-bit seed from the master seed and a tuple of labels."""
    text = ":".join(str(x) for x in (master_seed, *labels))
    return int.from_bytes(hashlib.sha256(text.encode()).digest()[:8], "big") >> 1


def load_dataset(cfg: ExperimentConfig) -> PointSet:
    if isinstance(cfg.dataset, CsvSource):
        rng = SeededRng(derive_seed(cfg.master_seed, "sample"))
        return ingest_csv(cfg.dataset.path, cfg.dataset.sample_n, rng)
    return generate(cfg.dataset)


@dataclass
class _Context:
    cfg: ExperimentConfig
    train: PointSet
    counts: object
    truth: object
    x_test: np.ndarray
    true_pred: np.ndarray


_CTX: _Context | None = None


def _init_worker(ctx: _Context) -> None:
    global _CTX
    _CTX = ctx


def _run_one(task: tuple) -> dict:
    mech, eps_index, rep = task
    ctx = _CTX
    cfg = ctx.cfg
    eps = cfg.epsilons[eps_index]
    seed = derive_seed(cfg.master_seed, mech, eps_index, rep)
    rec = {"mechanism": mech, "epsilon": eps, "eps_index": eps_index, "rep": rep, "seed": seed,
           "k_true": ctx.truth.threshold.k, "error": None}
    try:
        run_cfg = PrivateRunConfig(mech, eps, cfg.grid, cfg.p, seed=seed, alpha=cfg.alpha.get(mech))
        res = run_private(ctx.train, run_cfg, ctx.counts)
        rec.update(res.record(run_cfg))
        priv_pred = predict(train(training_set(res.clustering)), ctx.x_test)
        rec["dsgc"] = dsgc(ctx.truth.clustering, res.clustering)
        rec["ocm"] = ocm(ctx.true_pred, priv_pred)
        rec["tce"] = tce(ctx.true_pred, priv_pred)
        # a private clustering with no clusters matches nothing
        rec["fmeasure"] = fmeasure(ctx.truth.clustering, res.clustering) if res.clustering.cluster_count else 0.0
        rec["k_abs_error"] = abs(res.k_prime - res.k_true)
    except Exception as exc:  # recorded, never aborts the sweep
        rec["error"] = f"{type(exc).__name__}: {exc}"
    return rec


@dataclass
class ExperimentResult:
    truth: dict
    records: list
    aggregate: list

    @property
    def failed(self) -> int:
        return sum(r["error"] is not None for r in self.records)


def _stats(values: list) -> tuple[float, float]:
    n = len(values)
    mean = math.fsum(values) / n
    if n == 1:
        return mean, 0.0
    return mean, math.sqrt(math.fsum((v - mean) ** 2 for v in values) / (n - 1))


def aggregate(records: list, metrics=METRICS) -> list:
    """Mean and sample standard deviation per (mechanism, epsilon, metric).

    Cells appear in first-seen order; failed runs are counted but excluded
    from the statistics.
    """
    cells: dict = {}
    for r in records:
        cells.setdefault((r["mechanism"], r["epsilon"]), []).append(r)
    rows = []
    for (mech, eps), recs in cells.items():
        ok = [r for r in recs if r.get("error") is None]
        row = {"mechanism": mech, "epsilon": eps, "runs": len(recs), "failed": len(recs) - len(ok)}
        for m in metrics:
            vals = [float(r[m]) for r in ok if r.get(m) is not None]
            mean, std = _stats(vals) if vals else (math.nan, math.nan)
            row[f"{m}_mean"], row[f"{m}_std"] = mean, std
        rows.append(row)
    return rows


def run_experiment(cfg: ExperimentConfig, write: bool = True) -> ExperimentResult:
    """Run the sweep; write runs.jsonl, aggregate.csv and truth.json under ``cfg.output_dir``."""
    data = load_dataset(cfg)
    train_set, test_set = split_train_test(data, cfg.train_fraction, SeededRng(derive_seed(cfg.master_seed, "split")))
    truth = run_wavecluster(train_set, cfg.grid, cfg.p)
    x_test = normalize(test_set.points, data.bounds)
    true_pred = predict(train(training_set(truth.clustering)), x_test)
    ctx = _Context(cfg, train_set, quantize(train_set, cfg.grid), truth, x_test, true_pred)

    tasks = [(m, e, r) for m in cfg.mechanisms for e in range(len(cfg.epsilons)) for r in range(cfg.repetitions)]
    if cfg.workers == 1:
        _init_worker(ctx)
        records = [_run_one(t) for t in tasks]
    else:
        with ProcessPoolExecutor(cfg.workers, initializer=_init_worker, initargs=(ctx,)) as pool:
            records = list(pool.map(_run_one, tasks, chunksize=max(1, len(tasks) // (4 * cfg.workers))))

    truth_rec = {
        "k": truth.threshold.k,
        "d": truth.threshold.d,
        "l_size": int(truth.subband.L.size),
        "zcount": truth.subband.zcount,
        "cluster_count": truth.clustering.cluster_count,
        "n_train": len(train_set),
        "n_test": len(test_set),
        "grid": [cfg.grid.g1, cfg.grid.g2],
        "p": cfg.p,
    }
    result = ExperimentResult(truth_rec, records, aggregate(records))
    if write:
        write_outputs(result, cfg.output_dir)
    return result


def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def write_outputs(result: ExperimentResult, output_dir) -> None:
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "truth.json").write_text(json.dumps(result.truth, sort_keys=True, default=_json_default) + "\n")
    with open(out / "runs.jsonl", "w") as fh:
        for rec in result.records:
            fh.write(json.dumps(rec, sort_keys=True, default=_json_default) + "\n")
    with open(out / "aggregate.csv", "w", newline="") as fh:
        if result.aggregate:
            w = csv.DictWriter(fh, fieldnames=list(result.aggregate[0]))
            w.writeheader()
            w.writerows({k: repr(v) if isinstance(v, float) else v for k, v in row.items()}
                        for row in result.aggregate)
