"""Command-line entry point: ``privwave {run,gen,bounds,metrics}``."""

from __future__ import annotations

import argparse
import dataclasses
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .bounds import theorem_coverage
from .datagen import DATASETS, GeneratorError, GeneratorSpec, generate, write_csv
from .experiment import ConfigError, load_config, load_dataset, run_experiment
from .grid import quantize
from .metrics import dsgc, fmeasure, ocm, tce
from .wavecluster import GridClustering, canonicalize

log = logging.getLogger("privwave")

EXIT_OK, EXIT_CONFIG, EXIT_FAILED_RUNS = 0, 2, 3


class LabelFileError(ValueError):
    pass


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    if args.output_dir:
        cfg = dataclasses.replace(cfg, output_dir=args.output_dir)
    result = run_experiment(cfg)
    log.info("truth: k=%d, %d clusters; %d runs written to %s",
             result.truth["k"], result.truth["cluster_count"], len(result.records), cfg.output_dir)
    if result.failed:
        log.error("%d of %d runs failed; see the error field in runs.jsonl", result.failed, len(result.records))
        return EXIT_FAILED_RUNS
    return EXIT_OK


def _cmd_gen(args) -> int:
    try:
        raw = json.loads(Path(args.spec).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError("spec", f"cannot load {args.spec}: {exc}") from None
    if isinstance(raw, str) or (isinstance(raw, dict) and "name" in raw):
        name = raw if isinstance(raw, str) else raw["name"]
        if name not in DATASETS:
            raise ConfigError("spec.name", f"unknown dataset {name!r}")
        spec = DATASETS[name][0]
    else:
        try:
            spec = GeneratorSpec.from_dict(raw)
        except (GeneratorError, KeyError, TypeError) as exc:
            raise ConfigError("spec", f"invalid generator spec: {exc}") from None
    d = generate(spec)
    write_csv(d, args.out)
    log.info("wrote %d points to %s", len(d), args.out)
    return EXIT_OK


def _cmd_bounds(args) -> int:
    cfg = load_config(args.config)
    b = cfg.bounds
    m = quantize(load_dataset(cfg), cfg.grid)
    out = []
    for mech in b.mechanisms:
        rep = theorem_coverage(m, cfg.grid, cfg.p, mech, b.epsilon, b.omega, b.reps,
                               seed=cfg.master_seed, alpha=cfg.alpha.get(mech))
        out.append(rep.as_dict())
    json.dump(out if len(out) > 1 else out[0], sys.stdout, indent=2)
    sys.stdout.write("\n")
    return EXIT_OK


def read_labels(path):
    """Per-point ``x,y,label`` CSV -> 1-D array, or a headerless label matrix -> 2-D array."""
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise LabelFileError(f"{path}: empty label file")
    header = [c.strip().lower() for c in rows[0]]
    try:
        if header[:3] == ["x", "y", "label"]:
            return np.array([int(r[2]) for r in rows[1:]], dtype=np.int64)
        mat = np.array([[int(c) for c in r] for r in rows], dtype=np.int64)
    except (ValueError, IndexError) as exc:
        raise LabelFileError(f"{path}: malformed label row ({exc})") from None
    return mat


def _point_clusters(labels: np.ndarray) -> list:
    return [frozenset(np.nonzero(labels == c)[0].tolist()) for c in np.unique(labels) if c != 0]


def _cmd_metrics(args) -> int:
    t, s = read_labels(args.truth), read_labels(args.priv)
    if t.shape != s.shape:
        raise ConfigError("priv", f"shape {s.shape} does not match truth shape {t.shape}")
    out = {"ocm": ocm(t.ravel(), s.ravel()), "tce": tce(t.ravel(), s.ravel())}
    if t.ndim == 2:
        tc, sc = GridClustering(canonicalize(t)), GridClustering(canonicalize(s))
        out["dsgc"] = dsgc(tc, sc)
        out["fmeasure"] = fmeasure(tc, sc) if sc.cluster_count else 0.0
    else:
        tc, sc = _point_clusters(t), _point_clusters(s)
        out["fmeasure"] = fmeasure(tc, sc) if sc else 0.0
    json.dump(out, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="privwave", description="Differentially private WaveCluster experiments.")
    ap.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment sweep")
    run.add_argument("--config", required=True)
    run.add_argument("--output-dir", help="override the config's output_dir")
    run.set_defaults(func=_cmd_run)

    gen = sub.add_parser("gen", help="write a synthetic dataset as x,y CSV")
    gen.add_argument("--spec", required=True, help='generator spec JSON, or {"name": "ds1"}')
    gen.add_argument("--out", required=True)
    gen.set_defaults(func=_cmd_gen)

    bnd = sub.add_parser("bounds", help="Monte-Carlo coverage of the utility bounds")
    bnd.add_argument("--config", required=True)
    bnd.set_defaults(func=_cmd_bounds)

    met = sub.add_parser("metrics", help="compare two labelings")
    met.add_argument("--truth", required=True)
    met.add_argument("--priv", required=True)
    met.set_defaults(func=_cmd_metrics)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ConfigError, GeneratorError, LabelFileError, OSError) as exc:
        log.error("%s", exc)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
