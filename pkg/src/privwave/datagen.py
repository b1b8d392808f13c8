"""Synthetic stand-ins for the evaluation datasets, plus CSV ingestion.

The generators reproduce the documented structure of each dataset (point
counts, component counts, overlapping Gaussians, close spiral heads, bridged
dumbbells); they are not copies of the originals.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .dp import SeededRng
from .grid import PointSet


class GeneratorError(ValueError):
    pass


@dataclass(frozen=True)
class GeneratorSpec:
    kind: str
    n_points: int | None = None
    seed: int = 0
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in GENERATORS:
            raise GeneratorError(f"unknown generator kind {self.kind!r}; expected one of {sorted(GENERATORS)}")
        if self.n_points is not None and self.n_points <= 0:
            raise GeneratorError(f"n_points must be positive, got {self.n_points}")

    @classmethod
    def from_dict(cls, raw: dict) -> "GeneratorSpec":
        raw = dict(raw)
        kind = raw.pop("kind")
        n = raw.pop("n_points", None)
        seed = raw.pop("seed", 0)
        params = raw.pop("params", {})
        params.update(raw)
        return cls(kind, n, seed, params)


def _shares(n: int, parts: int) -> np.ndarray:
    """Split n into ``parts`` near-equal integer shares."""
    base = np.full(parts, n // parts)
    base[: n % parts] += 1
    return base


def gen_gaussians(spec: GeneratorSpec) -> PointSet:
    """Isotropic Gaussian blobs centred on a jittered lattice.

    params: components (15), columns (5), spacing (10.0), jitter (0.22, as a
    fraction of spacing), sigma (0.9), sigma_spread (0.35): per-component sigma
    is drawn from sigma * [1 - spread, 1 + spread].
    """
    p = spec.params
    comps = int(p.get("components", 15))
    if comps < 1:
        raise GeneratorError("components must be >= 1")
    n = spec.n_points or 30000
    cols = int(p.get("columns", 5))
    spacing = float(p.get("spacing", 10.0))
    jitter = float(p.get("jitter", 0.22))
    sigma = float(p.get("sigma", 0.9))
    spread = float(p.get("sigma_spread", 0.35))
    if sigma < 0 or not 0 <= spread < 1:
        raise GeneratorError("sigma must be >= 0 and sigma_spread in [0, 1)")
    rng = SeededRng(spec.seed)

    lattice = np.array([(c % cols, c // cols) for c in range(comps)], dtype=float) * spacing
    centers = lattice + (rng.random((comps, 2)) - 0.5) * 2 * jitter * spacing
    sigmas = sigma * (1 + (rng.random(comps) - 0.5) * 2 * spread)
    chunks = []
    for c, m in enumerate(_shares(n, comps)):
        chunks.append(centers[c] + rng.normal(0.0, 1.0, (m, 2)) * sigmas[c])
    return PointSet(np.vstack(chunks))


def gen_spirals(spec: GeneratorSpec) -> PointSet:
    """Archimedean arms r = pitch * t, t in [t0, t1], rotated by 2*pi*a/arms.

    Points are uniform along arc length, with Gaussian jitter of std ``noise``.
    params: arms (3), t0 (3.0), t1 (6.0), pitch (1.0), noise (0.15).
    """
    p = spec.params
    arms = int(p.get("arms", 3))
    if arms < 1:
        raise GeneratorError("arms must be >= 1")
    n = spec.n_points or 31200
    t0, t1 = float(p.get("t0", 3.0)), float(p.get("t1", 6.0))
    pitch = float(p.get("pitch", 1.0))
    noise = float(p.get("noise", 0.15))
    if not t1 > t0 >= 0 or pitch <= 0 or noise < 0:
        raise GeneratorError("need t1 > t0 >= 0, pitch > 0, noise >= 0")
    rng = SeededRng(spec.seed)

    # arc length of r = c t grows like t^2; invert a fine table for uniform density
    grid_t = np.linspace(t0, t1, 4097)
    ds = pitch * np.sqrt(1 + grid_t**2)
    arc = np.concatenate([[0.0], np.cumsum((ds[1:] + ds[:-1]) / 2 * np.diff(grid_t))])
    chunks = []
    for a, m in enumerate(_shares(n, arms)):
        t = np.interp(rng.random(m) * arc[-1], arc, grid_t)
        phi = t + 2 * np.pi * a / arms
        xy = np.column_stack([pitch * t * np.cos(phi), pitch * t * np.sin(phi)])
        chunks.append(xy + rng.normal(0.0, 1.0, (m, 2)) * noise)
    return PointSet(np.vstack(chunks))


def _uniform_rect(rng, m, x0, x1, y0, y1):
    u = rng.random((m, 2))
    return np.column_stack([x0 + u[:, 0] * (x1 - x0), y0 + u[:, 1] * (y1 - y0)])


def _uniform_annulus_arc(rng, m, cx, cy, r0, r1, a0, a1):
    # area-uniform radius
    r = np.sqrt(r0**2 + rng.random(m) * (r1**2 - r0**2))
    a = a0 + rng.random(m) * (a1 - a0)
    return np.column_stack([cx + r * np.cos(a), cy + r * np.sin(a)])


def _uniform_disc(rng, m, cx, cy, radius):
    return _uniform_annulus_arc(rng, m, cx, cy, 0.0, radius, 0.0, 2 * np.pi)


def gen_shapes(spec: GeneratorSpec) -> PointSet:
    """Rectangles, a concave annulus arc and two bridged dumbbells.

    params: bridge_density (1.0) scales the points on both dumbbell bridges;
    0 removes them. ``only`` restricts output to a subset of the named parts
    ("bar", "block", "arc", "dumbbell_h", "dumbbell_v").
    """
    p = spec.params
    n = spec.n_points or 31520
    bridge = float(p.get("bridge_density", 1.0))
    only = p.get("only")
    if bridge < 0:
        raise GeneratorError("bridge_density must be >= 0")
    rng = SeededRng(spec.seed)

    # name -> (weight, sampler); weights are relative areas at equal density
    parts = {
        "bar": (24.0, lambda m: _uniform_rect(rng, m, 0.0, 12.0, 0.0, 2.0)),
        "block": (36.0, lambda m: _uniform_rect(rng, m, 27.0, 33.0, 0.5, 6.5)),
        "arc": (36.0, lambda m: _uniform_annulus_arc(rng, m, 27.0, 22.0, 4.0, 6.5, 0.35 * np.pi, 1.65 * np.pi)),
        "dumbbell_h_a": (12.6, lambda m: _uniform_disc(rng, m, 3.0, 10.0, 2.0)),
        "dumbbell_h_b": (12.6, lambda m: _uniform_disc(rng, m, 15.0, 10.0, 2.0)),
        "dumbbell_h_bridge": (4.4 * bridge, lambda m: _uniform_rect(rng, m, 5.0, 13.0, 9.45, 10.55)),
        "dumbbell_v_a": (12.6, lambda m: _uniform_disc(rng, m, 8.0, 17.0, 2.0)),
        "dumbbell_v_b": (12.6, lambda m: _uniform_disc(rng, m, 8.0, 29.0, 2.0)),
        "dumbbell_v_bridge": (4.4 * bridge, lambda m: _uniform_rect(rng, m, 7.45, 8.55, 19.0, 27.0)),
    }
    if only is not None:
        keep = set(only)
        parts = {k: v for k, v in parts.items() if k.rsplit("_", 1)[0] in keep or k in keep}
        if not parts:
            raise GeneratorError(f"no shapes selected by only={only!r}")
    parts = {k: v for k, v in parts.items() if v[0] > 0}
    weights = np.array([w for w, _ in parts.values()])
    shares = np.floor(weights / weights.sum() * n).astype(int)
    shares[: n - shares.sum()] += 1
    chunks = [sampler(m) for (_, sampler), m in zip(parts.values(), shares)]
    return PointSet(np.vstack(chunks))


_DEFAULT_N = {"gaussians": 30000, "spirals": 31200, "shapes": 31520}

GENERATORS = {
    "gaussians": gen_gaussians,
    "spirals": gen_spirals,
    "shapes": gen_shapes,
}


def generate(spec: GeneratorSpec) -> PointSet:
    """Run the generator named by ``spec.kind``.

    ``params["multiplicity"]`` (default 1) draws ``n_points / multiplicity``
    base points and emits each one that many times. Stacked duplicates give
    coarse cell counts with no sparsely populated fringe cells.
    """
    mult = int(spec.params.get("multiplicity", 1))
    if mult < 1:
        raise GeneratorError("multiplicity must be >= 1")
    if mult == 1:
        return GENERATORS[spec.kind](spec)
    n = spec.n_points or _DEFAULT_N[spec.kind]
    if n % mult:
        raise GeneratorError(f"n_points={n} is not a multiple of multiplicity={mult}")
    base = GeneratorSpec(spec.kind, n // mult, spec.seed,
                         {k: v for k, v in spec.params.items() if k != "multiplicity"})
    return PointSet(np.repeat(GENERATORS[spec.kind](base).points, mult, axis=0))


# Reference configurations: generator spec, grid size, density threshold.
DATASETS = {
    "ds1": (GeneratorSpec("gaussians", 30000, seed=1, params={"multiplicity": 10}), 64, 0.58),
    "ds2": (GeneratorSpec("spirals", 31200, seed=1, params={"multiplicity": 10}), 40, 0.10),
    "ds3": (GeneratorSpec("shapes", 31520, seed=3, params={"multiplicity": 10}), 36, 0.23),
}


def ingest_csv(path, sample_n: int | None = None, rng=None) -> PointSet:
    """Read an ``x,y`` CSV; optionally keep a seeded uniform sample of rows."""
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header[:2]] != ["x", "y"]:
            raise GeneratorError(f"{path}: expected header 'x,y', got {header!r}")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            try:
                if len(row) < 2:
                    raise ValueError("too few columns")
                rows.append((float(row[0]), float(row[1])))
            except ValueError as exc:
                raise GeneratorError(f"{path}:{lineno}: malformed row {row!r} ({exc})") from None
    pts = np.array(rows, dtype=float).reshape(-1, 2)
    if sample_n is not None:
        if sample_n > len(pts):
            raise GeneratorError(f"sample_n={sample_n} exceeds the {len(pts)} rows in {path}")
        if rng is None:
            rng = SeededRng(0)
        pts = pts[rng.permutation(len(pts))[:sample_n]]
    return PointSet(pts)


def write_csv(d: PointSet, path, labels=None) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        if labels is None:
            w.writerow(["x", "y"])
            w.writerows((repr(float(x)), repr(float(y))) for x, y in d.points)
        else:
            w.writerow(["x", "y", "label"])
            w.writerows((repr(float(x)), repr(float(y)), int(l)) for (x, y), l in zip(d.points, labels))
