"""Level-1 average subband and the sensitivity facts the mechanisms rely on."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .grid import CountMatrix, GridError


@dataclass(frozen=True)
class TransformProfile:
    """Per-transform constants consumed by the private pipelines.

    quad_divisor: divisor applied to a 2x2 block sum.
    zcount_sensitivity: L1 sensitivity of the non-positive count |Z|.
    quality_sensitivity: sensitivity of the rank quality function.
    """

    name: str
    quad_divisor: float
    zcount_sensitivity: float
    quality_sensitivity: float


HAAR = TransformProfile("haar", quad_divisor=2.0, zcount_sensitivity=1.0, quality_sensitivity=1.0)


@dataclass(frozen=True)
class Subband:
    values: np.ndarray

    @property
    def dims(self) -> tuple[int, int]:
        return self.values.shape

    @property
    def L(self) -> np.ndarray:
        """Strictly positive values, ascending."""
        v = self.values.ravel()
        return np.sort(v[v > 0])

    @property
    def zcount(self) -> int:
        return int((self.values <= 0).sum())


def haar_average_subband(m, profile: TransformProfile = HAAR) -> Subband:
    cells = m.cells if isinstance(m, CountMatrix) else np.asarray(m)
    g1, g2 = cells.shape
    if g1 % 2 or g2 % 2:
        raise GridError(f"Haar average subband needs even dimensions, got {g1}x{g2}")
    quads = cells.reshape(g1 // 2, 2, g2 // 2, 2).sum(axis=(1, 3))
    return Subband(quads / profile.quad_divisor)


def dump_subband(s: Subband, csv_path) -> None:
    """Write the subband matrix as CSV and a ``.json`` sidecar with |L| and |Z|."""
    csv_path = Path(csv_path)
    np.savetxt(csv_path, s.values, delimiter=",", fmt="%.10g")
    sidecar = csv_path.with_suffix(".json")
    sidecar.write_text(json.dumps({"l_size": int(s.L.size), "zcount": s.zcount}))


def load_subband(csv_path) -> Subband:
    return Subband(np.atleast_2d(np.loadtxt(csv_path, delimiter=",")))
