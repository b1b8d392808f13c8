"""Differentially private WaveCluster: mechanisms, metrics and experiment harness."""

from .bounds import (
    BoundInputs,
    Bounds,
    bounds_privqt,
    bounds_privthr,
    bounds_privthr_em,
    estimate_theta,
    theorem_coverage,
    validate_zero_flips,
)
from .classifier import DecisionTree, predict, train, training_set
from .datagen import DATASETS, GeneratorSpec, generate, ingest_csv
from .dp import Budget, BudgetExceededError, SeededRng, exp_mech_rank, laplace, perturb_counts
from .experiment import ConfigError, ExperimentConfig, aggregate, derive_seed, load_config, run_experiment
from .grid import CountMatrix, GridError, GridSpec, PointSet, quantize
from .metrics import dsgc, fmeasure, hungarian_min, ocm, tce
from .private import MECHANISMS, PrivateResult, PrivateRunConfig, run_private
from .wavecluster import GridClustering, run_wavecluster
from .wavelet import HAAR, Subband, haar_average_subband

__version__ = "0.1.0"
