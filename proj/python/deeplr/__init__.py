"""Likelihood-ratio confidence intervals for neural-network outputs."""

import json

from ._core import (  # noqa: F401
    ConfidenceInterval,
    DegenerateDataError,
    DegenerateRequestError,
    DomainError,
    Error,
    FormatError,
    Head,
    MlpSpec,
    TrainConfig,
    TrainingDivergedError,
    UnreachableDirectionError,
    WeightedDataset,
    chi2_cdf,
    chi2_quantile,
    confidence_interval,
    ensemble_interval,
    forward,
    gaussian_mean_lr_interval,
    gen_toy_classification,
    gen_toy_regression,
    gen_two_moons,
    init_params,
    ks_distance,
    normal_cdf,
    normal_quantile,
    train,
)
from . import _core


def preset(name):
    """Reference configuration for an experiment, as a dict."""
    return json.loads(_core.preset_json(name))


def run_experiment(config, workers=1, write_files=False):
    """Runs a grid experiment; returns one dict per grid point."""
    return _core.run_experiment_json(json.dumps(config), workers, write_files)


def run_coverage(config, replications, workers=1, write_files=False):
    return json.loads(_core.run_coverage_json(json.dumps(config), replications, workers, write_files))


def run_wilks_mc(reps, n_per_rep, seed, unknown_sigma=False):
    return json.loads(_core.run_wilks_mc(reps, n_per_rep, seed, unknown_sigma))


def run_markov_mc(reps, n_per_rep, alpha, seed, h1_mean=0.5):
    return json.loads(_core.run_markov_mc(reps, n_per_rep, alpha, seed, h1_mean))
