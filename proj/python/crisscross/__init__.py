"""Criss-cross MNAR models: identification and odds-ratio estimation."""

import json

from ._core import (
    ConfigError,
    DataError,
    DomainError,
    NumericalError,
    derive_conditional,
    estimate_gee,
    estimate_pseudolik,
    identify,
    run_experiment_json,
    simulate,
    verify_counterexample,
)


def run_experiment(config):
    """Run a replication study from a config dict and return the parsed report."""
    return json.loads(run_experiment_json(json.dumps(config)))


__all__ = [
    "ConfigError",
    "DataError",
    "DomainError",
    "NumericalError",
    "derive_conditional",
    "estimate_gee",
    "estimate_pseudolik",
    "identify",
    "run_experiment",
    "simulate",
    "verify_counterexample",
]
