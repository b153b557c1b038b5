"""Population average treatment effects with post-residualized weighting."""

import json

import numpy as np

from . import _core
from ._core import (
    PateError,
    efficiency_gain_weighted,
    entropy_balance,
    logistic_weights,
    relative_reduction,
)

__version__ = _core.__version__

__all__ = [
    "PateError",
    "analyze",
    "efficiency_gain_weighted",
    "entropy_balance",
    "logistic_weights",
    "relative_reduction",
    "simulate",
]


def _matrix(a):
    a = np.asarray(a, dtype=float)
    return a.reshape(-1, 1) if a.ndim == 1 else a


def analyze(covariates, treatment, outcome, pop_covariates, pop_outcome, *, names=None, adjust=None,
            weights="ebal", learner="ols-int", seed=1, level=0.95, splits=0, literal_direction=False,
            supplied_weights=None):
    """Weights, residualizer, all seven estimators, diagnostics and oracle terms as a dict."""
    report = _core.analyze(
        _matrix(covariates),
        np.asarray(treatment, dtype=float),
        np.asarray(outcome, dtype=float),
        _matrix(pop_covariates),
        np.asarray(pop_outcome, dtype=float),
        names=names,
        adjust=None if adjust is None else _matrix(adjust),
        weights=weights,
        learner=learner,
        seed=seed,
        level=level,
        splits=splits,
        literal_direction=literal_direction,
        supplied_weights=None if supplied_weights is None else np.asarray(supplied_weights, dtype=float),
    )
    return json.loads(report)


def simulate(scenario=1, beta_s=0.0, **kwargs):
    """Monte Carlo summary of one scenario cell as a dict."""
    return json.loads(_core.simulate(scenario, beta_s, **kwargs))
