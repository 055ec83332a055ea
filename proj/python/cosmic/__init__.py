"""Python access to the covariate-aware forecasting core."""

import json

import numpy as np

from . import _core
from ._core import (
    QUANTILE_LEVELS,
    CapabilityError,
    CheckpointError,
    ConfigError,
    ParseError,
    ValidationError,
    init_checkpoint,
    render_config,
    roll_count,
)

__all__ = [
    "QUANTILE_LEVELS",
    "CapabilityError",
    "CheckpointError",
    "ConfigError",
    "Model",
    "ParseError",
    "ValidationError",
    "fit_in_context",
    "gradient_check",
    "init_checkpoint",
    "mase",
    "render_config",
    "ridge_forecast",
    "roll_count",
    "seasonal_naive",
    "wql",
]


def _sample_json(sample):
    return sample if isinstance(sample, str) else json.dumps(sample)


def seasonal_naive(context, period, horizon):
    return np.asarray(_core.seasonal_naive(list(map(float, context)), int(period), int(horizon)))


def mase(forecast_median, truth, context, period):
    return _core.mase(list(map(float, forecast_median)), list(map(float, truth)), list(map(float, context)), int(period))


def wql(forecast, truth):
    return _core.wql(np.asarray(forecast, dtype=float).tolist(), list(map(float, truth)))


def fit_in_context(sample, ridge_lambda=1.0):
    return _core.fit_in_context(_sample_json(sample), ridge_lambda)


def ridge_forecast(sample, ridge_lambda=1.0):
    return np.asarray(_core.ridge_forecast(_sample_json(sample), ridge_lambda))


def gradient_check(config_text, sample, seed, entries=200, epsilon=1e-5):
    return _core.gradient_check(config_text, _sample_json(sample), seed, entries, epsilon)


class Model:
    """A trained checkpoint written by `cosmic train`."""

    def __init__(self, path):
        self._model = _core.Model(str(path))

    @property
    def num_parameters(self):
        return self._model.num_parameters

    @property
    def config(self):
        return self._model.config

    def predict(self, sample, use_covariates=True):
        """Quantile forecast as a (horizon, 9) array in the target's scale."""
        return np.asarray(self._model.predict(_sample_json(sample), use_covariates))
