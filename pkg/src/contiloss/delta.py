"""Regression-window delta and acceleration features along the time axis.

For order ``L`` the delta of a trajectory ``v`` is

    d(t) = sum_{l=1..L} l * (v(t+l) - v(t-l)) / sum_{l=1..L} 2 l^2

with out-of-range frames replaced by the nearest edge frame. Rows of the
input matrix are frames; each column (frequency bin) is processed
independently.
"""

from dataclasses import dataclass

import numpy as np

from ._validation import as_matrix


@dataclass(frozen=True)
class DeltaConfig:
    order: int = 2

    def __post_init__(self):
        if int(self.order) != self.order or self.order < 1:
            raise ValueError(f"delta order must be an integer >= 1, got {self.order}")

    @property
    def weights(self):
        lags = np.arange(1, self.order + 1, dtype=np.float64)
        return lags / (2.0 * np.sum(lags**2))


def _config(config):
    return DeltaConfig() if config is None else config


def _delta(x, config):
    n, order = x.shape[0], config.order
    padded = np.pad(x, ((order, order), (0, 0)), mode="edge")
    out = np.zeros_like(x)
    for lag, c in enumerate(config.weights, start=1):
        out += c * (padded[order + lag : order + lag + n] - padded[order - lag : order - lag + n])
    return out


def _delta_adjoint(y, config):
    n, order = y.shape[0], config.order
    acc = np.zeros((n + 2 * order, y.shape[1]))
    for lag, c in enumerate(config.weights, start=1):
        acc[order + lag : order + lag + n] += c * y
        acc[order - lag : order - lag + n] -= c * y
    out = acc[order : order + n].copy()
    out[0] += acc[:order].sum(axis=0)
    out[-1] += acc[order + n :].sum(axis=0)
    return out


def delta(matrix, config=None):
    """Delta features of ``matrix`` (frames x bins), same shape."""
    return _delta(as_matrix(matrix), _config(config))


def acceleration(matrix, config=None):
    """Delta of the delta."""
    config = _config(config)
    return _delta(_delta(as_matrix(matrix), config), config)


def delta_adjoint(upstream, config=None):
    """Transpose of :func:`delta`, including the edge-replication terms."""
    return _delta_adjoint(as_matrix(upstream, "upstream"), _config(config))


def acceleration_adjoint(upstream, config=None):
    config = _config(config)
    return _delta_adjoint(_delta_adjoint(as_matrix(upstream, "upstream"), config), config)
