"""Synthetic data for simulation studies.

Draws Gaussian indicators, a sparse coefficient vector with entries in
``{-b, 0, +b}``, errors from one of the three covariance processes, and
aggregates the resulting high-frequency series.  Everything is driven by a
single ``numpy.random.Generator`` so a fixed seed reproduces the bundle
bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from .aggregation import AggMode, AggregationSpec, aggregate
from .errors import DomainError
from .gls import Method


@dataclass(frozen=True)
class DgpConfig:
    n_low: int
    n_high: int
    ratio: int = 4
    d: int = 1
    beta_magnitude: float = 1.0
    sparsity: float = 0.0
    error_method: Method = Method.CHOW_LIN
    rho: float = 0.0
    agg_mode: AggMode = AggMode.SUM
    design_mean: float = 0.0
    design_sd: float = 1.0
    seed: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "error_method", Method(self.error_method))
        object.__setattr__(self, "agg_mode", AggMode(self.agg_mode))
        if self.error_method.is_sparse:
            raise DomainError("error_method must be chow-lin, fernandez or litterman")
        if int(self.d) != self.d or self.d < 1:
            raise DomainError(f"d must be a positive integer, got {self.d!r}")
        if not 0.0 <= self.sparsity <= 1.0:
            raise DomainError(f"sparsity must lie in [0, 1], got {self.sparsity!r}")
        if not self.beta_magnitude > 0:
            raise DomainError("beta_magnitude must be positive")
        if not self.design_sd > 0:
            raise DomainError("design_sd must be positive")
        if self.error_method is not Method.FERNANDEZ and not abs(self.rho) < 1.0:
            raise DomainError(f"rho must lie in (-1, 1), got {self.rho!r}")
        # validates n_low, ratio and n_high >= n_low * ratio
        self.spec

    @property
    def spec(self) -> AggregationSpec:
        return AggregationSpec(self.agg_mode, self.ratio, self.n_low, self.n_high)

    @property
    def n_zero(self) -> int:
        """``round(sparsity * d)`` with halves rounded up."""
        return int(math.floor(self.sparsity * self.d + 0.5))


@dataclass(frozen=True)
class DgpOutput:
    y_low: np.ndarray
    y_high: np.ndarray
    X: np.ndarray
    beta_true: np.ndarray
    errors: np.ndarray
    config: DgpConfig | None = None

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.beta_true)


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def generate_errors(method, rho: float, n: int, seed=None) -> np.ndarray:
    """Draw ``n`` errors with unit innovation variance.

    chow-lin
        Stationary AR(1); the first value comes from ``N(0, 1/(1-rho^2))``.
    fernandez
        Random walk started from zero.
    litterman
        Random walk whose increments are an AR(1) started from zero.
    """
    method = Method(method)
    if int(n) != n or n < 1:
        raise DomainError(f"n must be a positive integer, got {n!r}")
    if method.is_sparse:
        raise DomainError("error method must be chow-lin, fernandez or litterman")
    if method is not Method.FERNANDEZ and not abs(rho) < 1.0:
        raise DomainError(f"rho must lie in (-1, 1), got {rho!r}")
    eps = _rng(seed).standard_normal(int(n))
    if method is Method.CHOW_LIN:
        eps[0] /= math.sqrt(1.0 - rho * rho)
        return lfilter([1.0], [1.0, -rho], eps)
    if method is Method.FERNANDEZ:
        return np.cumsum(eps)
    return np.cumsum(lfilter([1.0], [1.0, -rho], eps))


def generate(config: DgpConfig) -> DgpOutput:
    """Draw one synthetic data set from ``config``."""
    rng = _rng(config.seed)
    X = rng.normal(config.design_mean, config.design_sd, size=(config.n_high, config.d))
    beta = np.where(rng.random(config.d) < 0.5, -1.0, 1.0) * config.beta_magnitude
    beta[rng.permutation(config.d)[: config.n_zero]] = 0.0
    errors = generate_errors(config.error_method, config.rho, config.n_high, rng)
    y_high = X @ beta + errors
    return DgpOutput(
        y_low=aggregate(y_high, config.spec),
        y_high=y_high,
        X=X,
        beta_true=beta,
        errors=errors,
        config=config,
    )
