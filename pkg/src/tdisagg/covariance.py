"""Residual covariance shapes for regression-based temporal disaggregation.

Every shape is returned with the innovation variance factored out, so the
full high-frequency covariance is ``sigma2 * S``.  Three error processes are
supported:

* ``AR1`` (Chow-Lin): stationary first-order autoregression, Toeplitz shape
  ``rho**|i-j| / (1 - rho**2)``.
* ``Fernandez``: random walk started at zero, ``S = (D'D)^-1``.
* ``Litterman``: random walk whose increments follow an AR(1),
  ``S = (D'H'HD)^-1``.

``D`` is the first-difference matrix and ``H`` the quasi-difference matrix
with ``-rho`` on the first subdiagonal.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solveh_banded, toeplitz

from .errors import DomainError, NumericalError

PIVOT_TOL = 1e-12


class CovarianceKind(str, enum.Enum):
    AR1 = "ar1"
    FERNANDEZ = "fernandez"
    LITTERMAN = "litterman"


@dataclass(frozen=True)
class CovarianceFactor:
    """A unit-variance covariance shape with its Cholesky factor.

    Attributes
    ----------
    matrix : ndarray, shape (p, p)
        Symmetric positive-definite shape ``S``.
    lower_cholesky : ndarray, shape (p, p)
        Lower-triangular ``L`` with ``L @ L.T == S``.
    log_det : float
        ``log|S|``, computed from the Cholesky diagonal.
    """

    matrix: np.ndarray
    lower_cholesky: np.ndarray
    log_det: float

    @property
    def size(self) -> int:
        return self.matrix.shape[0]


def cholesky_factor(matrix: np.ndarray) -> CovarianceFactor:
    """Factor an SPD matrix, raising `NumericalError` on a pivot <= 1e-12."""
    matrix = np.asarray(matrix, dtype=float)
    try:
        lower = np.linalg.cholesky(matrix)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"Cholesky factorization failed: {exc}") from None
    diag = np.diag(lower)
    if diag.size and diag.min() <= PIVOT_TOL:
        raise NumericalError(
            f"Cholesky pivot {diag.min():.3e} is not above {PIVOT_TOL:g}"
        )
    lower.setflags(write=False)
    matrix = matrix.copy()
    matrix.setflags(write=False)
    return CovarianceFactor(matrix, lower, float(2.0 * np.log(diag).sum()))


def _check_size(p) -> int:
    if int(p) != p or p < 1:
        raise DomainError(f"covariance size must be a positive integer, got {p!r}")
    return int(p)


def _check_rho(rho) -> float:
    rho = float(rho)
    if not np.isfinite(rho) or abs(rho) >= 1.0:
        raise DomainError(f"rho must lie in (-1, 1), got {rho!r}")
    return rho


def ar1_shape_matrix(rho: float, p: int) -> np.ndarray:
    """Toeplitz AR(1) shape without factoring it."""
    rho = _check_rho(rho)
    p = _check_size(p)
    col = rho ** np.arange(p) if rho != 0.0 else np.eye(1, p).ravel()
    return toeplitz(col / (1.0 - rho * rho))


def _inverse_of_difference_gram(rho: float, p: int) -> np.ndarray:
    """Solve ``(D'H'HD) S = I`` using the pentadiagonal band of the precision.

    ``HD`` is lower-triangular with rows ``(rho, -(1 + rho), 1)`` on the
    second subdiagonal, first subdiagonal and diagonal, truncated at the top.
    """
    filt = np.array([1.0, -(1.0 + rho), rho])
    if p == 1:
        return np.ones((1, 1))
    band = np.zeros((3, p))
    # precision[j, j + k] = sum_i M[i, j] * M[i, j + k], rows i >= j + k
    for k in range(3):
        for lag_hi in range(0, 3 - k):
            lag_lo = lag_hi + k
            # M[i, j + k] = filt[lag_hi] with i = j + k + lag_hi,
            # M[i, j] = filt[lag_lo]; valid while i < p
            last = p - k - lag_hi  # exclusive bound on j
            if last <= 0:
                continue
            band[2 - k, k:k + last] += filt[lag_hi] * filt[lag_lo]
    # band is in upper form: band[2 - k, j + k] holds precision[j, j + k]
    shape = solveh_banded(band, np.eye(p), lower=False)
    return 0.5 * (shape + shape.T)


def fernandez_shape_matrix(p: int) -> np.ndarray:
    return _inverse_of_difference_gram(0.0, _check_size(p))


def litterman_shape_matrix(rho: float, p: int) -> np.ndarray:
    return _inverse_of_difference_gram(_check_rho(rho), _check_size(p))


def build_ar1_shape(rho: float, p: int) -> CovarianceFactor:
    """Chow-Lin shape ``rho**|i-j| / (1 - rho**2)``."""
    return cholesky_factor(ar1_shape_matrix(rho, p))


def build_fernandez_shape(p: int) -> CovarianceFactor:
    """Random-walk shape ``(D'D)^-1``; entry ``(i, j)`` is ``min(i, j) + 1``."""
    return cholesky_factor(fernandez_shape_matrix(p))


def build_litterman_shape(rho: float, p: int) -> CovarianceFactor:
    """Random-walk-Markov shape ``(D'H'HD)^-1``."""
    return cholesky_factor(litterman_shape_matrix(rho, p))


@dataclass(frozen=True)
class CovarianceModel:
    kind: CovarianceKind
    size: int
    rho: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", CovarianceKind(self.kind))
        _check_size(self.size)
        if self.kind is not CovarianceKind.FERNANDEZ:
            _check_rho(self.rho)

    def shape_matrix(self) -> np.ndarray:
        if self.kind is CovarianceKind.AR1:
            return ar1_shape_matrix(self.rho, self.size)
        if self.kind is CovarianceKind.FERNANDEZ:
            return fernandez_shape_matrix(self.size)
        return litterman_shape_matrix(self.rho, self.size)

    def factor(self) -> CovarianceFactor:
        return cholesky_factor(self.shape_matrix())
