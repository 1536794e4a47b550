"""Classical regression-based disaggregation (Chow-Lin, Fernandez, Litterman).

The low-frequency regression ``y_q = X_q beta + u_q`` with
``u_q ~ N(0, sigma2 * S_q)`` is fitted by GLS.  ``sigma2`` is concentrated
out of the Gaussian likelihood, leaving a one-dimensional search over the
autoregressive parameter.  The high-frequency estimate distributes the
low-frequency residuals with the covariance of the high-frequency errors::

    y_hat = X_m beta + S_m C' S_q^-1 (y_q - X_q beta)

so that ``C @ y_hat == y_q`` on every benchmarked period.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import cho_solve, qr, solve_triangular

from . import covariance
from .aggregation import AggregationSpec, _apply_rows, _congruence, build_aggregation_matrix
from .errors import DimensionRegimeError, DomainError, InvalidGrid, RankError, ShapeError

LOG_2PI = math.log(2.0 * math.pi)
RANK_TOL = 1e-10
# residual sums of squares below (EXACT_FIT_TOL * |y_w|)^2 count as an exact fit
EXACT_FIT_TOL = 1e-12


class Method(str, enum.Enum):
    CHOW_LIN = "chow-lin"
    FERNANDEZ = "fernandez"
    LITTERMAN = "litterman"
    SPTD = "sptd"
    ADAPTIVE_SPTD = "adaptive-sptd"

    @property
    def is_sparse(self) -> bool:
        return self in (Method.SPTD, Method.ADAPTIVE_SPTD)


def default_rho_grid() -> np.ndarray:
    """199 equally spaced points on [-0.99, 0.99] (step 0.01)."""
    return np.round(np.linspace(-0.99, 0.99, 199), 10)


def check_grid(grid) -> np.ndarray:
    grid = np.atleast_1d(np.asarray(grid, dtype=float))
    if grid.ndim != 1 or grid.size == 0:
        raise InvalidGrid("rho grid must be a non-empty sequence")
    if not np.all(np.isfinite(grid)) or np.any(np.abs(grid) >= 1.0):
        raise InvalidGrid("every rho in the grid must lie in (-1, 1)")
    return grid


@dataclass(frozen=True)
class GlsFit:
    """GLS coefficients with the concentrated Gaussian likelihood.

    ``loglik`` is ``+inf`` when the fit is exact (``sigma2 == 0``).
    """

    beta: np.ndarray
    rho: float | None
    sigma2: float
    loglik: float
    residuals_low: np.ndarray


def concentrated_loglik(n: int, sigma2: float, log_det: float) -> float:
    """Gaussian log-likelihood at ``sigma2 = r' S^-1 r / n``."""
    if sigma2 <= 0.0:
        return math.inf
    return -0.5 * n * (LOG_2PI + math.log(sigma2) + 1.0) - 0.5 * log_det


def gaussian_loglik(residuals, S_q, sigma2: float) -> float:
    """Log-density of ``residuals`` under ``N(0, sigma2 * S_q)``.

    The quadratic form is whitened: ``r' S_q^-1 r / sigma2``.
    """
    sigma2 = float(sigma2)
    if not sigma2 > 0.0:
        raise DomainError(f"sigma2 must be positive, got {sigma2!r}")
    r = np.asarray(residuals, dtype=float)
    fac = covariance.cholesky_factor(S_q)
    if fac.size != r.size:
        raise ShapeError(f"residuals have length {r.size}, S_q is {fac.size}x{fac.size}")
    z = solve_triangular(fac.lower_cholesky, r, lower=True)
    n = r.size
    return float(
        -0.5 * n * LOG_2PI
        - 0.5 * n * math.log(sigma2)
        - 0.5 * fac.log_det
        - 0.5 * (z @ z) / sigma2
    )


def _solve_whitened(y_w: np.ndarray, X_w: np.ndarray):
    """Least squares on an already-whitened problem; returns ``(beta, rss)``."""
    n, d = X_w.shape
    if d == 0:
        return np.zeros(0), float(y_w @ y_w)
    Q, R, perm = qr(X_w, mode="economic", pivoting=True, check_finite=False)
    diag = np.abs(np.diag(R))
    if diag[0] == 0.0 or diag[-1] < RANK_TOL * diag[0]:
        raise RankError(
            f"whitened design is rank deficient (relative pivot {diag[-1] / max(diag[0], 1e-300):.2e})"
        )
    beta = np.empty(d)
    beta[perm] = solve_triangular(R, Q.T @ y_w, check_finite=False)
    resid = y_w - X_w @ beta
    return beta, float(resid @ resid)


def _fit(y_q, X_q, fac: covariance.CovarianceFactor, rho=None) -> GlsFit:
    n = y_q.size
    L = fac.lower_cholesky
    y_w = solve_triangular(L, y_q, lower=True)
    X_w = solve_triangular(L, X_q, lower=True) if X_q.shape[1] else X_q
    beta, rss = _solve_whitened(y_w, X_w)
    if rss <= (EXACT_FIT_TOL * math.sqrt(float(y_w @ y_w))) ** 2:
        rss = 0.0
    sigma2 = rss / n
    return GlsFit(
        beta=beta,
        rho=rho,
        sigma2=sigma2,
        loglik=concentrated_loglik(n, sigma2, fac.log_det),
        residuals_low=y_q - X_q @ beta,
    )


def _as_design(X, n_rows: int) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2 or X.shape[0] != n_rows:
        raise ShapeError(f"design has shape {X.shape}, expected {n_rows} rows")
    return X


def gls_estimate(y_q, X_q, S_q, rho: float | None = None) -> GlsFit:
    """Fit ``y_q = X_q beta + u``, ``u ~ N(0, sigma2 S_q)`` by GLS.

    Whitening uses triangular solves against the Cholesky factor of
    ``S_q``.  ``sigma2`` is the ML estimate ``r' S_q^-1 r / n``.

    Raises
    ------
    RankError
        If the whitened design has a relative QR pivot below 1e-10.
    ShapeError
        On inconsistent dimensions.
    """
    y_q = np.asarray(y_q, dtype=float).ravel()
    X_q = _as_design(X_q, y_q.size)
    S_q = np.asarray(S_q, dtype=float)
    if S_q.shape != (y_q.size, y_q.size):
        raise ShapeError(f"S_q has shape {S_q.shape}, expected {(y_q.size, y_q.size)}")
    return _fit(y_q, X_q, covariance.cholesky_factor(S_q), rho)


def profile_rho_search(
    y_q,
    builder: Callable[[float], tuple[np.ndarray, np.ndarray]],
    grid: Sequence[float],
) -> tuple[float, GlsFit]:
    """Maximize the concentrated likelihood over a grid of rho values.

    ``builder(rho)`` must return ``(X_q, S_q)``.  Ties go to the smaller
    ``|rho|``, then to the earlier grid point.
    """
    grid = check_grid(grid)
    y_q = np.asarray(y_q, dtype=float).ravel()
    best = None
    for rho in grid:
        X_q, S_q = builder(float(rho))
        fit = gls_estimate(y_q, X_q, S_q, rho=float(rho))
        if best is None or fit.loglik > best.loglik or (
            fit.loglik == best.loglik and abs(fit.rho) < abs(best.rho)
        ):
            best = fit
    return best.rho, best


@dataclass(frozen=True)
class DisaggregationResult:
    """High-frequency estimate together with the fit that produced it."""

    y_high: np.ndarray
    fit: object
    method: Method
    spec: AggregationSpec
    selected_columns: list[str]
    columns: list[str] = field(default_factory=list)
    y_low: np.ndarray | None = None
    first_stage: DisaggregationResult | None = None

    @property
    def beta(self) -> np.ndarray:
        return self.fit.beta

    @property
    def rho(self) -> float | None:
        return self.fit.rho

    def aggregated(self) -> np.ndarray:
        return build_aggregation_matrix(self.spec) @ self.y_high

    def consistency_residual(self) -> float:
        """``max |C y_hat - y_q| / max |y_q|``."""
        diff = np.abs(self.aggregated() - self.y_low).max()
        scale = np.abs(self.y_low).max()
        return float(diff / scale) if scale > 0 else float(diff)


def prepare_inputs(y_q, X_m, spec: AggregationSpec, names=None):
    """Validate shapes and resolve indicator names; ``X_m=None`` means a constant."""
    y_q = np.asarray(y_q, dtype=float).ravel()
    if y_q.size != spec.n_low:
        raise ShapeError(f"y_q has length {y_q.size}, spec expects n_low={spec.n_low}")
    if X_m is None:
        X_m, names = np.ones((spec.n_high, 1)), ["constant"]
    if names is None:
        names = getattr(X_m, "columns", None)
    X_m = _as_design(X_m, spec.n_high)
    if names is None:
        names = [f"x{j + 1}" for j in range(X_m.shape[1])]
    names = [str(n) for n in names]
    if len(names) != X_m.shape[1]:
        raise ShapeError(f"{len(names)} names given for {X_m.shape[1]} columns")
    if not (np.all(np.isfinite(y_q)) and np.all(np.isfinite(X_m))):
        raise DomainError("inputs contain non-finite values")
    return y_q, X_m, names


def shape_builder(method: Method, n_high: int) -> Callable[[float], np.ndarray]:
    method = Method(method)
    if method is Method.FERNANDEZ:
        return lambda rho: covariance.fernandez_shape_matrix(n_high)
    if method is Method.LITTERMAN:
        return lambda rho: covariance.litterman_shape_matrix(rho, n_high)
    return lambda rho: covariance.ar1_shape_matrix(rho, n_high)


def distribute(y_q, X_m, beta, S_m, spec: AggregationSpec) -> np.ndarray:
    """``X_m beta + S_m C' S_q^-1 (y_q - C X_m beta)``."""
    SCt, S_q = _congruence(spec, S_m)
    fac = covariance.cholesky_factor(S_q)
    resid = y_q - _apply_rows(spec, X_m) @ beta
    return X_m @ beta + SCt @ cho_solve((fac.lower_cholesky, True), resid)


def disaggregate_classical(
    y_q,
    X_m,
    spec: AggregationSpec,
    method: Method | str = Method.CHOW_LIN,
    grid=None,
    names=None,
) -> DisaggregationResult:
    """Low-dimensional GLS disaggregation.

    Parameters
    ----------
    y_q : array_like, shape (n_low,)
        Benchmarks.
    X_m : array_like, shape (n_high, d), or None
        High-frequency indicators.  ``None`` uses a single constant column.
    spec : AggregationSpec
    method : {"chow-lin", "fernandez", "litterman"}
    grid : sequence of float, optional
        Candidate rho values; defaults to `default_rho_grid`.  Ignored for
        Fernandez.
    names : sequence of str, optional
        Indicator names; taken from ``X_m.columns`` when available.
    """
    method = Method(method)
    if method.is_sparse:
        raise DomainError(f"{method.value} is not a classical method")
    y_q, X_m, names = prepare_inputs(y_q, X_m, spec, names)
    d = X_m.shape[1]
    if d >= spec.n_low:
        raise DimensionRegimeError(
            f"{d} indicators with only {spec.n_low} benchmarks; use method 'sptd' or 'adaptive-sptd'"
        )
    X_q = _apply_rows(spec, X_m)
    shape = shape_builder(method, spec.n_high)

    if method is Method.FERNANDEZ:
        grid = [0.0]
    elif grid is None:
        grid = default_rho_grid()

    def builder(rho):
        return X_q, _congruence(spec, shape(rho))[1]

    if method is Method.FERNANDEZ:
        fit = gls_estimate(y_q, X_q, builder(0.0)[1], rho=None)
        S_m = shape(0.0)
    else:
        rho_hat, fit = profile_rho_search(y_q, builder, grid)
        S_m = shape(rho_hat)
    y_high = distribute(y_q, X_m, fit.beta, S_m, spec)
    return DisaggregationResult(
        y_high=y_high,
        fit=fit,
        method=method,
        spec=spec,
        selected_columns=[n for n, b in zip(names, fit.beta) if b != 0.0],
        columns=names,
        y_low=y_q,
    )


def rho_profile(y_q, X_m, spec: AggregationSpec, method: Method | str, grid=None) -> list[tuple]:
    """Concentrated log-likelihood and BIC at every grid point.

    Returns rows ``(rho, loglik, bic)`` where the BIC counts the regression
    coefficients plus rho.  Fernandez has no free parameter and yields a
    single row with ``rho`` reported as NaN.
    """
    method = Method(method)
    y_q, X_m, _ = prepare_inputs(y_q, X_m, spec)
    X_q = _apply_rows(spec, X_m)
    shape = shape_builder(method, spec.n_high)
    n, d = y_q.size, X_m.shape[1]
    if method is Method.FERNANDEZ:
        fit = gls_estimate(y_q, X_q, _congruence(spec, shape(0.0))[1])
        return [(math.nan, fit.loglik, -2.0 * fit.loglik + math.log(n) * d)]
    rows = []
    for rho in check_grid(default_rho_grid() if grid is None else grid):
        fit = gls_estimate(y_q, X_q, _congruence(spec, shape(float(rho)))[1], rho=float(rho))
        rows.append((float(rho), fit.loglik, -2.0 * fit.loglik + math.log(n) * (d + 1)))
    return rows
