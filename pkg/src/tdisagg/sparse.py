"""Sparse and adaptive-sparse temporal disaggregation for many indicators.

For each candidate ``rho`` of the AR(1) error shape the low-frequency
regression is whitened, an unpenalized intercept is projected out, and the
LASSO path is traced with LARS.  Every knot's support is refitted by plain
GLS and scored by BIC; the ``(rho, lambda)`` pair with the smallest BIC
wins.  The adaptive variant reruns the path at the winning ``rho`` with
column ``j`` scaled by ``|beta_init_j|``, which is the same as dividing the
penalty on ``beta_j`` by that weight.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np
from scipy.linalg import solve_triangular

from . import covariance
from .aggregation import AggregationSpec, _apply_rows, _congruence
from .errors import FallbackNotice, RankError
from .gls import (
    DisaggregationResult,
    Method,
    _solve_whitened,
    check_grid,
    concentrated_loglik,
    default_rho_grid,
    disaggregate_classical,
    distribute,
    prepare_inputs,
)
from .lars import LarsPath, lars_path

# columns whose whitened, intercept-free norm is below this share of the largest are unusable
NEGLIGIBLE_COLUMN = 1e-10
TRACE_COLUMNS = ("rho", "knot", "lambda", "df", "bic")


@dataclass(frozen=True)
class SparseFit:
    """Debiased coefficients chosen by BIC.

    ``beta`` covers the indicator columns only; ``intercept`` is the
    unpenalized constant (0 when the model has none).  ``trace`` holds one
    row per scored knot with columns `TRACE_COLUMNS`.
    """

    beta: np.ndarray
    intercept: float
    support: np.ndarray
    lambda_: float
    rho: float
    bic: float
    sigma2: float
    loglik: float
    trace: np.ndarray


def _factor(S_q) -> covariance.CovarianceFactor:
    if isinstance(S_q, covariance.CovarianceFactor):
        return S_q
    return covariance.cholesky_factor(S_q)


def whiten_problem(y_q, X_q, S_q):
    """Return ``(L^-1 y_q, L^-1 X_q)`` with ``L`` the lower Cholesky factor of ``S_q``."""
    L = _factor(S_q).lower_cholesky
    y_w = solve_triangular(L, np.asarray(y_q, dtype=float), lower=True)
    X_w = solve_triangular(L, np.asarray(X_q, dtype=float), lower=True)
    return y_w, X_w


def debias_refit(y_q, X_q, S_q, path: LarsPath, n_unpenalized: int = 0):
    """Refit every knot's support by unpenalized GLS.

    The first ``n_unpenalized`` columns of ``X_q`` are always included and
    are not part of ``path``.  Returns one full-length coefficient vector per
    knot, or ``None`` where the refit has at least ``n_low`` columns or is
    rank deficient.
    """
    y_w, X_w = whiten_problem(y_q, X_q, S_q)
    n = y_w.size
    k = n_unpenalized
    refits = []
    for b in path.betas:
        cols = np.concatenate([np.arange(k), k + np.flatnonzero(b)]).astype(int)
        if cols.size >= n:
            refits.append(None)
            continue
        try:
            coef, _ = _solve_whitened(y_w, X_w[:, cols])
        except RankError:
            refits.append(None)
            continue
        full = np.zeros(X_w.shape[1])
        full[cols] = coef
        refits.append(full)
    return refits


def bic_select(y_q, X_q, S_q, refits, knots, n_unpenalized: int = 0):
    """Score refits by ``-2 loglik + log(n) K`` and return ``(best, bics)``.

    ``K`` counts nonzero penalized coefficients.  Skipped refits (``None``)
    score ``+inf``; exact fits score ``-inf``.  Ties go to the smaller ``K``,
    then the larger penalty.
    """
    fac = _factor(S_q)
    y_q = np.asarray(y_q, dtype=float)
    X_q = np.asarray(X_q, dtype=float)
    n = y_q.size
    bics, dfs = [], []
    for coef in refits:
        if coef is None:
            bics.append(math.inf)
            dfs.append(math.inf)
            continue
        r = solve_triangular(fac.lower_cholesky, y_q - X_q @ coef, lower=True, check_finite=False)
        sigma2 = float(r @ r) / n
        K = int(np.count_nonzero(coef[n_unpenalized:]))
        bics.append(-2.0 * concentrated_loglik(n, sigma2, fac.log_det) + math.log(n) * K)
        dfs.append(K)
    best = min(range(len(bics)), key=lambda i: (bics[i], dfs[i], -knots[i]))
    return best, bics


@dataclass
class _Stage:
    rho: float
    path: LarsPath
    refits: list
    bics: list
    best: int
    n_unpenalized: int

    @property
    def best_key(self):
        coef = self.refits[self.best]
        K = math.inf if coef is None else np.count_nonzero(coef[self.n_unpenalized:])
        return (self.bics[self.best], K, -self.path.knots[self.best], abs(self.rho))


def _stage(y_q, X_q, fac, n_unpenalized, rho, weights=None, max_steps=None) -> _Stage:
    """Path, refits and BIC at one rho.

    ``weights=None`` standardizes the whitened columns to unit norm;
    otherwise column ``j`` is multiplied by ``weights[j]`` and zero weights
    exclude it.
    """
    k = n_unpenalized
    y_w, X_w = whiten_problem(y_q, X_q, fac)
    n = y_w.size
    Z, P = X_w[:, :k], X_w[:, k:]
    if k:
        Q, _ = np.linalg.qr(Z)
        y_r = y_w - Q @ (Q.T @ y_w)
        P = P - Q @ (Q.T @ P)
    else:
        y_r = y_w
    norms = np.linalg.norm(P, axis=0)
    usable = norms > NEGLIGIBLE_COLUMN * max(norms.max(initial=0.0), 1e-300)
    if weights is None:
        scale = np.where(usable, 1.0 / np.where(usable, norms, 1.0), 0.0)
    else:
        scale = np.where(usable, np.abs(weights), 0.0)
        usable &= scale > 0
    d = P.shape[1]
    if max_steps is None:
        max_steps = min(n - 1, d)
    path = lars_path(
        y_r, P * scale, max_steps=max_steps, max_active=n - k, usable=usable
    ).scaled(scale)
    refits = debias_refit(y_q, X_q, fac, path, n_unpenalized=k)
    best, bics = bic_select(y_q, X_q, fac, refits, path.knots, n_unpenalized=k)
    return _Stage(rho, path, refits, bics, best, k)


def _design(y_q, X_m, spec, names, intercept):
    y_q, X_m, names = prepare_inputs(y_q, X_m, spec, names)
    X_full = np.column_stack([np.ones(spec.n_high), X_m]) if intercept else X_m
    return y_q, X_m, names, X_full, _apply_rows(spec, X_full)


def _result(y_q, X_full, spec, stages, winner, names, k, method) -> DisaggregationResult:
    coef = winner.refits[winner.best]
    S_m = covariance.ar1_shape_matrix(winner.rho, spec.n_high)
    y_high = distribute(y_q, X_full, coef, S_m, spec)
    _, S_q = _congruence(spec, S_m)
    fac = covariance.cholesky_factor(S_q)
    r = solve_triangular(fac.lower_cholesky, y_q - _apply_rows(spec, X_full) @ coef, lower=True)
    sigma2 = float(r @ r) / y_q.size
    trace = np.array(
        [
            (st.rho, i, lam, np.nan if c is None else np.count_nonzero(c[k:]), b)
            for st in stages
            for i, (lam, c, b) in enumerate(zip(st.path.knots, st.refits, st.bics))
        ],
        dtype=float,
    ).reshape(-1, len(TRACE_COLUMNS))
    beta = coef[k:]
    support = np.flatnonzero(beta)
    fit = SparseFit(
        beta=beta,
        intercept=float(coef[0]) if k else 0.0,
        support=support,
        lambda_=float(winner.path.knots[winner.best]),
        rho=winner.rho,
        bic=float(winner.bics[winner.best]),
        sigma2=sigma2,
        loglik=concentrated_loglik(y_q.size, sigma2, fac.log_det),
        trace=trace,
    )
    return DisaggregationResult(
        y_high=y_high,
        fit=fit,
        method=method,
        spec=spec,
        selected_columns=[names[j] for j in support],
        columns=names,
        y_low=y_q,
    )


def _grid_stages(y_q, X_q, spec, grid, k, max_steps):
    stages = []
    for rho in check_grid(default_rho_grid() if grid is None else grid):
        S_m = covariance.ar1_shape_matrix(float(rho), spec.n_high)
        fac = covariance.cholesky_factor(_congruence(spec, S_m)[1])
        stages.append(_stage(y_q, X_q, fac, k, float(rho), max_steps=max_steps))
    return stages


def sp_td(
    y_q,
    X_m,
    spec: AggregationSpec,
    grid=None,
    names=None,
    intercept: bool = True,
    max_steps: int | None = None,
) -> DisaggregationResult:
    """Sparse temporal disaggregation with AR(1) errors.

    Parameters
    ----------
    y_q : array_like, shape (n_low,)
    X_m : array_like, shape (n_high, d)
        ``d`` may exceed ``n_low``.
    spec : AggregationSpec
    grid : sequence of float, optional
        Candidate rho values, `default_rho_grid` when omitted.
    names : sequence of str, optional
    intercept : bool
        Include an unpenalized constant (not counted in the BIC degrees of
        freedom).
    max_steps : int, optional
        LARS knots per rho; ``min(n_low - 1, d)`` by default.
    """
    y_q, X_m, names, X_full, X_q = _design(y_q, X_m, spec, names, intercept)
    k = int(intercept)
    stages = _grid_stages(y_q, X_q, spec, grid, k, max_steps)
    winner = min(stages, key=lambda st: st.best_key)
    return _result(y_q, X_full, spec, stages, winner, names, k, Method.SPTD)


def adaptive_sp_td(
    y_q,
    X_m,
    spec: AggregationSpec,
    grid=None,
    names=None,
    intercept: bool = True,
    max_steps: int | None = None,
) -> DisaggregationResult:
    """Two-stage adaptive variant of `sp_td`.

    Stage one is `sp_td`; its debiased coefficients become the weights.
    Stage two traces the weighted path at the stage-one rho, keeping only
    variables with a nonzero initial coefficient.  Emits `FallbackNotice`
    and returns the stage-one result when stage one selects nothing.  The
    stage-one result is kept in ``first_stage``.
    """
    y_q, X_m, names, X_full, X_q = _design(y_q, X_m, spec, names, intercept)
    k = int(intercept)
    stages = _grid_stages(y_q, X_q, spec, grid, k, max_steps)
    first = min(stages, key=lambda st: st.best_key)
    stage_one = _result(y_q, X_full, spec, stages, first, names, k, Method.SPTD)
    init = stage_one.fit.beta
    if not np.any(init):
        warnings.warn(
            "first stage selected no indicators; returning the sparse fit",
            FallbackNotice,
            stacklevel=2,
        )
        return replace(stage_one, method=Method.ADAPTIVE_SPTD, first_stage=stage_one)
    S_m = covariance.ar1_shape_matrix(first.rho, spec.n_high)
    fac = covariance.cholesky_factor(_congruence(spec, S_m)[1])
    second = _stage(y_q, X_q, fac, k, first.rho, weights=init, max_steps=max_steps)
    result = _result(y_q, X_full, spec, [second], second, names, k, Method.ADAPTIVE_SPTD)
    return replace(result, first_stage=stage_one)


def disaggregate(y_q, X_m, spec: AggregationSpec, method="chow-lin", grid=None, names=None, **kwargs):
    """Dispatch to the classical or sparse estimator named by ``method``."""
    method = Method(method)
    if method is Method.SPTD:
        return sp_td(y_q, X_m, spec, grid=grid, names=names, **kwargs)
    if method is Method.ADAPTIVE_SPTD:
        return adaptive_sp_td(y_q, X_m, spec, grid=grid, names=names, **kwargs)
    return disaggregate_classical(y_q, X_m, spec, method, grid=grid, names=names)
