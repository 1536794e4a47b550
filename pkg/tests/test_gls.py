from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from oracles import gls_normal_equations, mvn_logpdf
from tdisagg import covariance
from tdisagg.aggregation import AggMode, AggregationSpec, aggregate, build_aggregation_matrix
from tdisagg.benchmark import flat_interpolation
from tdisagg.dgp import DgpConfig, generate
from tdisagg.errors import DimensionRegimeError, DomainError, InvalidGrid, RankError, ShapeError
from tdisagg.gls import (
    Method,
    default_rho_grid,
    disaggregate_classical,
    gaussian_loglik,
    gls_estimate,
    profile_rho_search,
    rho_profile,
)

LOG_2PI = math.log(2 * math.pi)


def random_spd(rng, n):
    A = rng.normal(size=(n, n))
    return A @ A.T + n * np.eye(n)


class TestGlsEstimate:
    def test_identity_is_ols(self):
        rng = np.random.default_rng(1)
        X, y = rng.normal(size=(15, 3)), rng.normal(size=15)
        fit = gls_estimate(y, X, np.eye(15))
        assert_allclose(fit.beta, np.linalg.lstsq(X, y, rcond=None)[0], rtol=1e-12)

    def test_exact_fit(self):
        rng = np.random.default_rng(2)
        X = rng.normal(size=(10, 2))
        beta = np.array([1.5, -2.0])
        fit = gls_estimate(X @ beta, X, random_spd(rng, 10))
        assert_allclose(fit.beta, beta, rtol=1e-12)
        assert fit.sigma2 == 0.0
        assert fit.loglik == math.inf
        assert_allclose(fit.residuals_low, 0.0, atol=1e-12)

    def test_normal_equations_oracle(self):
        rng = np.random.default_rng(3)
        X, y, S = rng.normal(size=(20, 3)), rng.normal(size=20), random_spd(rng, 20)
        fit = gls_estimate(y, X, S)
        assert_allclose(fit.beta, gls_normal_equations(y, X, S), atol=1e-8)
        r = y - X @ fit.beta
        assert fit.sigma2 == pytest.approx(r @ np.linalg.solve(S, r) / 20, rel=1e-10)
        assert_allclose(fit.residuals_low, r, atol=1e-14)

    def test_loglik_is_density_at_sigma_hat(self):
        rng = np.random.default_rng(4)
        X, y, S = rng.normal(size=(12, 2)), rng.normal(size=12), random_spd(rng, 12)
        fit = gls_estimate(y, X, S)
        assert fit.loglik == pytest.approx(mvn_logpdf(fit.residuals_low, fit.sigma2 * S), rel=1e-10)
        assert fit.sigma2 > 0

    def test_rank_deficient(self):
        X = np.ones((8, 2))
        with pytest.raises(RankError):
            gls_estimate(np.arange(8.0), X, np.eye(8))

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            gls_estimate(np.ones(5), np.ones((4, 1)), np.eye(5))
        with pytest.raises(ShapeError):
            gls_estimate(np.ones(5), np.ones((5, 1)), np.eye(4))

    def test_scale_of_shape_is_absorbed(self):
        rng = np.random.default_rng(5)
        X, y, S = rng.normal(size=(12, 2)), rng.normal(size=12), random_spd(rng, 12)
        a, b = gls_estimate(y, X, S), gls_estimate(y, X, 7.5 * S)
        assert_allclose(a.beta, b.beta, rtol=1e-10)
        assert b.sigma2 == pytest.approx(a.sigma2 / 7.5, rel=1e-10)


class TestGaussianLoglik:
    def test_zero_residual(self):
        assert gaussian_loglik(np.zeros(4), np.eye(4), 1.0) == pytest.approx(-2 * LOG_2PI)

    def test_unit_residual(self):
        assert gaussian_loglik(np.ones(2), np.eye(2), 1.0) == pytest.approx(-LOG_2PI - 1)

    def test_mvn_oracle(self):
        rng = np.random.default_rng(6)
        S, r = random_spd(rng, 7), rng.normal(size=7)
        assert gaussian_loglik(r, S, 0.3) == pytest.approx(mvn_logpdf(r, 0.3 * S), rel=1e-12)

    @pytest.mark.parametrize("sigma2", [0.0, -1.0])
    def test_nonpositive_sigma2(self, sigma2):
        with pytest.raises(DomainError):
            gaussian_loglik(np.ones(2), np.eye(2), sigma2)


def _chow_lin_builder(y_low, X, spec):
    C = build_aggregation_matrix(spec)
    X_q = C @ X
    return lambda rho: (X_q, C @ covariance.ar1_shape_matrix(rho, spec.n_high) @ C.T)


class TestProfileSearch:
    @pytest.fixture
    def data(self):
        cfg = DgpConfig(n_low=30, n_high=120, d=2, rho=0.6, seed=11)
        return generate(cfg), cfg.spec

    def test_single_point(self, data):
        d, spec = data
        rho, fit = profile_rho_search(d.y_low, _chow_lin_builder(d.y_low, d.X, spec), [0.5])
        assert rho == 0.5 and fit.rho == 0.5

    def test_argmax_over_grid(self, data):
        d, spec = data
        builder = _chow_lin_builder(d.y_low, d.X, spec)
        grid = np.linspace(-0.9, 0.9, 37)
        rho, fit = profile_rho_search(d.y_low, builder, grid)
        for r in grid:
            assert fit.loglik >= gls_estimate(d.y_low, *builder(r)).loglik

    def test_tie_goes_to_smaller_abs_rho(self):
        y = np.array([1.0, -2.0, 0.5])
        X = np.ones((3, 1))
        # the builder ignores rho, so every grid point ties
        rho, _ = profile_rho_search(y, lambda r: (X, np.eye(3)), [0.5, -0.2, 0.2, 0.9])
        assert rho == -0.2

    @pytest.mark.parametrize("grid", [[], [1.0], [0.2, -1.5], [np.nan]])
    def test_invalid_grid(self, data, grid):
        d, spec = data
        with pytest.raises(InvalidGrid):
            profile_rho_search(d.y_low, _chow_lin_builder(d.y_low, d.X, spec), grid)


def test_default_grid():
    g = default_rho_grid()
    assert g.size == 199 and g[0] == -0.99 and g[-1] == 0.99 and 0.0 in g


class TestDisaggregateClassical:
    @pytest.mark.parametrize("method", ["chow-lin", "fernandez", "litterman"])
    @pytest.mark.parametrize("mode", list(AggMode))
    def test_temporal_consistency(self, method, mode):
        cfg = DgpConfig(n_low=12, n_high=38, ratio=3, d=2, rho=0.5, agg_mode=mode, seed=3)
        data = generate(cfg)
        res = disaggregate_classical(data.y_low, data.X, cfg.spec, method, grid=np.linspace(-0.9, 0.9, 19))
        assert res.consistency_residual() < 1e-10
        assert res.y_high.shape == (38,)

    def test_exact_design_has_no_distribution_term(self):
        spec = AggregationSpec("sum", 4, 10)
        X = np.random.default_rng(0).normal(size=(40, 2))
        beta = np.array([0.7, -1.1])
        y_q = aggregate(X @ beta, spec)
        res = disaggregate_classical(y_q, X, spec, "chow-lin", grid=[0.3])
        assert_allclose(res.y_high, X @ beta, atol=1e-10)

    def test_fernandez_equals_litterman_at_zero(self):
        data = generate(DgpConfig(n_low=15, n_high=60, d=2, error_method="fernandez", seed=8))
        spec = data.config.spec
        a = disaggregate_classical(data.y_low, data.X, spec, "fernandez")
        b = disaggregate_classical(data.y_low, data.X, spec, "litterman", grid=[0.0])
        assert np.abs(a.y_high - b.y_high).max() < 1e-8

    def test_chow_lin_zero_is_ols_distribution(self):
        data = generate(DgpConfig(n_low=15, n_high=60, d=2, seed=9))
        spec = data.config.spec
        res = disaggregate_classical(data.y_low, data.X, spec, "chow-lin", grid=[0.0])
        C = build_aggregation_matrix(spec)
        X_q = C @ data.X
        beta = np.linalg.lstsq(X_q, data.y_low, rcond=None)[0]
        expected = data.X @ beta + C.T @ np.linalg.solve(C @ C.T, data.y_low - X_q @ beta)
        assert np.abs(res.y_high - expected).max() < 1e-8

    @given(st.floats(0.01, 1e3).flatmap(lambda a: st.sampled_from([a, -a])), st.integers(0, 50))
    @settings(max_examples=25, deadline=None)
    def test_scale_equivariance(self, c, seed):
        data = generate(DgpConfig(n_low=10, n_high=40, d=2, rho=0.4, seed=seed))
        grid = np.linspace(-0.9, 0.9, 7)
        a = disaggregate_classical(data.y_low, data.X, data.config.spec, grid=grid)
        b = disaggregate_classical(c * data.y_low, data.X, data.config.spec, grid=grid)
        assert b.rho == a.rho
        assert_allclose(b.y_high, c * a.y_high, rtol=1e-8, atol=1e-10 * abs(c))

    def test_regime_guard(self):
        spec = AggregationSpec("sum", 4, 5)
        with pytest.raises(DimensionRegimeError, match="sptd"):
            disaggregate_classical(np.ones(5), np.ones((20, 5)), spec)

    def test_constant_when_no_indicators(self):
        spec = AggregationSpec("average", 3, 6)
        res = disaggregate_classical(np.arange(6.0), None, spec, grid=[0.0, 0.5])
        assert res.columns == ["constant"]
        assert res.consistency_residual() < 1e-12

    def test_sparse_method_rejected(self):
        with pytest.raises(DomainError):
            disaggregate_classical(np.ones(5), None, AggregationSpec("sum", 2, 5), "sptd")

    def test_names_from_argument(self):
        data = generate(DgpConfig(n_low=10, n_high=40, d=2, seed=1))
        res = disaggregate_classical(data.y_low, data.X, data.config.spec, names=["a", "b"], grid=[0.1])
        assert res.selected_columns == ["a", "b"]

    def test_classic_setting_beats_interpolation(self):
        wins = 0
        for seed in range(20):
            cfg = DgpConfig(n_low=17, n_high=68, d=5, rho=0.8, seed=seed)
            data = generate(cfg)
            res = disaggregate_classical(data.y_low, data.X, cfg.spec, "chow-lin")
            assert res.consistency_residual() < 1e-6
            flat = flat_interpolation(data.y_low, cfg.spec)
            wins += np.corrcoef(res.y_high, data.y_high)[0, 1] > np.corrcoef(flat, data.y_high)[0, 1]
        assert wins >= 18


def test_rho_profile_rows():
    data = generate(DgpConfig(n_low=10, n_high=40, d=1, seed=2))
    rows = rho_profile(data.y_low, data.X, data.config.spec, "chow-lin", [-0.5, 0.0, 0.5])
    assert [r[0] for r in rows] == [-0.5, 0.0, 0.5]
    best = max(rows, key=lambda r: r[1])
    res = disaggregate_classical(data.y_low, data.X, data.config.spec, grid=[-0.5, 0.0, 0.5])
    assert res.rho == best[0]
    (row,) = rho_profile(data.y_low, data.X, data.config.spec, "fernandez")
    assert math.isnan(row[0])
    assert Method("fernandez") is Method.FERNANDEZ
