from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from tdisagg import covariance as cov
from tdisagg.errors import DomainError, NumericalError


def difference_matrix(p):
    return np.eye(p) - np.eye(p, k=-1)


def brute_litterman(rho, p):
    D = difference_matrix(p)
    H = np.eye(p) - rho * np.eye(p, k=-1)
    return np.linalg.inv(D.T @ H.T @ H @ D)


def brute_ar1(rho, p):
    S = np.empty((p, p))
    for i in range(p):
        for j in range(p):
            S[i, j] = rho ** abs(i - j) / (1 - rho**2)
    return S


class TestAr1:
    def test_zero_rho_is_identity(self):
        assert_allclose(cov.build_ar1_shape(0.0, 3).matrix, np.eye(3))

    def test_half(self):
        assert_allclose(cov.build_ar1_shape(0.5, 2).matrix, [[4 / 3, 2 / 3], [2 / 3, 4 / 3]], rtol=1e-14)

    def test_matches_fill_and_inverse(self):
        S = cov.build_ar1_shape(0.8, 10).matrix
        B = brute_ar1(0.8, 10)
        assert_allclose(S, B, rtol=1e-12)
        assert_allclose(S @ np.linalg.inv(B), np.eye(10), atol=1e-10)

    @given(st.floats(-0.98, 0.98), st.integers(1, 20))
    def test_toeplitz(self, rho, p):
        S = cov.ar1_shape_matrix(rho, p)
        assert_allclose(S, S.T)
        for i in range(p):
            for j in range(p):
                assert S[i, j] == S[abs(i - j), 0]

    @pytest.mark.parametrize("rho", [1.0, -1.0, 1.5])
    def test_bad_rho(self, rho):
        with pytest.raises(DomainError):
            cov.build_ar1_shape(rho, 3)

    def test_bad_size(self):
        with pytest.raises(DomainError):
            cov.build_ar1_shape(0.1, 0)


class TestFernandez:
    def test_scalar(self):
        assert_allclose(cov.build_fernandez_shape(1).matrix, [[1.0]])

    def test_two(self):
        assert_allclose(cov.build_fernandez_shape(2).matrix, [[1, 1], [1, 2]], atol=1e-12)

    def test_random_walk_covariance(self):
        i, j = np.indices((6, 6))
        assert_allclose(cov.build_fernandez_shape(6).matrix, np.minimum(i, j) + 1, atol=1e-10)

    def test_bad_size(self):
        with pytest.raises(DomainError):
            cov.build_fernandez_shape(0)


class TestLitterman:
    def test_zero_rho_is_fernandez(self):
        assert_allclose(cov.build_litterman_shape(0.0, 4).matrix, cov.build_fernandez_shape(4).matrix, atol=1e-12)

    def test_two_by_two(self):
        # (D'H'HD) for p=2 is [[1 + (1+r)^2, -(1+r)], [-(1+r), 1]]
        r = 0.5
        a = 1 + r
        P = np.array([[1 + a * a, -a], [-a, 1.0]])
        expected = np.array([[1.0, a], [a, 1 + a * a]]) / np.linalg.det(P)
        assert_allclose(cov.build_litterman_shape(r, 2).matrix, expected, rtol=1e-12)

    def test_positive_definite(self):
        assert np.linalg.eigvalsh(cov.build_litterman_shape(0.9, 8).matrix).min() > 0

    def test_published_reference_row(self):
        S = cov.litterman_shape_matrix(0.95, 5)
        assert_allclose(S[0], [1, 1.95, 2.8525, 3.709875, 4.52438125], rtol=1e-10)

    @given(st.floats(-0.95, 0.95), st.integers(1, 15))
    @settings(max_examples=40)
    def test_matches_dense_inverse(self, rho, p):
        assert_allclose(cov.litterman_shape_matrix(rho, p), brute_litterman(rho, p), rtol=1e-8, atol=1e-8)

    def test_bad_rho(self):
        with pytest.raises(DomainError):
            cov.build_litterman_shape(-1.0, 3)


class TestFactor:
    @pytest.mark.parametrize("rho", [-0.99, -0.5, 0.0, 0.5, 0.99])
    @pytest.mark.parametrize("kind", ["ar1", "fernandez", "litterman"])
    def test_positive_pivots_and_reconstruction(self, kind, rho):
        f = cov.CovarianceModel(kind, 200, rho).factor()
        L = f.lower_cholesky
        assert np.diag(L).min() > 0
        err = np.linalg.norm(L @ L.T - f.matrix) / np.linalg.norm(f.matrix)
        assert err < 1e-10
        assert f.log_det == pytest.approx(2 * np.log(np.diag(L)).sum())
        assert f.size == 200

    def test_log_det_matches_slogdet(self):
        f = cov.build_ar1_shape(0.7, 12)
        assert f.log_det == pytest.approx(np.linalg.slogdet(f.matrix)[1], rel=1e-12)

    def test_immutable(self):
        f = cov.build_ar1_shape(0.3, 4)
        with pytest.raises(ValueError):
            f.matrix[0, 0] = 5.0

    def test_singular_raises(self):
        with pytest.raises(NumericalError):
            cov.cholesky_factor(np.ones((3, 3)))

    def test_indefinite_raises(self):
        with pytest.raises(NumericalError):
            cov.cholesky_factor(np.diag([1.0, -1.0]))

    def test_model_validation(self):
        with pytest.raises(DomainError):
            cov.CovarianceModel("ar1", 3, 1.2)
        with pytest.raises(DomainError):
            cov.CovarianceModel("ar1", 0, 0.1)
