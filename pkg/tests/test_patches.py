"""Cluster Gaussians: log-density values, regularization, invariances."""

import numpy as np
import pytest

from psnis import (
    ClusterModel,
    ModelDegenerateError,
    Patch,
    PriorModel,
    gaussian_logpdf,
    gaussian_logpdf_batch,
    regularize_covariance,
    ridge_value,
)

from conftest import make_cluster


def dense_logpdf(x, mean, cov):
    """Independent oracle: explicit inverse and determinant."""
    m = len(mean)
    inv = np.linalg.inv(cov)
    _, logdet = np.linalg.slogdet(cov)
    d = np.asarray(x, dtype=float) - mean
    return -0.5 * (m * np.log(2 * np.pi) + logdet + d @ inv @ d)


class TestGaussianLogpdf:
    def test_standard_normal_at_mode(self):
        cluster = make_cluster([[0.0]], mean=np.zeros(1), covariance=np.eye(1))
        assert gaussian_logpdf(np.zeros(1), cluster) == pytest.approx(
            -0.5 * np.log(2 * np.pi), abs=1e-12
        )

    def test_isotropic_closed_form(self):
        cluster = make_cluster([[0.0, 0.0]], mean=np.zeros(2), covariance=np.eye(2))
        assert gaussian_logpdf(np.ones(2), cluster) == pytest.approx(
            -np.log(2 * np.pi) - 1.0, abs=1e-12
        )

    def test_matches_dense_inverse_oracle(self, rng):
        for _ in range(20):
            a = rng.standard_normal((4, 4))
            cov = a @ a.T + 0.5 * np.eye(4)
            mean = rng.standard_normal(4)
            cluster = make_cluster([mean], mean=mean, covariance=cov)
            x = rng.standard_normal(4)
            assert gaussian_logpdf(x, cluster) == pytest.approx(
                dense_logpdf(x, mean, cov), abs=1e-9
            )

    def test_dimension_mismatch(self):
        cluster = make_cluster([[0.0, 0.0]], mean=np.zeros(2), covariance=np.eye(2))
        with pytest.raises(ValueError):
            gaussian_logpdf(np.zeros(3), cluster)

    def test_batch_agrees_with_single(self, rng):
        cov = np.diag([1.0, 2.0, 3.0])
        mean = np.array([1.0, -1.0, 0.5])
        cluster = make_cluster([mean], mean=mean, covariance=cov)
        xs = rng.standard_normal((10, 3))
        batch = gaussian_logpdf_batch(xs, cluster)
        for x, value in zip(xs, batch):
            assert value == pytest.approx(gaussian_logpdf(x, cluster), abs=1e-12)

    def test_maximized_at_mean(self, rng):
        a = rng.standard_normal((5, 5))
        cov = a @ a.T + np.eye(5)
        mean = rng.uniform(0, 10, 5)
        cluster = make_cluster([mean], mean=mean, covariance=cov)
        at_mode = gaussian_logpdf(mean, cluster)
        for _ in range(100):
            assert gaussian_logpdf(mean + rng.standard_normal(5), cluster) < at_mode

    def test_translation_invariance(self, rng):
        cov = np.diag([0.5, 1.5])
        mean = np.array([3.0, 4.0])
        cluster = make_cluster([mean], mean=mean, covariance=cov)
        x = np.array([2.0, 7.0])
        shift = rng.standard_normal(2)
        shifted = make_cluster([mean + shift], mean=mean + shift, covariance=cov)
        assert gaussian_logpdf(x + shift, shifted) == pytest.approx(
            gaussian_logpdf(x, cluster), abs=1e-10
        )

    def test_diagonal_separability(self, rng):
        variances = np.array([0.3, 1.0, 2.5, 4.0])
        mean = rng.uniform(0, 5, 4)
        cluster = make_cluster([mean], mean=mean, covariance=np.diag(variances))
        x = rng.uniform(0, 5, 4)
        univariate = sum(
            -0.5 * (np.log(2 * np.pi * v) + (xi - mi) ** 2 / v)
            for xi, mi, v in zip(x, mean, variances)
        )
        assert gaussian_logpdf(x, cluster) == pytest.approx(univariate, abs=1e-10)


class TestRegularizeCovariance:
    def test_zero_matrix(self):
        out = regularize_covariance(np.zeros((3, 3)), 1e-3)
        assert np.array_equal(out, 1e-3 * np.eye(3))

    def test_identity(self):
        out = regularize_covariance(np.eye(2), 1e-3)
        assert np.array_equal(out, 1.001 * np.eye(2))

    def test_rank_one_becomes_positive_definite(self):
        members = np.array([[0.0, 0.0], [2.0, 2.0]])
        centered = members - members.mean(axis=0)
        cov = centered.T @ centered / 1
        out = regularize_covariance(cov, 1e-3)
        assert np.linalg.eigvalsh(out).min() > 0  # eigenvalue oracle
        np.linalg.cholesky(out)

    def test_rejects_asymmetry(self):
        with pytest.raises(ValueError):
            regularize_covariance(np.array([[1.0, 0.5], [0.0, 1.0]]), 1e-3)


class TestRidgeValue:
    def test_trace_scaled(self):
        cov = np.diag([2.0, 4.0])
        assert ridge_value(cov, 1e-3) == pytest.approx(1e-3 * 3.0)

    def test_zero_trace_falls_back_to_scale(self):
        assert ridge_value(np.zeros((4, 4)), 1e-3) == 1e-3


class TestPatchTypes:
    def test_patch_rejects_negative(self):
        with pytest.raises(ValueError):
            Patch(np.array([1.0, -0.1]))

    def test_cluster_requires_members(self):
        with pytest.raises(ModelDegenerateError):
            ClusterModel(
                mean=np.zeros(2),
                covariance=np.eye(2),
                chol_factor=np.eye(2),
                members=np.empty((0, 2)),
            )

    def test_cluster_rejects_asymmetric_covariance(self):
        bad = np.array([[1.0, 0.5], [0.0, 1.0]])
        with pytest.raises(ValueError):
            ClusterModel(
                mean=np.zeros(2), covariance=bad, chol_factor=np.eye(2),
                members=np.zeros((1, 2)),
            )

    def test_build_rejects_indefinite_covariance(self):
        indefinite = np.array([[-5.0, 0.0], [0.0, -5.0]])
        with pytest.raises(ModelDegenerateError):
            ClusterModel.build(np.zeros(2), indefinite, np.zeros((1, 2)), 1e-3)

    def test_build_factor_reproduces_covariance(self, rng):
        a = rng.standard_normal((6, 6))
        cov = a @ a.T + np.eye(6)
        cluster = ClusterModel.build(np.zeros(6), cov, np.zeros((2, 6)), 1e-3)
        recon = cluster.chol_factor @ cluster.chol_factor.T
        target = regularize_covariance(cov, 1e-3)
        assert np.linalg.norm(recon - target) <= 1e-8 * np.linalg.norm(target)

    def test_prior_model_counts_and_dims(self):
        cluster = make_cluster([[1.0, 2.0, 3.0, 4.0]], covariance=np.eye(4))
        with pytest.raises(ValueError):
            PriorModel(clusters=(cluster,), patch_size=2, k_count=2)
        with pytest.raises(ValueError):
            PriorModel(clusters=(cluster,), patch_size=3, k_count=1)
        model = PriorModel(clusters=(cluster,), patch_size=2, k_count=1)
        assert model.dim == 4
