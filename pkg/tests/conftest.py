"""Shared fixtures and independent oracles for the test suite."""

import mpmath as mp
import numpy as np
import pytest

from psnis import ClusterModel, PriorModel

mp.mp.dps = 50


def make_cluster(members, epsilon_ridge=0.0, mean=None, covariance=None):
    """Build a ClusterModel directly from a roster (sample stats by default)."""
    members = np.asarray(members, dtype=float)
    if mean is None:
        mean = members.mean(axis=0)
    if covariance is None:
        centered = members - members.mean(axis=0)
        covariance = centered.T @ centered / max(members.shape[0] - 1, 1)
        covariance = (covariance + covariance.T) / 2.0
        if epsilon_ridge == 0.0:
            epsilon_ridge = 1e-3 * max(np.trace(covariance) / members.shape[1], 1.0)
    return ClusterModel.build(mean, np.asarray(covariance, dtype=float), members, epsilon_ridge)


def make_pool_model(pools, patch_size=0):
    """PriorModel from explicit rosters (list of (n_k, m) arrays)."""
    clusters = tuple(make_cluster(pool) for pool in pools)
    return PriorModel(
        clusters=clusters,
        patch_size=patch_size,
        k_count=len(clusters),
        training_seed=0,
        epsilon_ridge=1e-3,
    )


def exact_poisson_loglik(counts, intensity, epsilon_floor=1e-6):
    """Term-by-term extended-precision Poisson log-likelihood."""
    total = mp.mpf(0)
    for y, x in zip(np.asarray(counts).ravel(), np.asarray(intensity).ravel()):
        lam = mp.mpf(max(float(x), epsilon_floor))
        total += -lam + mp.mpf(int(y)) * mp.log(lam) - mp.log(mp.factorial(int(y)))
    return total


def exact_pool_posterior(counts, pool, payload_fn=None, epsilon_floor=1e-6):
    """Exhaustive-enumeration posterior statistics over a finite pool.

    With no payload function, returns the posterior mean patch (the
    likelihood-weighted average of the pool); with one, returns the weighted
    average of ``payload_fn(x)``.  All arithmetic in extended precision.
    """
    pool = np.asarray(pool, dtype=float)
    weights = [mp.e ** exact_poisson_loglik(counts, x, epsilon_floor) for x in pool]
    total = mp.fsum(weights)
    if payload_fn is None:
        out = np.zeros(pool.shape[1])
        for w, x in zip(weights, pool):
            out += np.array([float(w / total * mp.mpf(v)) for v in x])
        return out
    return float(mp.fsum(w * mp.mpf(float(payload_fn(x))) for w, x in zip(weights, pool)) / total)


def two_blob_patches(n_per=60, dim=4, separation=100.0, spread=0.1, seed=0, offset=50.0):
    """Two well-separated nonnegative point clouds plus their true labels."""
    rng = np.random.default_rng(seed)
    a = offset + spread * rng.standard_normal((n_per, dim))
    b = offset + separation + spread * rng.standard_normal((n_per, dim))
    patches = np.abs(np.concatenate([a, b], axis=0))
    labels = np.concatenate([np.zeros(n_per, dtype=int), np.ones(n_per, dtype=int)])
    return patches, labels


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
