"""Patch containers and per-cluster Gaussian densities.

Conventions used throughout the package:

- a patch is a flattened ``(m,)`` float vector of nonnegative intensities,
  where ``m = patch_size ** 2``; its grid position is the (row, col) of the
  top-left pixel in the source image;
- a cluster stores one Gaussian (mean, sample covariance, cached Cholesky
  factor of the regularized covariance) together with the roster of training
  patches assigned to it, kept as an ``(n_k, m)`` array;
- all density work happens in the log domain.  With ``m = 64`` a raw Gaussian
  density underflows double precision routinely, so raw densities are never
  materialized.

Cluster and prior objects are immutable after construction and safe for
concurrent reads.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cholesky, solve_triangular

__all__ = [
    "ModelDegenerateError",
    "Patch",
    "ClusterModel",
    "PriorModel",
    "regularize_covariance",
    "ridge_value",
    "gaussian_logpdf",
    "gaussian_logpdf_batch",
]

_LOG_2PI = float(np.log(2.0 * np.pi))


class ModelDegenerateError(ValueError):
    """A cluster is unusable: empty roster or covariance that cannot be factored."""


@dataclass(frozen=True)
class Patch:
    """A clean image patch: ``(m,)`` nonnegative intensities plus grid position.

    Parameters
    ----------
    values : ndarray
      Flattened patch intensities, all entries >= 0.
    row, col : int
      Top-left pixel coordinates of the patch in its source image.
    """

    values: np.ndarray
    row: int = 0
    col: int = 0

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1:
            raise ValueError(f"patch values must be 1-D, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("patch values must be finite")
        if np.any(values < 0):
            raise ValueError("patch values must be nonnegative")
        object.__setattr__(self, "values", values)


@dataclass(frozen=True)
class ClusterModel:
    """One Gaussian cluster plus the roster of training patches assigned to it.

    ``covariance`` is the raw sample covariance (retained for persistence
    fidelity); ``chol_factor`` is the lower Cholesky factor of the
    *regularized* covariance and is what every density evaluation uses.

    Attributes
    ----------
    mean : ndarray, shape (m,)
    covariance : ndarray, shape (m, m)
      Raw (unregularized) sample covariance; symmetric.
    chol_factor : ndarray, shape (m, m)
      Lower-triangular Cholesky factor of ``covariance + ridge * I``.
    members : ndarray, shape (n_k, m)
      Training patches assigned to this cluster; non-empty.
    """

    mean: np.ndarray
    covariance: np.ndarray
    chol_factor: np.ndarray
    members: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float)
        cov = np.asarray(self.covariance, dtype=float)
        chol = np.asarray(self.chol_factor, dtype=float)
        members = np.asarray(self.members, dtype=float)
        m = mean.shape[0]
        if mean.ndim != 1:
            raise ValueError("cluster mean must be 1-D")
        if cov.shape != (m, m) or chol.shape != (m, m):
            raise ValueError("covariance/chol_factor shape must match mean dimension")
        if members.ndim != 2 or members.shape[1] != m:
            raise ValueError("members must be an (n_k, m) array")
        if members.shape[0] == 0:
            raise ModelDegenerateError("cluster has no member patches")
        scale = max(float(np.abs(cov).max()), 1.0)
        if np.abs(cov - cov.T).max() > 1e-10 * scale:
            raise ValueError("covariance must be symmetric (1e-10 relative)")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", cov)
        object.__setattr__(self, "chol_factor", chol)
        object.__setattr__(self, "members", members)

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    @property
    def size(self) -> int:
        return self.members.shape[0]

    @classmethod
    def build(
        cls,
        mean: np.ndarray,
        covariance: np.ndarray,
        members: np.ndarray,
        epsilon_ridge: float,
    ) -> "ClusterModel":
        """Regularize, factor and assemble a cluster.

        Parameters
        ----------
        mean : ndarray, shape (m,)
        covariance : ndarray, shape (m, m)
          Raw sample covariance (symmetric, positive semidefinite).
        members : ndarray, shape (n_k, m)
        epsilon_ridge : float
          Absolute ridge added to the diagonal before factoring.

        Raises
        ------
        ModelDegenerateError
          If the Cholesky factorization fails even after regularization.
        """
        regularized = regularize_covariance(np.asarray(covariance, dtype=float), epsilon_ridge)
        try:
            chol = cholesky(regularized, lower=True, check_finite=False)
        except np.linalg.LinAlgError as exc:
            raise ModelDegenerateError(f"covariance not positive definite: {exc}") from exc
        recon = chol @ chol.T
        denom = max(float(np.linalg.norm(regularized)), np.finfo(float).tiny)
        if np.linalg.norm(recon - regularized) > 1e-8 * denom:
            raise ModelDegenerateError("Cholesky factor does not reproduce the regularized covariance")
        return cls(mean=mean, covariance=covariance, chol_factor=chol, members=members)


@dataclass(frozen=True)
class PriorModel:
    """A learned class prior: K Gaussian clusters and their training rosters.

    Attributes
    ----------
    clusters : tuple of ClusterModel
      Exactly ``k_count`` entries, all sharing one dimension.
    patch_size : int
      Patch edge length; ``patch_size ** 2`` must equal the cluster
      dimension.  The sentinel 0 marks a hand-assembled pool whose dimension
      does not come from a square patch grid (analysis and test harnesses);
      such models cannot be persisted or used on images.
    k_count : int
    training_seed : int
      Seed the clustering was run with (recorded for reproducibility).
    epsilon_ridge : float
      Trace-scale of the diagonal ridge used when factoring covariances
      (see :func:`ridge_value`).
    """

    clusters: tuple = field(default_factory=tuple)
    patch_size: int = 8
    k_count: int = 0
    training_seed: int = 0
    epsilon_ridge: float = 1e-3

    def __post_init__(self):
        clusters = tuple(self.clusters)
        if len(clusters) != self.k_count:
            raise ValueError(f"expected {self.k_count} clusters, got {len(clusters)}")
        if clusters:
            m = clusters[0].dim
            for i, cluster in enumerate(clusters):
                if cluster.dim != m:
                    raise ValueError(f"cluster {i} has dimension {cluster.dim}, expected {m}")
            if self.patch_size > 0 and self.patch_size * self.patch_size != m:
                raise ValueError(
                    f"patch_size {self.patch_size} does not match cluster dimension {m}"
                )
        object.__setattr__(self, "clusters", clusters)

    @property
    def dim(self) -> int:
        if not self.clusters:
            return self.patch_size * self.patch_size
        return self.clusters[0].dim


def regularize_covariance(raw: np.ndarray, epsilon_ridge: float) -> np.ndarray:
    """Return ``raw + epsilon_ridge * I``.

    Small clusters yield rank-deficient sample covariances; the ridge makes
    them positive definite so the Cholesky factorization succeeds.

    Parameters
    ----------
    raw : ndarray, shape (m, m)
      Symmetric matrix.
    epsilon_ridge : float
      Nonnegative amount added to the diagonal.
    """
    raw = np.asarray(raw, dtype=float)
    if raw.ndim != 2 or raw.shape[0] != raw.shape[1]:
        raise ValueError("covariance must be square")
    scale = max(float(np.abs(raw).max()), 1.0)
    if np.abs(raw - raw.T).max() > 1e-10 * scale:
        raise ValueError("covariance must be symmetric")
    if epsilon_ridge < 0:
        raise ValueError("epsilon_ridge must be nonnegative")
    out = raw.copy()
    out[np.diag_indices_from(out)] += epsilon_ridge
    return out


def ridge_value(covariance: np.ndarray, scale: float) -> float:
    """Diagonal ridge for a sample covariance: ``scale * trace / m``.

    Trace-scaling keeps the ridge unit-consistent across intensity peaks.  A
    roster of identical patches has zero trace, which would leave the matrix
    singular; that case falls back to the bare ``scale`` so every cluster
    stays usable.
    """
    covariance = np.asarray(covariance, dtype=float)
    m = covariance.shape[0]
    ridge = scale * float(np.trace(covariance)) / m
    if ridge <= 0.0:
        ridge = float(scale)
    return ridge


def _logpdf_from_chol(diff: np.ndarray, chol: np.ndarray) -> np.ndarray:
    """Log-density core: ``diff`` is ``(m,)`` or ``(n, m)`` of ``x - mean``."""
    m = chol.shape[0]
    if diff.ndim == 2:
        # diff.T of a fresh C-contiguous array is Fortran-contiguous, so the
        # triangular solve runs in place with no copies
        z = solve_triangular(chol, diff.T, lower=True, check_finite=False, overwrite_b=True)
        quad = np.einsum("ij,ij->j", z, z)
    else:
        z = solve_triangular(chol, diff, lower=True, check_finite=False)
        quad = float(z @ z)
    log_det_half = float(np.sum(np.log(np.diag(chol))))
    return -0.5 * m * _LOG_2PI - log_det_half - 0.5 * quad


def gaussian_logpdf(x: np.ndarray, cluster: ClusterModel) -> float:
    """Log of the multivariate normal density of ``cluster`` at ``x``.

    Evaluates the Gaussian with the cluster's regularized covariance (via
    the cached Cholesky factor); finite for every finite ``x``.

    Parameters
    ----------
    x : ndarray, shape (m,)
    cluster : ClusterModel

    Returns
    -------
    float
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.shape[0] != cluster.dim:
        raise ValueError(f"expected a vector of dimension {cluster.dim}, got shape {x.shape}")
    return float(_logpdf_from_chol(x - cluster.mean, cluster.chol_factor))


def gaussian_logpdf_batch(xs: np.ndarray, cluster: ClusterModel) -> np.ndarray:
    """Vectorized :func:`gaussian_logpdf` for an ``(n, m)`` array of points."""
    xs = np.asarray(xs, dtype=float)
    if xs.ndim != 2 or xs.shape[1] != cluster.dim:
        raise ValueError(f"expected an (n, {cluster.dim}) array, got shape {xs.shape}")
    return _logpdf_from_chol(xs - cluster.mean, cluster.chol_factor)
