"""Learning the class prior: k-means initialization plus hard-assignment EM.

Training patches are clustered with Lloyd's algorithm (k-means++ seeding),
then refined by alternating two steps: estimate each cluster's sample mean
and sample covariance from its current members, and reassign every patch to
the cluster under which its Gaussian log-density is highest.  Assignments are
hard; there are no mixture weights or responsibilities.

Patches are clustered at raw intensity scale, with no DC removal or contrast
normalization: the denoiser averages raw roster patches, so the prior must
live in the same units as the observations.

Everything here is deterministic given the seed, and the returned model is
immutable.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .patches import (
    ClusterModel,
    PriorModel,
    gaussian_logpdf,
    gaussian_logpdf_batch,
    ridge_value,
)

__all__ = [
    "TrainingSet",
    "kmeans_init",
    "estimate_cluster_params",
    "cem_refine",
    "learn_prior",
    "assign_clean_patch",
    "classification_log_likelihood",
]

KMEANS_MAX_ITERS = 100


@dataclass(frozen=True)
class TrainingSet:
    """Clean training patches, one per row, already at the target peak scale.

    Attributes
    ----------
    patches : ndarray, shape (n, m)
      Nonnegative patch intensities.
    source_count : int
      Number of images the patches were extracted from.
    """

    patches: np.ndarray
    source_count: int = 1

    def __post_init__(self):
        patches = np.asarray(self.patches, dtype=float)
        if patches.ndim != 2 or patches.shape[0] == 0:
            raise ValueError("patches must be a non-empty (n, m) array")
        if np.any(patches < 0):
            raise ValueError("training patches must be nonnegative")
        if not np.all(np.isfinite(patches)):
            raise ValueError("training patches must be finite")
        object.__setattr__(self, "patches", patches)

    def __len__(self) -> int:
        return self.patches.shape[0]


def _squared_distances(points: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """Pairwise squared Euclidean distances, shape (n, k); clipped at zero."""
    cross = points @ centers.T
    sq = (
        np.sum(points * points, axis=1)[:, None]
        - 2.0 * cross
        + np.sum(centers * centers, axis=1)[None, :]
    )
    return np.maximum(sq, 0.0)


def _kmeans_pp_centers(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++ seeding: each new center drawn with probability prop. to D^2."""
    n = points.shape[0]
    centers = np.empty((k, points.shape[1]), dtype=float)
    centers[0] = points[int(rng.integers(n))]
    d2 = np.sum((points - centers[0]) ** 2, axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total > 0.0:
            idx = int(rng.choice(n, p=d2 / total))
        else:
            # all remaining points coincide with an existing center
            idx = int(rng.integers(n))
        centers[j] = points[idx]
        np.minimum(d2, np.sum((points - centers[j]) ** 2, axis=1), out=d2)
    return centers


def _repair_kmeans_empty(labels: np.ndarray, d2: np.ndarray, k: int) -> np.ndarray:
    """Give every empty cluster the point farthest from its assigned center.

    Only points whose cluster keeps at least one member are eligible, so a
    repair never creates a new empty cluster.
    """
    labels = labels.astype(np.int64)
    counts = np.bincount(labels, minlength=k)
    if np.all(counts > 0):
        return labels
    own = d2[np.arange(labels.shape[0]), labels].astype(float)
    for j in range(k):
        if counts[j] > 0:
            continue
        eligible = counts[labels] >= 2
        candidates = np.where(eligible)[0]
        far = candidates[int(np.argmax(own[candidates]))]
        counts[labels[far]] -= 1
        labels[far] = j
        counts[j] += 1
        own[far] = -np.inf
    return labels


def kmeans_init(train: TrainingSet, k: int, seed: int) -> np.ndarray:
    """Cluster training patches with Lloyd's algorithm.

    Runs k-means++ seeding followed by Lloyd iterations until the assignment
    reaches a fixed point or ``KMEANS_MAX_ITERS`` rounds, whichever comes
    first.  A cluster that empties during an update is repaired by moving its
    center to the point currently farthest from its own center, so every
    label in ``[0, k)`` appears in the result (given distinct inputs).

    Parameters
    ----------
    train : TrainingSet
    k : int
      Number of clusters, ``1 <= k <= len(train)``.
    seed : int
      Makes the run deterministic.

    Returns
    -------
    ndarray of int64, shape (n,)
      One cluster index per patch.
    """
    points = train.patches
    n = points.shape[0]
    if k < 1:
        raise ValueError("k must be at least 1")
    if k > n:
        raise ValueError(f"k={k} exceeds the number of training patches ({n})")
    if k == 1:
        return np.zeros(n, dtype=np.int64)

    rng = np.random.default_rng(np.random.SeedSequence(seed))
    centers = _kmeans_pp_centers(points, k, rng)
    d2 = _squared_distances(points, centers)
    labels = _repair_kmeans_empty(np.argmin(d2, axis=1), d2, k)

    for _ in range(KMEANS_MAX_ITERS):
        for j in range(k):
            centers[j] = points[labels == j].mean(axis=0)
        d2 = _squared_distances(points, centers)
        new_labels = _repair_kmeans_empty(np.argmin(d2, axis=1), d2, k)
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
    return labels.astype(np.int64)


def estimate_cluster_params(members: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Sample mean and sample covariance of a cluster roster.

    The covariance uses denominator ``max(n - 1, 1)``, so a single-patch
    roster yields the zero matrix.

    Parameters
    ----------
    members : ndarray, shape (n_k, m), non-empty.

    Returns
    -------
    (mean, covariance) : ndarray (m,), ndarray (m, m)
    """
    members = np.asarray(members, dtype=float)
    if members.ndim != 2 or members.shape[0] == 0:
        raise ValueError("members must be a non-empty (n, m) array")
    n = members.shape[0]
    mean = members.mean(axis=0)
    centered = members - mean
    cov = centered.T @ centered / max(n - 1, 1)
    return mean, (cov + cov.T) / 2.0


def _build_clusters(
    patches: np.ndarray, labels: np.ndarray, k: int, epsilon_ridge_scale: float
) -> list[ClusterModel]:
    clusters = []
    for j in range(k):
        members = patches[labels == j]
        mean, cov = estimate_cluster_params(members)
        clusters.append(
            ClusterModel.build(mean, cov, members, ridge_value(cov, epsilon_ridge_scale))
        )
    return clusters


def _cluster_scores(patches: np.ndarray, clusters: list[ClusterModel]) -> np.ndarray:
    """Per-patch log-density under every cluster, shape (n, k)."""
    return np.column_stack([gaussian_logpdf_batch(patches, c) for c in clusters])


def _repair_empty(labels: np.ndarray, scores: np.ndarray, k: int) -> np.ndarray:
    """Give every empty cluster the globally least-likely patch.

    The stolen patch is the one with the lowest log-density under its current
    cluster, restricted to clusters that keep at least one member afterwards.
    """
    labels = labels.copy()
    counts = np.bincount(labels, minlength=k)
    for j in range(k):
        if counts[j] > 0:
            continue
        own = scores[np.arange(labels.shape[0]), labels]
        eligible = counts[labels] >= 2
        candidates = np.where(eligible)[0]
        victim = candidates[int(np.argmin(own[candidates]))]
        counts[labels[victim]] -= 1
        labels[victim] = j
        counts[j] += 1
    return labels


def cem_refine(
    patches: np.ndarray,
    labels: np.ndarray,
    k: int,
    iters: int,
    epsilon_ridge_scale: float = 1e-3,
) -> Iterator[tuple[np.ndarray, list[ClusterModel]]]:
    """Alternate (estimate params, reassign by max log-density) rounds.

    Yields ``(labels, clusters)`` after each full round, where ``clusters``
    are the parameters estimated at the start of the round and ``labels`` the
    assignment under them (ties broken toward the lowest cluster index).
    Empty clusters are repaired by stealing the globally least-likely patch.
    Stops early once the assignment reaches a fixed point, after yielding the
    fixed-point round.
    """
    labels = np.asarray(labels, dtype=np.int64)
    for _ in range(iters):
        clusters = _build_clusters(patches, labels, k, epsilon_ridge_scale)
        scores = _cluster_scores(patches, clusters)
        new_labels = scores.argmax(axis=1).astype(np.int64)
        new_labels = _repair_empty(new_labels, scores, k)
        fixed_point = np.array_equal(new_labels, labels)
        labels = new_labels
        yield labels, clusters
        if fixed_point:
            return


def learn_prior(
    train: TrainingSet,
    k: int,
    cem_iters: int = 10,
    seed: int = 0,
    epsilon_ridge_scale: float = 1e-3,
) -> PriorModel:
    """Learn the class prior from clean training patches.

    Runs :func:`kmeans_init`, then ``cem_iters`` refinement rounds (stopping
    early at an assignment fixed point), and finally re-estimates every
    cluster's Gaussian from its final roster so the stored parameters match
    the stored members.

    Parameters
    ----------
    train : TrainingSet
    k : int
      Number of clusters.
    cem_iters : int
      Refinement rounds after the k-means initialization; at least 1.
    seed : int
      Deterministic seed, recorded on the returned model.
    epsilon_ridge_scale : float
      Trace-scale of the covariance ridge (see :func:`~psnis.patches.ridge_value`).

    Returns
    -------
    PriorModel
    """
    if cem_iters < 1:
        raise ValueError("cem_iters must be at least 1")
    patches = train.patches
    labels = kmeans_init(train, k, seed)
    for labels, _ in cem_refine(patches, labels, k, cem_iters, epsilon_ridge_scale):
        pass
    clusters = _build_clusters(patches, labels, k, epsilon_ridge_scale)

    m = patches.shape[1]
    patch_size = int(round(np.sqrt(m)))
    if patch_size * patch_size != m:
        patch_size = 0  # dimension not derived from a square patch grid
    return PriorModel(
        clusters=tuple(clusters),
        patch_size=patch_size,
        k_count=k,
        training_seed=seed,
        epsilon_ridge=epsilon_ridge_scale,
    )


def assign_clean_patch(x: np.ndarray, model: PriorModel) -> int:
    """Index of the cluster with the highest log-density at ``x``.

    Ties break toward the lowest cluster index.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.shape[0] != model.dim:
        raise ValueError(f"expected a vector of dimension {model.dim}, got shape {x.shape}")
    scores = np.array([gaussian_logpdf(x, c) for c in model.clusters])
    return int(np.argmax(scores))


def classification_log_likelihood(
    patches: np.ndarray, labels: np.ndarray, clusters: list[ClusterModel]
) -> float:
    """Sum of each patch's Gaussian log-density under its assigned cluster."""
    patches = np.asarray(patches, dtype=float)
    labels = np.asarray(labels)
    total = 0.0
    for j, cluster in enumerate(clusters):
        mask = labels == j
        if np.any(mask):
            total += float(gaussian_logpdf_batch(patches[mask], cluster).sum())
    return total
