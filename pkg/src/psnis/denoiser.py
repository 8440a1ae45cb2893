"""Per-patch denoising: cluster selection alternated with MMSE estimation.

For one noisy patch the algorithm keeps a running clean estimate ``u``,
initialized to the raw counts.  Each outer round first scores every cluster
by the self-normalized estimate of the expected squared error between ``u``
and clean patches drawn from that cluster's roster (weights are the exact
Poisson likelihoods of the observed counts), picks the cluster with the
smallest score, then replaces ``u`` with the self-normalized posterior mean
over a fresh draw from the chosen roster.  Samples come from the training
rosters themselves, not from the fitted Gaussians: the rosters are the
distribution the prior is meant to approximate.

Fresh samples are drawn every round, and selection and estimation use
separate streams, so the two estimators never share draws.  All draws are a
pure function of (seed, patch index, cluster, round, stream), which makes
whole-image denoising independent of patch processing order and worker
count.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .patches import PriorModel
from .poisson import DEFAULT_EPSILON_FLOOR, NoisyPatch, poisson_loglik
from .snis import LOG_WEIGHT_FLOOR, WeightedSampleSet, effective_sample_size, snis_estimate

__all__ = [
    "SamplerState",
    "PatchEstimate",
    "DegenerateWeightsError",
    "draw_cluster_samples",
    "select_cluster",
    "mmse_estimate",
    "denoise_patch",
    "denoise_patch_rounds",
    "fallback_estimate",
]


class DegenerateWeightsError(RuntimeError):
    """No importance weight is usable (no finite log-likelihood survived)."""


SELECT_STREAM = 0
MMSE_STREAM = 1

# Infinity-norm tolerance on the change of the estimate between rounds; once
# the selected cluster also repeats, further rounds are skipped.
CONVERGENCE_TOL = 1e-9


@dataclass(frozen=True)
class SamplerState:
    """Identifies the reproducible sample streams of one noisy patch.

    Attributes
    ----------
    seed : int
      Run-level seed (nonnegative).
    patch_index : int
      Raster position of the patch in its image (nonnegative).
    """

    seed: int
    patch_index: int = 0

    def __post_init__(self):
        if self.seed < 0 or self.patch_index < 0:
            raise ValueError("seed and patch_index must be nonnegative")


@dataclass(frozen=True)
class PatchEstimate:
    """Denoised patch values, the cluster that produced them, and the
    effective sample size of the final weight set."""

    values: np.ndarray
    cluster: int
    ess: float

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))


def _stream_rng(state: SamplerState, k: int, round_index: int, stream: int) -> np.random.Generator:
    seq = np.random.SeedSequence([state.seed, state.patch_index, k, round_index, stream])
    return np.random.default_rng(seq)


def _floored_log_weights(log_weights: np.ndarray) -> np.ndarray:
    """Clamp -inf log-weights at the relative floor; reject unusable sets.

    The Poisson likelihood keeps its log finite for valid inputs, so this
    only fires when upstream numerics were poisoned; in that case the caller
    falls back to :func:`fallback_estimate` rather than propagating a 0/0.
    """
    log_weights = np.asarray(log_weights, dtype=float)
    finite = log_weights[np.isfinite(log_weights)]
    if finite.size == 0 or np.any(np.isnan(log_weights)):
        raise DegenerateWeightsError("every importance weight is unusable")
    return np.maximum(log_weights, finite.max() - LOG_WEIGHT_FLOOR)


def draw_cluster_samples(
    model: PriorModel,
    k: int,
    n: int,
    state: SamplerState,
    round_index: int,
    stream: int = SELECT_STREAM,
) -> np.ndarray:
    """Draw ``n`` clean patches from cluster ``k``'s training roster.

    Uniform with replacement, except that a roster with at most ``n``
    patches is returned whole, each member exactly once.  The draw is a pure
    function of ``(state.seed, state.patch_index, k, round_index, stream)``.

    Returns
    -------
    ndarray, shape (min(n, roster size) .. n, m)
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if not 0 <= k < model.k_count:
        raise ValueError(f"cluster index {k} out of range [0, {model.k_count})")
    members = model.clusters[k].members
    if members.shape[0] <= n:
        return members
    rng = _stream_rng(state, k, round_index, stream)
    idx = rng.integers(0, members.shape[0], size=n)
    return members[idx]


def select_cluster(
    y: NoisyPatch,
    u: np.ndarray,
    model: PriorModel,
    n2: int,
    state: SamplerState,
    round_index: int,
    epsilon_floor: float = DEFAULT_EPSILON_FLOOR,
) -> tuple[int, np.ndarray]:
    """Pick the cluster whose estimated squared distance to ``u`` is smallest.

    For every cluster, ``n2`` roster samples are drawn and the expected
    squared error ``E[||x - u||^2 | y, k]`` is approximated by the
    self-normalized estimator with Poisson likelihood weights.

    Parameters
    ----------
    y : NoisyPatch
    u : ndarray, shape (m,)
      Current clean estimate; nonnegative.
    model : PriorModel
    n2 : int
      Samples per cluster.
    state : SamplerState
    round_index : int
    epsilon_floor : float
      Intensity floor inside the likelihood.

    Returns
    -------
    (best, scores) : int, ndarray of shape (k_count,)
      Index of the minimizing cluster (ties toward the lowest index) and all
      cluster scores.
    """
    u = np.asarray(u, dtype=float)
    if np.any(u < 0):
        raise ValueError("estimate u must be nonnegative")
    scores = np.empty(model.k_count, dtype=float)
    for k in range(model.k_count):
        samples = draw_cluster_samples(model, k, n2, state, round_index, SELECT_STREAM)
        log_weights = _floored_log_weights(poisson_loglik(y.counts, samples, epsilon_floor))
        payloads = np.sum((samples - u) ** 2, axis=1)
        scores[k] = snis_estimate(WeightedSampleSet(log_weights, payloads))
    return int(np.argmin(scores)), scores


def mmse_estimate(
    y: NoisyPatch,
    k: int,
    model: PriorModel,
    n1: int,
    state: SamplerState,
    round_index: int,
    epsilon_floor: float = DEFAULT_EPSILON_FLOOR,
) -> tuple[np.ndarray, float]:
    """Posterior-mean estimate of the clean patch from cluster ``k``.

    Draws ``n1`` roster samples and returns their Poisson-likelihood-weighted
    average together with the effective sample size of the weight set.

    Returns
    -------
    (values, ess) : ndarray of shape (m,), float
    """
    samples = draw_cluster_samples(model, k, n1, state, round_index, MMSE_STREAM)
    log_weights = _floored_log_weights(poisson_loglik(y.counts, samples, epsilon_floor))
    values = snis_estimate(WeightedSampleSet(log_weights, samples))
    return values, effective_sample_size(log_weights)


def fallback_estimate(y: NoisyPatch, model: PriorModel) -> PatchEstimate:
    """Degenerate-weights escape hatch: nearest cluster mean, pool average.

    Used when every importance weight is unusable (no finite log-likelihood
    survived).  The patch is assigned to the cluster whose mean is closest to
    the raw counts in Euclidean distance, and the estimate is the plain
    average of that cluster's roster, which keeps the output finite and in
    the range of the training data.
    """
    counts = y.counts.astype(float)
    distances = [float(np.sum((counts - c.mean) ** 2)) for c in model.clusters]
    k = int(np.argmin(distances))
    members = model.clusters[k].members
    return PatchEstimate(members.mean(axis=0), k, float(members.shape[0]))


def denoise_patch_rounds(
    y: NoisyPatch,
    model: PriorModel,
    cfg,
    state: SamplerState,
) -> list[PatchEstimate]:
    """Run the alternation and return one estimate per executed round.

    The first round starts from ``u = y`` (counts cast to reals).  Rounds
    stop early once the selected cluster repeats and the estimate moves less
    than ``CONVERGENCE_TOL`` in infinity norm.  The last list entry is the
    final estimate; intermediate entries are diagnostics for studying how
    quickly the discrete cluster choices stabilize.
    """
    if y.counts.shape[0] != model.dim:
        raise ValueError(f"patch dimension {y.counts.shape[0]} does not match model ({model.dim})")
    u = y.counts.astype(float)
    prev_cluster: int | None = None
    rounds: list[PatchEstimate] = []
    for round_index in range(1, cfg.outer_iters + 1):
        try:
            k_hat, scores = select_cluster(
                y, u, model, cfg.n2, state, round_index, cfg.epsilon_floor
            )
            u_next, ess = mmse_estimate(
                y, k_hat, model, cfg.n1, state, round_index, cfg.epsilon_floor
            )
        except DegenerateWeightsError:
            return [fallback_estimate(y, model)]
        if not (np.all(np.isfinite(u_next)) and np.all(np.isfinite(scores))):
            return [fallback_estimate(y, model)]
        converged = prev_cluster == k_hat and float(np.max(np.abs(u_next - u))) < CONVERGENCE_TOL
        u = u_next
        prev_cluster = k_hat
        rounds.append(PatchEstimate(u, k_hat, ess))
        if converged:
            break
    return rounds


def denoise_patch(
    y: NoisyPatch,
    model: PriorModel,
    cfg,
    state: SamplerState,
) -> PatchEstimate:
    """Denoise one noisy patch; see :func:`denoise_patch_rounds`."""
    return denoise_patch_rounds(y, model, cfg, state)[-1]
