"""Self-normalized importance sampling with log-domain weight handling.

The estimator consumes *log* weights (here: Poisson log-likelihoods of the
observed patch under each candidate clean patch) and payloads ``f(x_j)``; it
returns ``sum_j f(x_j) * w_j / sum_j w_j``.  Because the weights are
normalized by their own sum, any constant added to every log-weight cancels,
which is exactly what makes unnormalized densities admissible.

Payloads may be scalars (one value per sample) or vectors (one row per
sample); both uses share this single code path.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "WeightedSampleSet",
    "normalize_weights",
    "snis_estimate",
    "effective_sample_size",
]

# Offset below the running maximum at which log-weights are clamped before
# exponentiation.  exp(-700) is representable in double precision, so every
# floored weight stays finite while anything that mattered above 1e-300
# relative magnitude is untouched.
LOG_WEIGHT_FLOOR = 700.0


@dataclass(frozen=True)
class WeightedSampleSet:
    """Log-weights and payloads for one self-normalized estimate.

    Attributes
    ----------
    log_weights : ndarray, shape (n,)
      Finite log-weights, known only up to a shared additive constant.
    payloads : ndarray, shape (n,) or (n, p)
      Per-sample values whose weighted mean is estimated.
    """

    log_weights: np.ndarray
    payloads: np.ndarray

    def __post_init__(self):
        log_weights = np.asarray(self.log_weights, dtype=float)
        payloads = np.asarray(self.payloads, dtype=float)
        if log_weights.ndim != 1 or log_weights.shape[0] == 0:
            raise ValueError("log_weights must be a non-empty 1-D array")
        if not np.all(np.isfinite(log_weights)):
            raise ValueError("log_weights must be finite (apply floors upstream)")
        if payloads.shape[0] != log_weights.shape[0]:
            raise ValueError("payloads and log_weights lengths must agree")
        object.__setattr__(self, "log_weights", log_weights)
        object.__setattr__(self, "payloads", payloads)


def normalize_weights(log_weights: np.ndarray) -> np.ndarray:
    """Turn log-weights into normalized weights that sum to one.

    Computes ``exp(lw_j - logsumexp(lw))`` after clamping each entry to at
    most ``LOG_WEIGHT_FLOOR`` below the maximum, so the result is finite for
    any finite input and invariant to adding a constant to all entries.

    Parameters
    ----------
    log_weights : ndarray, shape (n,)

    Returns
    -------
    ndarray, shape (n,)
      Nonnegative weights summing to 1 (within 1e-12).
    """
    log_weights = np.asarray(log_weights, dtype=float)
    if log_weights.ndim != 1 or log_weights.shape[0] == 0:
        raise ValueError("log_weights must be a non-empty 1-D array")
    top = log_weights.max()
    floored = np.maximum(log_weights, top - LOG_WEIGHT_FLOOR)
    weights = np.exp(floored - top)
    return weights / weights.sum()


def snis_estimate(samples: WeightedSampleSet) -> float | np.ndarray:
    """Self-normalized estimate ``sum_j f(x_j) w_j / sum_j w_j``.

    Parameters
    ----------
    samples : WeightedSampleSet

    Returns
    -------
    float or ndarray
      Scalar for ``(n,)`` payloads, ``(p,)`` vector for ``(n, p)`` payloads.
      Each output coordinate lies in the convex hull of the payloads.
    """
    weights = normalize_weights(samples.log_weights)
    estimate = weights @ samples.payloads
    if samples.payloads.ndim == 1:
        return float(estimate)
    return estimate


def effective_sample_size(log_weights: np.ndarray) -> float:
    """Weight-degeneracy diagnostic ``1 / sum_j w_j^2``, in ``[1, n]``.

    Near ``n`` means the weights are close to uniform; near 1 means a single
    sample dominates the estimate.
    """
    weights = normalize_weights(log_weights)
    return float(1.0 / np.sum(weights * weights))
