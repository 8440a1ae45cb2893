"""Poisson observation model: exact log-likelihood and count synthesis.

Photon counts at each pixel are independent Poisson draws whose mean is the
underlying clean intensity.  The log-likelihood of a count vector ``y`` given
an intensity vector ``x`` is

    sum_j [ -x_j + y_j * ln(x_j) - ln(y_j!) ]

with ``ln(y!)`` computed through the log-gamma function (exact and
overflow-free for any count).  Clean dataset patches legitimately contain
zeros, so intensities are floored at a small epsilon inside the likelihood;
otherwise a positive count against a zero intensity would send an importance
weight to -inf and poison every estimate that uses it.

The per-``y`` constant ``sum_j ln(y_j!)`` is retained rather than dropped so
logged likelihood values are directly comparable to independent evaluations;
the self-normalized estimator is invariant to it either way.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

__all__ = ["NoisyPatch", "poisson_loglik", "sample_poisson_image"]

DEFAULT_EPSILON_FLOOR = 1e-6


@dataclass(frozen=True)
class NoisyPatch:
    """A noisy patch: ``(m,)`` nonnegative integer photon counts plus position."""

    counts: np.ndarray
    row: int = 0
    col: int = 0

    def __post_init__(self):
        counts = np.asarray(self.counts)
        if counts.ndim != 1:
            raise ValueError(f"counts must be 1-D, got shape {counts.shape}")
        as_float = counts.astype(float)
        if not np.all(np.isfinite(as_float)):
            raise ValueError("counts must be finite")
        if np.any(as_float < 0):
            raise ValueError("counts must be nonnegative")
        if np.any(as_float != np.round(as_float)):
            raise ValueError("counts must be integers")
        object.__setattr__(self, "counts", counts.astype(np.int64))


def poisson_loglik(
    counts: np.ndarray,
    intensity: np.ndarray,
    epsilon_floor: float = DEFAULT_EPSILON_FLOOR,
) -> float | np.ndarray:
    """Exact Poisson log-likelihood of integer counts given clean intensities.

    Parameters
    ----------
    counts : ndarray, shape (m,)
      Nonnegative integer photon counts.
    intensity : ndarray, shape (m,) or (n, m)
      Nonnegative clean intensities; each entry is floored at
      ``epsilon_floor`` before the log.  A 2-D array evaluates ``n``
      candidate patches against the same counts in one call.
    epsilon_floor : float
      Lower clamp on intensities inside the likelihood.

    Returns
    -------
    float or ndarray
      ``sum_j [-x_j + y_j ln(x_j) - ln(y_j!)]`` per candidate; always finite.
    """
    counts = np.asarray(counts, dtype=float)
    intensity = np.asarray(intensity, dtype=float)
    if counts.ndim != 1:
        raise ValueError("counts must be a 1-D vector")
    if np.any(counts < 0):
        raise ValueError("counts must be nonnegative")
    if intensity.shape[-1] != counts.shape[0]:
        raise ValueError(
            f"dimension mismatch: counts has {counts.shape[0]} entries, "
            f"intensity rows have {intensity.shape[-1]}"
        )
    if np.any(intensity < 0):
        raise ValueError("intensities must be nonnegative")
    floored = np.maximum(intensity, epsilon_floor)
    terms = -floored + counts * np.log(floored) - gammaln(counts + 1.0)
    total = terms.sum(axis=-1)
    if intensity.ndim == 1:
        return float(total)
    return total


def sample_poisson_image(intensity: np.ndarray, seed: int) -> np.ndarray:
    """Draw an integer count image with per-pixel Poisson means ``intensity``.

    Deterministic given ``seed``; a zero-intensity pixel always yields a zero
    count.

    Parameters
    ----------
    intensity : ndarray
      Nonnegative clean intensities (any shape).
    seed : int
      Nonnegative seed for the generator.

    Returns
    -------
    ndarray of int64, same shape as ``intensity``.
    """
    intensity = np.asarray(intensity, dtype=float)
    if np.any(intensity < 0):
        raise ValueError("intensities must be nonnegative")
    if not np.all(np.isfinite(intensity)):
        raise ValueError("intensities must be finite")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    return rng.poisson(intensity).astype(np.int64)
