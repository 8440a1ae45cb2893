"""Self-normalized importance sampling on a toy posterior, versus enumeration.

A clean value x is drawn uniformly from {1..10}; we observe a Poisson count
y=3 and want the posterior mean E[x | y].  Because the state space is tiny
the exact answer is a short sum, which makes it a perfect oracle for the
estimator: draw x's from the prior, weight by the likelihood, normalize by
the weight sum.  No normalizing constants are ever needed -- adding any
constant to all log-weights changes nothing.
"""

import numpy as np
from scipy.stats import poisson

from psnis import WeightedSampleSet, effective_sample_size, normalize_weights, snis_estimate

OBSERVED = 3
support = np.arange(1, 11, dtype=float)

exact = np.sum(support * poisson.pmf(OBSERVED, support)) / np.sum(poisson.pmf(OBSERVED, support))
print(f"exact posterior mean by enumeration: {exact:.6f}\n")

print(f"{'n':>7} {'estimate':>10} {'abs err':>9} {'ESS':>8}")
rng = np.random.default_rng(42)
for n in (10, 100, 1_000, 10_000, 100_000):
    draws = rng.integers(1, 11, size=n).astype(float)
    log_weights = poisson.logpmf(OBSERVED, draws)
    estimate = snis_estimate(WeightedSampleSet(log_weights, draws))
    ess = effective_sample_size(log_weights)
    print(f"{n:>7d} {estimate:>10.5f} {abs(estimate - exact):>9.5f} {ess:>8.1f}")

print("\nthe estimate converges to the enumerated value as n grows")

shift = 1e4
lw = poisson.logpmf(OBSERVED, rng.integers(1, 11, 5).astype(float))
print("\nshift invariance (unnormalized densities are fine):")
print("  weights          :", np.round(normalize_weights(lw), 6))
print(f"  weights + {shift:g}:", np.round(normalize_weights(lw + shift), 6))
