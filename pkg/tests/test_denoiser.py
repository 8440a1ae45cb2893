"""Per-patch denoiser: draws, selection, MMSE estimates, alternation."""

import numpy as np
import pytest

import psnis.denoiser as denoiser_mod
from psnis import (
    DenoiseConfig,
    NoisyPatch,
    SamplerState,
    denoise_patch,
    denoise_patch_rounds,
    draw_cluster_samples,
    fallback_estimate,
    mmse_estimate,
    poisson_loglik,
    select_cluster,
)
from psnis.denoiser import MMSE_STREAM, SELECT_STREAM

from conftest import exact_pool_posterior, make_pool_model


def small_cfg(**overrides):
    # denoise_patch only reads n1/n2/outer_iters/epsilon_floor, so the grid
    # fields can stay at their defaults even for free-dimension pool models
    base = dict(peak=10.0, k_count=1, n1=50, n2=10, outer_iters=2, seed=0)
    base.update(overrides)
    return DenoiseConfig(**base)


class TestDrawClusterSamples:
    def test_small_pool_returned_whole(self, rng):
        pool = rng.uniform(0, 5, (5, 3))
        model = make_pool_model([pool])
        out = draw_cluster_samples(model, 0, 300, SamplerState(0, 0), 1)
        assert np.array_equal(out, pool)

    def test_large_pool_draws_members(self, rng):
        pool = np.arange(10_000, dtype=float)[:, None] * np.ones(2)
        model = make_pool_model([pool])
        out = draw_cluster_samples(model, 0, 300, SamplerState(3, 7), 1)
        assert out.shape == (300, 2)
        assert set(out[:, 0]).issubset(set(pool[:, 0]))

    def test_deterministic_per_tuple(self, rng):
        pool = rng.uniform(0, 9, (500, 4))
        model = make_pool_model([pool])
        state = SamplerState(5, 11)
        a = draw_cluster_samples(model, 0, 40, state, 2)
        b = draw_cluster_samples(model, 0, 40, state, 2)
        assert np.array_equal(a, b)
        c = draw_cluster_samples(model, 0, 40, state, 3)
        assert not np.array_equal(a, c)

    def test_streams_are_independent(self, rng):
        pool = rng.uniform(0, 9, (500, 4))
        model = make_pool_model([pool])
        state = SamplerState(5, 11)
        a = draw_cluster_samples(model, 0, 40, state, 1, SELECT_STREAM)
        b = draw_cluster_samples(model, 0, 40, state, 1, MMSE_STREAM)
        assert not np.array_equal(a, b)

    def test_bad_arguments(self, rng):
        model = make_pool_model([rng.uniform(0, 1, (4, 2))])
        with pytest.raises(ValueError):
            draw_cluster_samples(model, 1, 10, SamplerState(0, 0), 1)
        with pytest.raises(ValueError):
            draw_cluster_samples(model, 0, 0, SamplerState(0, 0), 1)


class TestSelectCluster:
    def test_single_cluster(self, rng):
        model = make_pool_model([rng.uniform(0, 6, (8, 2))])
        y = NoisyPatch(np.array([2, 3]))
        best, scores = select_cluster(y, y.counts.astype(float), model, 5, SamplerState(0, 0), 1)
        assert best == 0
        assert scores.shape == (1,)

    def test_point_mass_pools(self):
        a = np.array([4.0, 9.0])
        b = np.array([30.0, 2.0])
        model = make_pool_model([[a], [b]])
        y = NoisyPatch(np.round(a).astype(int))
        best, scores = select_cluster(y, a, model, 5, SamplerState(0, 0), 1)
        assert best == 0
        assert scores[0] == 0.0
        assert scores[1] == pytest.approx(np.sum((a - b) ** 2), rel=1e-12)

    def test_matches_replayed_brute_force(self, rng):
        pools = [np.abs(rng.normal(m, 1.0, (40, 3))) for m in (2.0, 6.0, 12.0)]
        model = make_pool_model(pools)
        y = NoisyPatch(rng.integers(0, 10, 3))
        u = rng.uniform(0, 8, 3)
        state = SamplerState(21, 4)
        best, scores = select_cluster(y, u, model, 7, state, 2)
        for k in range(3):
            draws = draw_cluster_samples(model, k, 7, state, 2, SELECT_STREAM)
            want = exact_pool_posterior(
                y.counts, draws, payload_fn=lambda x: np.sum((u - x) ** 2)
            )
            assert scores[k] == pytest.approx(want, abs=1e-9)
        assert best == int(np.argmin(scores))

    def test_rejects_negative_estimate(self, rng):
        model = make_pool_model([rng.uniform(0, 6, (8, 2))])
        with pytest.raises(ValueError):
            select_cluster(NoisyPatch(np.array([1, 1])), np.array([-0.5, 1.0]),
                           model, 5, SamplerState(0, 0), 1)


class TestMmseEstimate:
    def test_single_patch_pool_is_exact(self, rng):
        p = np.array([3.0, 0.5, 8.0])
        model = make_pool_model([[p]])
        for _ in range(5):
            y = NoisyPatch(rng.integers(0, 20, 3))
            values, ess = mmse_estimate(y, 0, model, 10, SamplerState(1, 2), 1)
            assert np.array_equal(values, p)
            assert ess == pytest.approx(1.0)

    def test_equal_likelihood_pair_averages(self):
        # permuted patches against constant counts have identical likelihoods
        p = np.array([2.0, 7.0])
        q = np.array([7.0, 2.0])
        model = make_pool_model([[p, q]])
        y = NoisyPatch(np.array([4, 4]))
        values, ess = mmse_estimate(y, 0, model, 2, SamplerState(0, 0), 1)
        assert np.allclose(values, (p + q) / 2, atol=1e-12)
        assert ess == pytest.approx(2.0, abs=1e-9)

    def test_full_pool_matches_enumeration(self, rng):
        pool = rng.uniform(0.2, 12.0, (6, 2))
        model = make_pool_model([pool])
        y = NoisyPatch(rng.integers(0, 15, 2))
        values, _ = mmse_estimate(y, 0, model, 6, SamplerState(0, 0), 1)
        want = exact_pool_posterior(y.counts, pool)
        assert np.allclose(values, want, atol=1e-10)

    def test_estimate_within_sample_hull(self, rng):
        pool = rng.uniform(0, 20, (200, 4))
        model = make_pool_model([pool])
        y = NoisyPatch(rng.integers(0, 12, 4))
        state = SamplerState(9, 1)
        values, _ = mmse_estimate(y, 0, model, 30, state, 1)
        draws = draw_cluster_samples(model, 0, 30, state, 1, MMSE_STREAM)
        assert np.all(values >= draws.min(axis=0) - 1e-12)
        assert np.all(values <= draws.max(axis=0) + 1e-12)
        assert np.all(values >= 0)


class TestWeightScaleInvariance:
    def test_constant_log_weight_shift_changes_nothing(self, rng, monkeypatch):
        pools = [np.abs(rng.normal(m, 1.0, (30, 3))) for m in (3.0, 9.0)]
        model = make_pool_model(pools)
        y = NoisyPatch(rng.integers(0, 8, 3))
        u = rng.uniform(0, 6, 3)
        state = SamplerState(2, 5)

        base_best, base_scores = select_cluster(y, u, model, 8, state, 1)
        base_values, base_ess = mmse_estimate(y, base_best, model, 12, state, 1)

        shift = 321.0
        monkeypatch.setattr(
            denoiser_mod, "poisson_loglik",
            lambda counts, xs, eps: poisson_loglik(counts, xs, eps) + shift,
        )
        best, scores = select_cluster(y, u, model, 8, state, 1)
        values, ess = mmse_estimate(y, best, model, 12, state, 1)
        assert best == base_best
        assert np.allclose(scores, base_scores, atol=1e-12, rtol=1e-12)
        assert np.allclose(values, base_values, atol=1e-12)
        assert ess == pytest.approx(base_ess, abs=1e-9)


class TestDenoisePatch:
    def test_trivial_composition(self):
        p = np.array([5.0, 1.0])
        model = make_pool_model([[p]])
        cfg = small_cfg(outer_iters=1)
        est = denoise_patch(NoisyPatch(np.array([4, 2])), model, cfg, SamplerState(0, 0))
        assert np.array_equal(est.values, p)
        assert est.cluster == 0

    def test_separated_pools_keep_cluster(self, rng):
        # pool A near 3, pool B near 40: counts drawn near A stay in A
        pool_a = np.abs(rng.normal(3.0, 0.3, (50, 4)))
        pool_b = np.abs(rng.normal(40.0, 0.3, (50, 4)))
        model = make_pool_model([pool_a, pool_b])
        y = NoisyPatch(rng.poisson(pool_a[0]))
        rounds = denoise_patch_rounds(y, model, small_cfg(k_count=2, outer_iters=2),
                                      SamplerState(4, 0))
        assert [r.cluster for r in rounds] == [0] * len(rounds)

    def test_bit_identical_reruns(self, rng):
        pools = [np.abs(rng.normal(m, 1.0, (60, 3))) for m in (2.0, 8.0)]
        model = make_pool_model(pools)
        y = NoisyPatch(rng.integers(0, 9, 3))
        cfg = small_cfg(k_count=2)
        a = denoise_patch(y, model, cfg, SamplerState(7, 3))
        b = denoise_patch(y, model, cfg, SamplerState(7, 3))
        assert np.array_equal(a.values, b.values)
        assert (a.cluster, a.ess) == (b.cluster, b.ess)

    def test_early_exit_on_fixed_point(self):
        # single-patch pool: round 2 repeats cluster 0 with unchanged estimate,
        # so rounds 3.. are skipped
        p = np.array([6.0, 6.0])
        model = make_pool_model([[p]])
        rounds = denoise_patch_rounds(NoisyPatch(np.array([6, 6])), model,
                                      small_cfg(outer_iters=5), SamplerState(0, 0))
        assert len(rounds) == 2
        assert np.array_equal(rounds[-1].values, p)

    def test_dimension_mismatch(self, rng):
        model = make_pool_model([rng.uniform(0, 4, (5, 3))])
        with pytest.raises(ValueError):
            denoise_patch(NoisyPatch(np.array([1, 2])), model, small_cfg(), SamplerState(0, 0))


class TestFallback:
    def test_nearest_mean_pool_average(self, rng):
        pool_a = np.tile([2.0, 2.0], (4, 1)) + rng.uniform(0, 0.1, (4, 2))
        pool_b = np.tile([50.0, 50.0], (4, 1)) + rng.uniform(0, 0.1, (4, 2))
        model = make_pool_model([pool_a, pool_b])
        est = fallback_estimate(NoisyPatch(np.array([49, 51])), model)
        assert est.cluster == 1
        assert np.allclose(est.values, pool_b.mean(axis=0))
        assert est.ess == 4.0

    def test_denoise_patch_routes_to_fallback_on_poisoned_weights(self, rng, monkeypatch):
        pools = [np.abs(rng.normal(m, 0.5, (10, 2))) for m in (2.0, 30.0)]
        model = make_pool_model(pools)
        y = NoisyPatch(np.array([2, 2]))

        def poisoned(counts, xs, eps):
            out = np.asarray(poisson_loglik(counts, xs, eps))
            return np.full_like(out, np.nan)

        monkeypatch.setattr(denoiser_mod, "poisson_loglik", poisoned)
        est = denoise_patch(y, model, small_cfg(k_count=2), SamplerState(0, 0))
        want = fallback_estimate(y, model)
        assert est.cluster == want.cluster
        assert np.array_equal(est.values, want.values)
