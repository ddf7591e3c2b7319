"""Simulation harness: sampler distribution, determinism, and aggregate behavior."""

import math

import numpy as np
import pytest

from effdof import (
    DegenerateComponents,
    SimConfig,
    WeightMode,
    corrected_df,
    kish_neff,
    run_cell,
    run_grid,
    run_grid_detailed,
    sample_component_variance,
    satterthwaite_df,
)
from effdof.estimators import ComponentSet
from effdof.montecarlo import _block_sizes, batch_df_estimates, batch_kish


def make_cfg(**kwargs):
    defaults = dict(k_values=(2,), nu_values=(1.0,), seed=42, replicates=2_000)
    defaults.update(kwargs)
    return SimConfig(**defaults)


class TestSampler:
    def test_scalar_draw(self):
        rng = np.random.Generator(np.random.Philox(0))
        value = sample_component_variance(4.0, 1.0, rng)
        assert isinstance(value, float) and value >= 0.0

    def test_moments(self):
        # E[S^2] = sigma^2, Var[S^2] = 2 sigma^4 / nu
        rng = np.random.Generator(np.random.Philox(1))
        draws = sample_component_variance(4.0, 2.0, rng, size=200_000)
        se_mean = math.sqrt(2.0 / 4.0) * 2.0 / math.sqrt(draws.size)
        assert draws.mean() == pytest.approx(2.0, abs=5 * se_mean)
        assert draws.var(ddof=1) == pytest.approx(2 * 4.0 / 4.0, rel=0.05)

    def test_fourth_moment_identity(self):
        # E[S^4] * nu / (nu + 2) recovers sigma^4
        rng = np.random.Generator(np.random.Philox(2))
        draws = sample_component_variance(2.0, 1.0, rng, size=300_000)
        transformed = draws**2 * (2.0 / 4.0)
        se = transformed.std(ddof=1) / math.sqrt(transformed.size)
        assert transformed.mean() == pytest.approx(1.0, abs=5 * se)

    def test_sub_one_gamma_shape_path(self):
        # nu=1 exercises gamma shape 0.5; check the CDF against the closed form
        # P(chi2_1 <= x) = erf(sqrt(x/2))
        rng = np.random.Generator(np.random.Philox(3))
        draws = sample_component_variance(1.0, 1.0, rng, size=200_000)
        for x in (0.5, 2.0, 4.0):
            p = math.erf(math.sqrt(x / 2.0))
            emp = float((draws <= x).mean())
            tol = 5 * math.sqrt(p * (1 - p) / draws.size)
            assert emp == pytest.approx(p, abs=tol)

    def test_invalid_parameters(self):
        rng = np.random.Generator(np.random.Philox(4))
        with pytest.raises(ValueError):
            sample_component_variance(0.0, 1.0, rng)
        with pytest.raises(ValueError):
            sample_component_variance(1.0, 0.0, rng)


class TestBatchAgainstScalar:
    def test_df_estimates_match_scalar_path(self):
        rng = np.random.default_rng(12)
        nu = 3.5
        weights = rng.uniform(0.1, 2.0, size=(40, 5))
        s2 = rng.uniform(0.1, 4.0, size=(40, 5))
        satt, corr = batch_df_estimates(weights, s2, nu)
        for i in range(40):
            cs = ComponentSet.from_arrays(weights[i], s2[i], [nu] * 5)
            assert satt[i] == pytest.approx(satterthwaite_df(cs).value, rel=1e-12)
            assert corr[i] == pytest.approx(corrected_df(cs).value, rel=1e-12)

    def test_kish_matches_scalar_path(self):
        rng = np.random.default_rng(13)
        weights = rng.uniform(0.05, 3.0, size=(40, 6))
        batch = batch_kish(weights)
        for i in range(40):
            assert batch[i] == pytest.approx(kish_neff(weights[i]), rel=1e-12)

    def test_all_zero_replicate_is_a_hard_error(self):
        weights = np.ones((3, 2))
        s2 = np.array([[1.0, 1.0], [0.0, 0.0], [1.0, 2.0]])
        with pytest.raises(DegenerateComponents):
            batch_df_estimates(weights, s2, 2.0)


class TestDeterminism:
    def test_rerun_is_identical(self):
        cfg = make_cfg(k_values=(2, 4), nu_values=(1.0, 8.0), replicates=3_000)
        assert run_grid(cfg) == run_grid(cfg)

    def test_thread_count_does_not_change_results(self):
        cfg = make_cfg(k_values=(2, 4), nu_values=(1.0, 8.0),
                       replicates=25_000, block_size=4_000)
        base = run_grid(cfg, threads=1)
        assert run_grid(cfg, threads=4) == base
        assert run_grid(cfg, threads=2) == base

    def test_random_weight_modes_are_deterministic(self):
        for fix in (False, True):
            cfg = make_cfg(weight_mode=WeightMode.RANDOM_NORMAL, fix_weights=fix,
                           replicates=22_000, block_size=5_000)
            a = run_grid_detailed(cfg, threads=1)
            b = run_grid_detailed(cfg, threads=3)
            assert a.cells == b.cells
            assert a.weight_rejections == b.weight_rejections

    def test_single_replicate_cell(self):
        cfg = make_cfg(replicates=1)
        cell = run_grid(cfg)[0]
        assert run_grid(cfg)[0] == cell
        assert cell.sd_satt == 0.0 and cell.sd_corr == 0.0

    def test_run_cell_matches_grid_substream(self):
        cfg = make_cfg(replicates=4_000)
        stream = np.random.SeedSequence(entropy=cfg.seed, spawn_key=(0,))
        assert run_cell(2, 1.0, cfg, stream) == run_grid(cfg)[0]

    def test_different_seeds_differ(self):
        a = run_grid(make_cfg())[0]
        b = run_grid(make_cfg(seed=43))[0]
        assert a.mean_satt != b.mean_satt


class TestGrid:
    def test_cardinality_and_order(self):
        cfg = make_cfg(k_values=(64, 2, 4, 8, 16, 32),
                       nu_values=(32.0, 1.0, 2.0, 4.0, 8.0, 16.0),
                       replicates=10)
        cells = run_grid(cfg)
        assert len(cells) == 36
        assert [(c.k, c.nu_bar) for c in cells] == cfg.grid
        assert cfg.grid == sorted(cfg.grid)

    def test_expected_column(self):
        for cell in run_grid(make_cfg(k_values=(3, 5), nu_values=(2.0,), replicates=50)):
            assert cell.expected == cell.k * cell.nu_bar

    def test_seed_stability_of_cell_means(self):
        # two independent seeds agree within Monte Carlo resolution
        cells = [run_grid(make_cfg(k_values=(2,), nu_values=(8.0,),
                                   replicates=100_000, seed=s))[0]
                 for s in (1, 2)]
        se = math.hypot(cells[0].sd_corr, cells[1].sd_corr) / math.sqrt(100_000)
        assert abs(cells[0].mean_corr - cells[1].mean_corr) < 4 * se


class TestAggregates:
    def test_kish_is_exactly_k_in_equal_mode(self):
        for unit in (False, True):
            cfg = make_cfg(k_values=(3, 16), nu_values=(2.0,), replicates=500,
                           unit_weights=unit)
            for cell in run_grid(cfg):
                assert cell.mean_kish == float(cell.k)
                assert cell.ratio_kish_k == 1.0

    def test_equal_weight_normalization_is_cosmetic(self):
        # 1/K versus unit weights: scale invariance keeps every statistic equal
        a = run_grid(make_cfg(replicates=5_000, unit_weights=False))[0]
        b = run_grid(make_cfg(replicates=5_000, unit_weights=True))[0]
        assert a.mean_satt == pytest.approx(b.mean_satt, rel=1e-12)
        assert a.mean_corr == pytest.approx(b.mean_corr, rel=1e-12)
        assert a.sd_corr == pytest.approx(b.sd_corr, rel=1e-9)

    def test_classic_estimator_biased_low_in_ideal_case(self):
        cfg = make_cfg(k_values=(2, 8), nu_values=(1.0, 4.0, 32.0), replicates=4_000)
        for cell in run_grid(cfg):
            assert cell.mean_satt < cell.expected

    def test_classic_bias_shrinks_with_growing_dof(self):
        cfg = make_cfg(k_values=(4,), nu_values=(1.0, 4.0, 16.0, 64.0),
                       replicates=4_000)
        rel_bias = [(c.expected - c.mean_satt) / c.expected for c in run_grid(cfg)]
        assert all(a > b for a, b in zip(rel_bias, rel_bias[1:]))

    def test_corrected_mean_near_expected_at_large_dof(self):
        # residual bias of the corrected estimator is below Monte Carlo
        # resolution once the component df are large
        cfg = make_cfg(k_values=(32,), nu_values=(500.0,), replicates=20_000)
        cell = run_grid(cfg)[0]
        tol = 4 * cell.sd_corr / math.sqrt(cfg.replicates)
        assert abs(cell.mean_corr - cell.expected) < tol

    def test_random_weights_shift_kish_ratio(self):
        # Normal(1, 0.3) weights: E[n_eff / K] near 1/(1 + 0.09) ~ 0.92
        cfg = make_cfg(k_values=(16,), nu_values=(5.0,), replicates=5_000,
                       weight_mode=WeightMode.RANDOM_NORMAL)
        cell = run_grid(cfg)[0]
        assert 0.91 <= cell.ratio_kish_k <= 0.93

    def test_all_ratios_converge_under_random_weights_at_large_dof(self):
        # at nu=500 the weight design effect dominates all three columns
        cfg = make_cfg(k_values=(16,), nu_values=(500.0,), replicates=5_000,
                       weight_mode=WeightMode.RANDOM_NORMAL)
        cell = run_grid(cfg)[0]
        for ratio in (cell.ratio_kish_k, cell.ratio_satt, cell.ratio_corr):
            assert ratio == pytest.approx(0.92, abs=0.01)

    def test_weight_rejections_are_counted(self):
        cfg = make_cfg(k_values=(16,), nu_values=(1.0,), replicates=50_000,
                       weight_mode=WeightMode.RANDOM_NORMAL)
        result = run_grid_detailed(cfg)
        # P(w <= 0) ~ 4.3e-4 per draw over 800k draws
        assert 200 < result.weight_rejections < 500

    def test_fixed_weights_reuse_one_draw(self):
        cfg = make_cfg(k_values=(8,), nu_values=(5.0,), replicates=9_000,
                       weight_mode=WeightMode.RANDOM_NORMAL, fix_weights=True,
                       block_size=2_000)
        cell = run_grid(cfg)[0]
        # a single weight vector almost surely has n_eff strictly below K
        assert cell.mean_kish < 8.0
        assert cell.ratio_kish_k == pytest.approx(cell.mean_kish / 8.0, rel=1e-12)


class TestConfigValidation:
    def test_values_are_sorted_and_deduplicated(self):
        cfg = make_cfg(k_values=(4, 2, 4), nu_values=(8.0, 1.0, 8.0))
        assert cfg.k_values == (2, 4)
        assert cfg.nu_values == (1.0, 8.0)

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(k_values=()),
            dict(k_values=(0,)),
            dict(nu_values=(0.0,)),
            dict(nu_values=(-1.0,)),
            dict(replicates=0),
            dict(weight_sd=-0.1),
            dict(sigma_sq=0.0),
            dict(seed=-1),
            dict(seed=2**64),
            dict(block_size=0),
        ],
    )
    def test_invalid_configs(self, kwargs):
        with pytest.raises(ValueError):
            make_cfg(**kwargs)

    def test_weight_mode_coercion(self):
        assert make_cfg(weight_mode="random").weight_mode is WeightMode.RANDOM_NORMAL

    def test_block_partition(self):
        assert _block_sizes(make_cfg(replicates=25_000, block_size=10_000)) == [
            10_000, 10_000, 5_000,
        ]
        assert _block_sizes(make_cfg(replicates=10, block_size=10_000)) == [10]

    def test_thread_validation(self):
        with pytest.raises(ValueError):
            run_grid(make_cfg(replicates=10), threads=0)
