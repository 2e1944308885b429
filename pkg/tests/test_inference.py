import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import stats

from copula_multiplier import bandwidth, inference
from copula_multiplier.bootstrap import MultiplierBootstrap, changepoint_surface
from copula_multiplier.config import RunConfig
from copula_multiplier.copula_process import empirical_reference
from copula_multiplier.datagen import copula_reference, simulate
from copula_multiplier.exceptions import ConfigurationError, DataFormatError
from copula_multiplier.models import (
    CopulaSpec, DataModel, EvalGrid, KernelFamily, KernelRole, KernelSpec, ModelKind, MultiplierBatch,
    MultiplierConfig, MultiplierMethod, PartialDerivEstimatorSpec, StatisticKind,
)
from copula_multiplier.multipliers import generate

PARZEN_PHI = KernelSpec(KernelFamily.PARZEN, KernelRole.COVARIANCE_PHI)
INDEPENDENCE = CopulaSpec.parse('independence')


def small_test_config(**overrides):
    values = {'ELL': 3, 'M': 50, 'U_GRID_PER_AXIS': 4, 'SEED': 5}
    values.update(overrides)
    return RunConfig('cpd-test', values)


def batch_for(n, M, seed):
    return generate(MultiplierConfig(MultiplierMethod.COVARIANCE_MATRIX, PARZEN_PHI, 3, n, M, seed))


class TestPValue:

    def test_fraction_at_least_as_large(self):
        assert inference.p_value(2.5, [1, 2, 3, 4]) == 0.5
        assert inference.p_value(3.0, [1, 2, 3, 4]) == 0.5
        assert inference.p_value(10.0, [1, 2, 3, 4]) == 0.0

    def test_monotone_in_the_statistic(self):
        replicates = np.random.default_rng(0).exponential(size=300)
        values = [inference.p_value(w, replicates) for w in np.linspace(0, 5, 40)]

        assert all(a >= b for a, b in zip(values, values[1:]))

    def test_quantile_order_statistic(self):
        replicates = np.arange(1, 101, dtype=float)[::-1]

        assert inference.bootstrap_quantile(replicates, 0.95) == 95.0
        assert inference.bootstrap_quantile(replicates, 0.005) == 1.0

        with pytest.raises(ValueError):
            inference.bootstrap_quantile(replicates, 1.0)


class TestStatistics:

    def test_reference_of_the_sample_gives_zero(self):
        data = np.random.default_rng(1).normal(size=(50, 2))
        grid = EvalGrid.lattice(5, 2)

        assert inference.cvm_statistic(data, grid, empirical_reference(data)) == pytest.approx(0.0)
        assert inference.ks_statistic(data, grid, empirical_reference(data)) == pytest.approx(0.0)

    def test_ks_dominates_cvm(self):
        data = np.random.default_rng(2).normal(size=(60, 2))
        grid = EvalGrid.lattice(5, 2)
        reference = copula_reference(INDEPENDENCE)

        cvm = inference.cvm_statistic(data, grid, reference)
        ks = inference.ks_statistic(data, grid, reference)

        assert 0.0 < cvm <= ks ** 2

    def test_cvm_by_hand(self):
        data = np.array([[1.0, 2.0], [2.0, 1.0], [3.0, 4.0], [4.0, 3.0]])
        points = np.array([[0.5, 0.5], [0.75, 0.75]])
        reference = copula_reference(INDEPENDENCE)

        # C_n(0.5, 0.5) = 2/4 and C_n(0.75, 0.75) = 2/4
        expected = np.mean([(2 * (0.5 - 0.25)) ** 2, (2 * (0.5 - 0.5625)) ** 2])
        assert inference.cvm_statistic(data, points, reference) == pytest.approx(expected)

    def test_changepoint_statistic(self):
        data = np.random.default_rng(3).normal(size=(40, 2))
        grid = EvalGrid.lattice(4, 2)
        s_grid = inference.default_s_grid(40)
        surface = changepoint_surface(data, s_grid, grid.points)

        assert inference.changepoint_statistic(data, s_grid, grid) == pytest.approx(np.abs(surface).max())
        assert inference.changepoint_statistic(data, s_grid, grid, 'changepoint-cvm') == pytest.approx(
            np.mean(surface ** 2))

    def test_default_s_grid(self):
        assert inference.default_s_grid(6) == [2 / 6, 3 / 6, 4 / 6]


class TestReplicateStatistics:

    def test_zero_multipliers(self):
        data = np.random.default_rng(4).normal(size=(30, 2))
        config = MultiplierConfig(MultiplierMethod.COVARIANCE_MATRIX, PARZEN_PHI, 1, 30, 3, 0)
        batch = MultiplierBatch(xi=np.zeros((3, 30)), config=config)

        for kind in StatisticKind:
            values = inference.replicate_statistics(data, batch, None, kind, EvalGrid.lattice(3, 2))
            assert_allclose(values, 0.0)

    def test_scaling(self):
        data = np.random.default_rng(5).normal(size=(40, 2))
        batch = batch_for(40, 6, 6)
        scaled = MultiplierBatch(xi=-2.0 * batch.xi, config=batch.config)
        grid = EvalGrid.lattice(3, 2)

        ks = inference.replicate_statistics(data, batch, None, 'ks', grid)
        assert_allclose(inference.replicate_statistics(data, scaled, None, 'ks', grid), 2.0 * ks)

        cvm = inference.replicate_statistics(data, batch, None, 'changepoint-cvm', grid)
        assert_allclose(inference.replicate_statistics(data, scaled, None, 'changepoint-cvm', grid), 4.0 * cvm)

    def test_single_replicate_matches_engine(self):
        data = np.random.default_rng(7).normal(size=(40, 2))
        batch = batch_for(40, 4, 8)
        grid = EvalGrid.lattice(3, 2)
        engine = MultiplierBootstrap(data, grid.points, PartialDerivEstimatorSpec())

        values = inference.replicate_statistics(data, batch, None, 'cvm', grid, engine=engine)
        assert values[2] == pytest.approx(np.mean(engine.chat(batch.xi[2:3], 0, 1) ** 2))


class TestBandwidthPhi:

    @pytest.mark.parametrize('kappa, phi', [('parzen', 'usum:8'), ('bartlett', 'parzen'), ('truncated', 'bartlett')])
    def test_moving_average_uses_the_induced_covariance(self, kappa, phi):
        config = RunConfig(values={'MULT_METHOD': 'moving-average', 'MULT_KERNEL': kappa})
        assert inference.bandwidth_phi(config).name == phi

    @pytest.mark.parametrize('kernel', ['parzen', 'usum:8', 'bartlett'])
    def test_covariance_matrix_uses_its_kernel(self, kernel):
        config = RunConfig(values={'MULT_METHOD': 'covariance-matrix', 'MULT_KERNEL': kernel})
        phi = inference.bandwidth_phi(config)

        assert phi.name == kernel
        assert phi.role is KernelRole.COVARIANCE_PHI

    def test_matching_phi_kernel_is_accepted(self):
        config = RunConfig(values={'MULT_KERNEL': 'bartlett', 'PHI_KERNEL': 'usum:4'})
        assert inference.bandwidth_phi(config).name == 'parzen'

    @pytest.mark.parametrize('method', ['moving-average', 'covariance-matrix'])
    def test_mismatched_phi_kernel(self, method):
        config = RunConfig(values={'MULT_METHOD': method, 'MULT_KERNEL': 'parzen', 'PHI_KERNEL': 'usum:6'})

        with pytest.raises(ConfigurationError):
            inference.bandwidth_phi(config)

    def test_flat_top_weights_need_an_explicit_bandwidth(self):
        data = simulate(DataModel(ModelKind.IID, INDEPENDENCE, 40), 16)

        with pytest.raises(ConfigurationError):
            inference.changepoint_test(data, small_test_config(ELL='auto', MULT_KERNEL='flattop:0.14'))
        assert inference.changepoint_test(data, small_test_config(MULT_KERNEL='flattop:0.14')).meta['ell'] == 3

    @pytest.mark.parametrize('method, kernel, phi', [
        ('moving-average', 'parzen', 'usum:8'),
        ('covariance-matrix', 'parzen', 'parzen'),
    ])
    def test_automatic_bandwidth_follows_the_multipliers(self, method, kernel, phi):
        data = simulate(DataModel(ModelKind.AR1, CopulaSpec.parse('gumbel', 1.5), 80), 17)
        result = inference.changepoint_test(data, small_test_config(ELL='auto', MULT_METHOD=method, MULT_KERNEL=kernel))

        expected = bandwidth.estimate_ell_opt(data, KernelSpec.parse(phi, KernelRole.COVARIANCE_PHI))

        assert result.meta['phi'] == phi
        assert result.meta['ell_raw'] == pytest.approx(expected.ell_raw)


class TestChangepointTest:

    def test_result(self):
        data = simulate(DataModel(ModelKind.IID, CopulaSpec.parse('clayton', 1.0), 40), 9)
        result = inference.changepoint_test(data, small_test_config())

        assert 0.0 <= result.p_value <= 1.0
        assert result.M == 50
        assert (result.p_value * 50) == pytest.approx(round(result.p_value * 50))
        assert result.meta['ell'] == 3
        assert result.meta['grid_points'] == 16
        assert set(result.quantiles) == {0.25, 0.5, 0.75, 0.9, 0.95, 0.99}
        assert result.statistic > 0.0

    def test_reproducible(self):
        data = simulate(DataModel(ModelKind.IID, CopulaSpec.parse('clayton', 1.0), 40), 9)

        first = inference.changepoint_test(data, small_test_config())
        second = inference.changepoint_test(data, small_test_config())

        assert first.p_value == second.p_value
        assert_allclose(first.replicates, second.replicates)

    def test_automatic_bandwidth(self):
        data = simulate(DataModel(ModelKind.AR1, CopulaSpec.parse('gumbel', 1.5), 60), 10)
        result = inference.changepoint_test(data, small_test_config(ELL='auto'))

        assert result.meta['ell'] % 2 == 1
        assert result.meta['L'] >= 1
        assert 'ell_raw' in result.meta

    def test_covariance_matrix_construction(self):
        data = simulate(DataModel(ModelKind.IID, CopulaSpec.parse('clayton', 1.0), 30), 11)
        config = small_test_config(MULT_METHOD='covariance-matrix', ELL=4, CPD_STATISTIC='changepoint-cvm')
        result = inference.changepoint_test(data, config)

        assert result.meta['method'] == 'covariance-matrix'
        assert result.meta['statistic'] == 'changepoint-cvm'

    def test_return_surface(self):
        data = simulate(DataModel(ModelKind.IID, INDEPENDENCE, 30), 12)
        result, (s_grid, points, surface) = inference.changepoint_test(data, small_test_config(), return_surface=True)

        assert surface.shape == (len(s_grid), points.shape[0])
        assert result.statistic == pytest.approx(np.abs(surface).max())

    def test_too_short(self):
        with pytest.raises(DataFormatError):
            inference.changepoint_test(np.random.default_rng(13).normal(size=(19, 2)), small_test_config())

    def test_even_moving_average_bandwidth(self):
        data = np.random.default_rng(14).normal(size=(30, 2))
        with pytest.raises(ConfigurationError):
            inference.changepoint_test(data, small_test_config(ELL=4))

    @pytest.mark.slow
    def test_duplicated_halves_look_homogeneous(self):
        half = simulate(DataModel(ModelKind.IID, CopulaSpec.parse('clayton', 1.0), 100), 15).values
        config = small_test_config(M=500, ELL=5, U_GRID_PER_AXIS=10)

        assert inference.changepoint_test(np.vstack([half, half]), config).p_value > 0.5

    @pytest.mark.slow
    def test_level_and_rank_uniformity(self):
        model = DataModel(ModelKind.IID, CopulaSpec.parse('clayton', 1.0), 200)

        p_values, ranks = [], []
        for seed in range(500):
            config = small_test_config(M=500, ELL='auto', U_GRID_PER_AXIS=10, SEED=1000 + seed)
            result = inference.changepoint_test(simulate(model, seed), config)

            p_values.append(result.p_value)
            ranks.append(np.sum(result.replicates < result.statistic))

        assert 0.025 <= np.mean(np.array(p_values) <= 0.05) <= 0.085

        counts, _ = np.histogram(np.array(ranks) / 501, bins=10, range=(0.0, 1.0))
        assert stats.chisquare(counts).pvalue > 0.01

    @pytest.mark.slow
    def test_power_against_a_copula_break(self):
        model = DataModel(ModelKind.IID, CopulaSpec.parse('clayton', 1.0), 400,
                          copula_after=CopulaSpec.parse('clayton', 10.0))

        rejected = []
        for seed in range(200):
            config = small_test_config(M=500, ELL='auto', U_GRID_PER_AXIS=10, SEED=2000 + seed)
            rejected.append(inference.changepoint_test(simulate(model, seed), config).p_value <= 0.05)

        assert np.mean(rejected) >= 0.8


class TestQuantileExperiment:

    def test_table(self):
        model = DataModel(ModelKind.NAR, CopulaSpec.parse('clayton', 1.0), 40)
        config = RunConfig('quantile-mse', {
            'SEEDS': 3, 'M': 50, 'U_GRID_PER_AXIS': 4, 'REFERENCE_REPS': 50, 'REFERENCE_N': 50,
            'P_SET': '0.5,0.9', 'MULT_METHOD': 'covariance-matrix',
        })

        table = inference.quantile_mse_experiment(model, config, [1, 3, 'auto'])

        assert list(table.columns) == ['scenario', 'n', 'ell', 'kernel', 'p', 'bias', 'mse']
        assert len(table) == 6
        assert (table['mse'] >= 0).all()
        assert (table['mse'] >= table['bias'] ** 2 - 1e-12).all()

    def test_reference_quantiles_are_ordered(self):
        model = DataModel(ModelKind.IID, CopulaSpec.parse('gumbel', 1.5), 50)
        points = EvalGrid.lattice(4, 2).points

        reference = inference.reference_quantiles(model, points, [0.25, 0.5, 0.9], StatisticKind.CVM, 100, seed=1)

        assert reference[0.25] <= reference[0.5] <= reference[0.9]

    def test_given_reference_is_used(self):
        model = DataModel(ModelKind.IID, INDEPENDENCE, 40)
        config = RunConfig('quantile-mse', {'SEEDS': 2, 'M': 30, 'U_GRID_PER_AXIS': 3, 'P_SET': '0.5', 'ELL': 1})

        table = inference.quantile_mse_experiment(model, config, [1], reference={0.5: 1e6})
        assert table['bias'].iloc[0] < -1e5
