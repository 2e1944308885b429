import json

import pandas as pd
import pytest

from copula_multiplier import cli, harness
from copula_multiplier.config import RunConfig
from copula_multiplier.exceptions import ConfigurationError


@pytest.fixture
def sample_path(tmp_path):
    path = tmp_path / 'sample.csv'
    assert cli.main(['simulate', '--model', 'ar1', '--copula', 'clayton', '--theta', '2', '--n', '60',
                     '--seed', '4', '--out', str(path)]) == 0
    return path


class TestSimulate:

    def test_writes_sample_and_manifest(self, sample_path):
        frame = pd.read_csv(sample_path, header=None)
        manifest = json.loads((sample_path.parent / 'sample.csv.manifest.json').read_text())

        assert frame.shape == (60, 2)
        assert manifest['command'] == 'simulate'
        assert manifest['scenario'] == 'ar1-clayton(2)'
        assert manifest['settings']['N'] == '60'

    def test_reproducible(self, sample_path, tmp_path):
        again = tmp_path / 'again.csv'
        cli.main(['simulate', '--model', 'ar1', '--copula', 'clayton', '--theta', '2', '--n', '60',
                  '--seed', '4', '--out', str(again)])

        assert again.read_bytes() == sample_path.read_bytes()


class TestCpdTest:

    def test_report(self, sample_path, tmp_path, capsys):
        out = tmp_path / 'report.tsv'
        code = cli.main(['cpd-test', str(sample_path), '--M', '40', '--ell', '3', '--set', 'U_GRID_PER_AXIS=4',
                         '--dump-surfaces', '--out', str(out)])

        printed = dict(line.split('\t') for line in capsys.readouterr().out.splitlines())
        table = pd.read_csv(out, sep='\t')
        manifest = json.loads((tmp_path / 'report.tsv.manifest.json').read_text())
        surface = pd.read_csv(tmp_path / 'report.tsv.surface.tsv', sep='\t')

        assert code == 0
        assert set(printed) == {'statistic', 'ell', 'M', 'p_value'}
        assert printed['M'] == '40'
        assert 0.0 <= float(printed['p_value']) <= 1.0
        assert table['ell'].iloc[0] == 3
        assert manifest['data'] == str(sample_path)
        assert list(surface.columns) == ['s', 'u1', 'u2', 'D']
        assert len(surface) == 57 * 16

    def test_settings_file_and_default_output(self, sample_path, tmp_path, monkeypatch, capsys):
        settings = tmp_path / 'run.cfg'
        RunConfig('cpd-test', {'M': 20, 'ELL': 5, 'U_GRID_PER_AXIS': 3}).to_file(settings)
        monkeypatch.chdir(tmp_path)

        assert cli.main(['cpd-test', str(sample_path), '--config', str(settings)]) == 0
        assert 'M\t20' in capsys.readouterr().out

        manifest = json.loads((tmp_path / 'cpd_test.tsv.manifest.json').read_text())
        assert manifest['command'] == 'cpd-test'
        assert manifest['settings']['M'] == '20'
        assert (tmp_path / 'cpd_test.tsv').exists()

    def test_malformed_data(self, tmp_path, capsys):
        path = tmp_path / 'broken.csv'
        path.write_text('0.1,0.2\n0.3,0.4\n0.5,oops\n')

        assert cli.main(['cpd-test', str(path)]) == 2
        assert 'row 3' in capsys.readouterr().err

    def test_missing_file(self, tmp_path):
        assert cli.main(['cpd-test', str(tmp_path / 'absent.csv')]) == 2

    def test_invalid_setting(self, sample_path, capsys):
        assert cli.main(['cpd-test', str(sample_path), '--ell', '4']) == 2
        assert 'odd' in capsys.readouterr().err

    def test_malformed_override(self, sample_path):
        assert cli.main(['cpd-test', str(sample_path), '--set', 'M']) == 2


class TestExperiments:

    def table1_config(self, **overrides):
        values = {'THETAS': '1.5', 'NS': '50', 'SEEDS': 3, 'PHI_KERNELS': 'parzen,usum:8', 'MODEL': 'iid'}
        values.update(overrides)
        return RunConfig('table1', values)

    def test_table1(self, tmp_path):
        table = harness.run_table1(self.table1_config(), tmp_path / 'table1.tsv')

        assert list(table.columns) == ['theta', 'n', 'kernel', 'mean', 'std', 'mean_rounded', 'seeds']
        assert list(table['kernel']) == ['parzen', 'usum:8']
        assert (table['mean'] > 0).all()
        assert (tmp_path / 'table1.tsv.manifest.json').exists()

    def test_table1_does_not_depend_on_workers(self, tmp_path):
        serial = harness.run_table1(self.table1_config(), tmp_path / 'serial.tsv')
        pooled = harness.run_table1(self.table1_config(WORKERS=2), tmp_path / 'pooled.tsv')

        pd.testing.assert_frame_equal(serial, pooled)

    def test_imse_sweep(self, tmp_path):
        config = RunConfig('imse-sweep', {
            'MODEL': 'iid', 'COPULA': 'independence', 'N': 40, 'ELL_LIST': '1,3', 'M': 40, 'SEEDS': 2,
            'GRID_SIZE': 9, 'REFERENCE_REPS': 100,
        })
        table = harness.run_sweeps(config, tmp_path / 'imse.tsv', 'imse-sweep')

        assert list(table['ell']) == [1, 3]
        assert set(table['method']) == {'moving-average'}
        assert set(table['kernel']) == {'usum:8'}

    def test_imse_sweep_covariance_matrix(self, tmp_path):
        config = RunConfig('imse-sweep', {
            'MODEL': 'iid', 'COPULA': 'independence', 'N': 40, 'ELL_LIST': '2,4', 'M': 40, 'SEEDS': 2,
            'GRID_SIZE': 9, 'REFERENCE_REPS': 100, 'MULT_METHOD': 'covariance-matrix', 'MULT_KERNEL': 'parzen',
        })
        table = harness.run_sweeps(config, tmp_path / 'imse.tsv', 'imse-sweep')

        assert list(table['ell']) == [2, 4]
        assert set(table['kernel']) == {'parzen'}

    def test_imse_sweep_rejects_a_mismatched_phi(self, tmp_path):
        config = RunConfig('imse-sweep', {'MULT_METHOD': 'moving-average', 'MULT_KERNEL': 'parzen',
                                          'PHI_KERNEL': 'parzen'})
        with pytest.raises(ConfigurationError):
            harness.run_sweeps(config, tmp_path / 'imse.tsv', 'imse-sweep')

    def test_mse_sweep_adds_the_automatic_bandwidth(self, tmp_path):
        config = RunConfig('mse-sweep', {
            'MODEL': 'iid', 'N': 40, 'ELL_LIST': '1,3', 'M': 30, 'SEEDS': 2, 'U_GRID_PER_AXIS': 3,
            'REFERENCE_REPS': 50, 'REFERENCE_N': 40, 'P_SET': '0.5',
        })
        table = harness.run_sweeps(config, tmp_path / 'mse.tsv', 'mse-sweep')

        assert list(table['ell']) == [1, 3, 'auto']

    def test_quantile_mse_command(self, tmp_path):
        out = tmp_path / 'quantile.tsv'
        code = cli.main(['quantile-mse', '--model', 'iid', '--n', '40', '--ell', '3', '--M', '30', '--seeds', '2',
                         '--set', 'U_GRID_PER_AXIS=3', '--set', 'REFERENCE_REPS=50', '--set', 'REFERENCE_N=40',
                         '--out', str(out)])

        assert code == 0
        assert len(pd.read_csv(out, sep='\t')) == 6

    def test_unknown_sweep(self, tmp_path):
        with pytest.raises(ConfigurationError):
            harness.run_sweeps(RunConfig('mse-sweep'), tmp_path / 'x.tsv', 'grid-sweep')

    def test_break_needs_a_parametric_copula(self):
        with pytest.raises(ConfigurationError):
            harness.model_from_config(RunConfig('simulate', {'COPULA': 'independence', 'THETA_AFTER': 2}))

    def test_model_with_break(self):
        model = harness.model_from_config(RunConfig('simulate', {'COPULA': 'clayton', 'THETA': 1, 'THETA_AFTER': 4}))

        assert model.copula_after.theta == 4.0
        assert model.n == 200
