"""Experiment runners behind the command line commands.

Every runner takes a RunConfig, writes its output file plus a manifest,
and returns what it wrote. The outer Monte Carlo loops run in a pool of
WORKERS processes; each sample draws from its own seed stream so results
do not depend on the pool size.
"""
import logging

import numpy as np
import pandas as pd

from .bandwidth import estimate_ell_opt, imse_experiment
from .datagen import simulate
from .exceptions import ConfigurationError
from .inference import bandwidth_phi, changepoint_test, quantile_mse_experiment
from .models import CopulaFamily, CopulaSpec, DataModel, KernelRole, ModelKind, MultiplierMethod
from .parallel import derive_seed, parallel_map
from .serializers import (
    BandwidthEstimateSerializer, BootstrapResultSerializer, read_data_matrix, write_data_matrix,
    write_manifest, write_table,
)

logger = logging.getLogger('copula_multiplier')


def copula_from_config(config, theta=None):
    family = config.get_setting('COPULA')
    if family == CopulaFamily.INDEPENDENCE.value:
        return CopulaSpec.parse(family)
    return CopulaSpec.parse(family, config.get_setting('THETA') if theta is None else theta)


def model_from_config(config, n=None, theta=None):
    """DataModel described by MODEL, COPULA, THETA, THETA_AFTER, BREAK_AT and N."""

    theta_after = config.get_setting('THETA_AFTER')
    copula_after = None

    if theta_after is not None:
        if config.get_setting('COPULA') == CopulaFamily.INDEPENDENCE.value:
            raise ConfigurationError('THETA_AFTER needs a parametric copula')
        copula_after = copula_from_config(config, theta_after)

    return DataModel(
        kind=ModelKind(config.get_setting('MODEL')),
        copula=copula_from_config(config, theta),
        n=config.get_setting('N') if n is None else n,
        copula_after=copula_after,
        break_at=config.get_setting('BREAK_AT'),
    )


def run_cpd_test(config, data_path, output_path):
    """Change-point test on a data file; prints the report, writes it with its manifest and returns it as a dict."""

    data = read_data_matrix(data_path)
    logger.info(f'cpd-test on {data_path}: n={data.n}, d={data.d}')

    result, (s_grid, points, surface) = changepoint_test(data, config, return_surface=True)
    report = BootstrapResultSerializer(result).data

    print(f'statistic\t{report["statistic"]:.10g}')
    print(f'ell\t{report["ell"]}')
    print(f'M\t{report["M"]}')
    print(f'p_value\t{report["p_value"]:.10g}')

    row = {key: value for key, value in report.items() if key != 'quantiles'}
    row.update({f'q{p}': value for p, value in report['quantiles'].items()})
    write_table(output_path, [row])

    extra = {'data': str(data_path)}

    if config.get_setting('DUMP_SURFACES'):
        extra['surface'] = dump_surface(f'{output_path}.surface.tsv', s_grid, points, surface)

    write_manifest(output_path, config, extra)

    return report


def dump_surface(path, s_grid, points, surface):
    """Observed D_n surface in long form: s, u1..ud, D."""

    s_column = np.repeat(np.asarray(s_grid, dtype=np.float64), points.shape[0])
    columns = {'s': s_column}
    for j in range(points.shape[1]):
        columns[f'u{j + 1}'] = np.tile(points[:, j], len(s_grid))
    columns['D'] = surface.ravel()

    write_table(path, pd.DataFrame(columns))
    return path


def _table1_estimate(task):
    model, phis, g, psi, seed = task

    data = simulate(model, seed)
    return [BandwidthEstimateSerializer(estimate_ell_opt(data, phi, g, psi)).data for phi in phis]


def run_table1(config, output_path):
    """Mean and standard deviation of the plug-in bandwidth over SEEDS samples per (theta, n, phi)."""

    phis = [phi.with_role(KernelRole.COVARIANCE_PHI) for phi in config.get_setting('PHI_KERNELS')]
    seeds = config.get_setting('SEEDS')
    workers = config.get_setting('WORKERS')
    root = config.get_setting('SEED')

    rows = []
    for t, theta in enumerate(config.get_setting('THETAS')):
        for n in config.get_setting('NS'):
            model = model_from_config(config, n=n, theta=theta)
            logger.info(f'table1: {model.scenario}, n={n}, {seeds} samples')

            tasks = [(model, phis, config.get_setting('GRID_SIZE'), config.get_setting('PSI'),
                      derive_seed(root, t, n, r)) for r in range(seeds)]
            estimates = parallel_map(_table1_estimate, tasks, workers)

            for position, phi in enumerate(phis):
                raw = np.array([sample[position]['ell_raw'] for sample in estimates])
                rounded = np.array([sample[position]['ell_opt'] for sample in estimates])
                rows.append({
                    'theta': theta,
                    'n': n,
                    'kernel': phi.name,
                    'mean': float(raw.mean()),
                    'std': float(raw.std(ddof=1)) if seeds > 1 else 0.0,
                    'mean_rounded': float(rounded.mean()),
                    'seeds': seeds,
                })

    table = pd.DataFrame(rows, columns=['theta', 'n', 'kernel', 'mean', 'std', 'mean_rounded', 'seeds'])
    write_table(output_path, table)
    write_manifest(output_path, config)

    return table


def run_sweeps(config, output_path, which='mse-sweep'):
    """Plot data of quantile MSE (mse-sweep) or multiplier covariance IMSE (imse-sweep) against ell."""

    model = model_from_config(config)
    workers = config.get_setting('WORKERS')

    if which == 'mse-sweep':
        policy = list(config.get_setting('ELL_LIST')) + ['auto']
        table = quantile_mse_experiment(model, config, policy, workers=workers)

    elif which == 'imse-sweep':
        table = imse_experiment(
            model,
            bandwidth_phi(config),
            config.get_setting('ELL_LIST'),
            n=model.n,
            M=config.get_setting('M'),
            mc_reps=config.get_setting('SEEDS'),
            g=config.get_setting('GRID_SIZE'),
            reference_reps=config.get_setting('REFERENCE_REPS'),
            reference_n=config.get_setting('REFERENCE_N'),
            seed=config.get_setting('SEED'),
            workers=workers,
            method=MultiplierMethod(config.get_setting('MULT_METHOD')),
        )

    else:
        raise ConfigurationError(f'unknown sweep {which!r}')

    write_table(output_path, table)
    write_manifest(output_path, config)

    return table


def run_quantile_mse(config, output_path):
    """Quantile bias and MSE at the configured bandwidth ELL (a number or auto)."""

    model = model_from_config(config)
    table = quantile_mse_experiment(model, config, [config.get_setting('ELL')], workers=config.get_setting('WORKERS'))

    write_table(output_path, table)
    write_manifest(output_path, config)

    return table


def run_simulate(config, output_path):
    """Simulate one sample of the configured model and write it as comma separated text."""

    model = model_from_config(config)
    data = simulate(model, config.get_setting('SEED'))

    write_data_matrix(output_path, data)
    write_manifest(output_path, config, {'scenario': model.scenario})

    logger.info(f'simulated {model.scenario}, n={data.n} into {output_path}')

    return data
