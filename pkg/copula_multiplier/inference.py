"""Test statistics, multiplier p-values and quantile estimation."""
from dataclasses import replace
import logging
import math

import numpy as np
import pandas as pd

from . import kernels
from .bandwidth import estimate_ell_opt
from .bootstrap import MultiplierBootstrap, changepoint_surface, replicate_meta
from .config import RunConfig
from .copula_process import empirical_copula, ranks, seq_copula_process_surface
from .datagen import copula_cdf, simulate
from .exceptions import ConfigurationError, DataFormatError
from .models import (
    BaseLaw, BootstrapResult, EvalGrid, KernelRole, ModelKind, MultiplierConfig, MultiplierMethod,
    PartialDerivativeVariant, PartialDerivEstimatorSpec, StatisticKind, as_data_matrix,
)
from .multipliers import generate
from .parallel import derive_seed, parallel_map

logger = logging.getLogger('copula_multiplier')

MIN_CHANGEPOINT_N = 20


def p_value(statistic, replicates):
    """Fraction of replicates at least as large as the observed statistic."""
    replicates = np.asarray(replicates, dtype=np.float64)
    return float(np.mean(replicates >= statistic))


def bootstrap_quantile(replicates, p):
    """Order statistic of rank floor(pM) among the M replicates (rank 1 at least)."""

    if not 0.0 < p < 1.0:
        raise ValueError(f'quantile order must lie in (0, 1), got {p}')

    ordered = np.sort(np.asarray(replicates, dtype=np.float64))
    rank = max(1, int(math.floor(p * ordered.shape[0] + 1e-9)))

    return float(ordered[rank - 1])


def _points(u_grid):
    return np.atleast_2d(np.asarray(getattr(u_grid, 'points', u_grid), dtype=np.float64))


def cvm_statistic(data, u_grid, c_ref):
    """Grid average of the squared empirical copula process C_n(0, 1, u)."""
    process = seq_copula_process_surface(data, 0.0, 1.0, _points(u_grid), c_ref)
    return float(np.mean(process ** 2))


def ks_statistic(data, u_grid, c_ref):
    """Grid maximum of |C_n(0, 1, u)|."""
    process = seq_copula_process_surface(data, 0.0, 1.0, _points(u_grid), c_ref)
    return float(np.max(np.abs(process)))


def default_s_grid(n):
    """Break candidates k / n for k = 2..n-2."""
    return [k / n for k in range(2, n - 1)]


def _surface_statistic(surface, kind):
    if kind is StatisticKind.CHANGEPOINT_CVM:
        return float(np.mean(surface ** 2))
    return float(np.max(np.abs(surface)))


def changepoint_statistic(data, s_grid, u_grid, kind=StatisticKind.CHANGEPOINT_KS):
    """Observed W_n: sup of |D_n|, or its mean square, over s_grid x u_grid."""
    return _surface_statistic(changepoint_surface(data, s_grid, _points(u_grid)), StatisticKind(kind))


def replicate_statistics(data, batch, pd_spec, kind, u_grid, s_grid=None, engine=None):
    """The functional of kind applied to each replicate process; returns M values."""

    kind = StatisticKind(kind)
    engine = engine or MultiplierBootstrap(data, _points(u_grid), pd_spec)

    if kind.is_changepoint:
        if s_grid is None:
            s_grid = default_s_grid(engine.n)
        sup, mean_square = engine.changepoint_statistics(batch, s_grid)
        return sup if kind is StatisticKind.CHANGEPOINT_KS else mean_square

    process = engine.chat(batch, 0.0, 1.0)

    if kind is StatisticKind.KS:
        return np.max(np.abs(process), axis=1)
    return np.mean(process ** 2, axis=1)


def partial_derivative_spec(config):
    return PartialDerivEstimatorSpec(PartialDerivativeVariant(config.get_setting('PD_VARIANT')))


def bandwidth_phi(config):
    """Covariance function of the configured multipliers.

    MULT_KERNEL itself for the covariance matrix construction, the
    self-convolution of the weights for moving averages. An explicit
    PHI_KERNEL must agree with it.
    """

    method = MultiplierMethod(config.get_setting('MULT_METHOD'))
    kernel = config.get_setting('MULT_KERNEL')

    if method is MultiplierMethod.COVARIANCE_MATRIX:
        phi = kernel.with_role(KernelRole.COVARIANCE_PHI)
    else:
        phi = kernels.induced_covariance(kernel)

    requested = config.get_setting('PHI_KERNEL')
    if requested is not None and not kernels.same_function(requested, phi):
        raise ConfigurationError(f'PHI_KERNEL={requested.name} does not match the covariance function {phi.name} '
                                 f'of {method.value} multipliers with kernel {kernel.name}')

    return phi


def resolve_ell(data, config):
    """Bandwidth of the run, with the plug-in estimate when ELL is auto."""

    ell = config.get_setting('ELL')
    method = MultiplierMethod(config.get_setting('MULT_METHOD'))

    if ell != 'auto':
        return ell, None

    estimate = estimate_ell_opt(data, bandwidth_phi(config), config.get_setting('GRID_SIZE'),
                                config.get_setting('PSI'))

    if method is MultiplierMethod.MOVING_AVERAGE:
        return estimate.for_moving_average(), estimate
    return estimate.ell_opt, estimate


def multiplier_config(config, n, ell, M=None, seed=None):
    method = MultiplierMethod(config.get_setting('MULT_METHOD'))
    kernel = config.get_setting('MULT_KERNEL')

    if method is MultiplierMethod.COVARIANCE_MATRIX:
        kernel = kernel.with_role(KernelRole.COVARIANCE_PHI)

    return MultiplierConfig(
        method=method,
        kernel=kernel,
        ell=int(ell),
        n=n,
        M=M or config.get_setting('M'),
        seed=config.get_setting('SEED') if seed is None else seed,
        base_law=BaseLaw(config.get_setting('BASE_LAW')),
    )


def changepoint_test(data, config, return_surface=False):
    """Multiplier change-point test for the copula of the data.

    The observed statistic is a functional of D_n over the break candidates
    and the u lattice; its p-value is the fraction of replicate statistics
    at least as large.
    """

    data = as_data_matrix(data)

    if data.n < MIN_CHANGEPOINT_N:
        raise DataFormatError(f'the change-point test needs at least {MIN_CHANGEPOINT_N} observations, got {data.n}')

    kind = StatisticKind(config.get_setting('CPD_STATISTIC'))
    ell, estimate = resolve_ell(data, config)
    batch = generate(multiplier_config(config, data.n, ell))

    grid = EvalGrid.lattice(config.get_setting('U_GRID_PER_AXIS'), data.d, open=True)
    s_grid = default_s_grid(data.n)
    pd_spec = partial_derivative_spec(config)

    surface = changepoint_surface(data, s_grid, grid.points)
    statistic = _surface_statistic(surface, kind)

    replicates = replicate_statistics(data, batch, pd_spec, kind, grid, s_grid)

    meta = replicate_meta(batch, pd_spec)
    meta.update(n=data.n, d=data.d, M=batch.M, statistic=kind.value, grid_points=grid.size)
    if estimate is not None:
        meta.update(L=estimate.L_used, ell_raw=estimate.ell_raw, phi=bandwidth_phi(config).name)

    result = BootstrapResult(
        statistic=statistic,
        replicates=replicates,
        p_value=p_value(statistic, replicates),
        quantiles={p: bootstrap_quantile(replicates, p) for p in config.get_setting('P_SET')},
        meta=meta,
    )

    logger.info(f'change-point test: W={statistic:.6g}, ell={ell}, M={batch.M}, p-value={result.p_value:.4f}')

    if return_surface:
        return result, (s_grid, grid.points, surface)
    return result


def _reference_draw(task):
    model, seed, points = task
    return empirical_copula(ranks(simulate(model, seed)), points)


def reference_quantiles(model, points, p_set, statistic, reps, seed, workers=1):
    """Quantiles of the statistic of the model from reps oracle samples.

    The centering copula is the innovation copula for i.i.d. data and the
    average empirical copula over the oracle samples otherwise.
    """

    tasks = [(model, derive_seed(seed, r), points) for r in range(reps)]
    copulas = np.array(parallel_map(_reference_draw, tasks, workers))

    if model.kind is ModelKind.IID and model.copula_after is None:
        centre = copula_cdf(model.copula, points)
    else:
        centre = copulas.mean(axis=0)

    process = math.sqrt(model.n) * (copulas - centre)

    if statistic is StatisticKind.KS:
        values = np.max(np.abs(process), axis=1)
    else:
        values = np.mean(process ** 2, axis=1)

    return {p: float(np.quantile(values, p)) for p in p_set}


def _quantile_replicate(task):
    model, config_values, ell_policy, points, p_set, statistic, seed = task

    config = RunConfig(values=config_values)

    data = simulate(model, derive_seed(seed, 0))
    engine = MultiplierBootstrap(data, points, partial_derivative_spec(config))
    multiplier_seed = derive_seed(seed, 1)

    estimates = {}
    for ell in ell_policy:
        if ell == 'auto':
            auto = RunConfig(values=dict(config_values, ELL='auto'))
            used, _ = resolve_ell(data, auto)
        else:
            used = ell

        batch = generate(multiplier_config(config, model.n, used, seed=multiplier_seed))
        replicates = replicate_statistics(data, batch, None, statistic, points, engine=engine)
        estimates[ell] = {p: bootstrap_quantile(replicates, p) for p in p_set}

    return estimates


def quantile_mse_experiment(model, config, ell_policy, reference=None, workers=1):
    """Bias and mean squared error of multiplier quantile estimates, per bandwidth and order.

    model fixes the data generating process and n; config supplies M,
    SEEDS (the number N of data sets), P_SET, STATISTIC, the multiplier
    settings and the reference run sizes. ell_policy lists bandwidths and
    may contain 'auto'. Returns a DataFrame with columns scenario, n, ell,
    kernel, p, bias, mse.
    """

    statistic = StatisticKind(config.get_setting('STATISTIC'))
    p_set = config.get_setting('P_SET')
    seed = config.get_setting('SEED')
    points = EvalGrid.lattice(config.get_setting('U_GRID_PER_AXIS'), 2, open=True).points

    if reference is None:
        reference_model = replace(model, n=config.get_setting('REFERENCE_N'))
        reference = reference_quantiles(reference_model, points, p_set, statistic,
                                        config.get_setting('REFERENCE_REPS'), derive_seed(seed, 0), workers)

    logger.info(f'quantile experiment: {model.scenario}, n={model.n}, {len(ell_policy)} bandwidths, '
                f'{config.get_setting("SEEDS")} samples')

    values = config.resolved()
    tasks = [(model, values, tuple(ell_policy), points, tuple(p_set), statistic, derive_seed(seed, 1, r))
             for r in range(config.get_setting('SEEDS'))]
    results = parallel_map(_quantile_replicate, tasks, workers)

    kernel = config.get_setting('MULT_KERNEL').name
    rows = []
    for ell in ell_policy:
        for p in p_set:
            errors = np.array([estimates[ell][p] - reference[p] for estimates in results])
            rows.append({
                'scenario': model.scenario,
                'n': model.n,
                'ell': ell,
                'kernel': kernel,
                'p': p,
                'bias': float(errors.mean()),
                'mse': float(np.mean(errors ** 2)),
            })

    return pd.DataFrame(rows, columns=['scenario', 'n', 'ell', 'kernel', 'p', 'bias', 'mse'])
