"""Automatic choice of the multiplier bandwidth ell.

The bandwidth minimizing the integrated mean squared error of the
multiplier covariance is (4 Gamma^2 / Delta)^(1/5) n^(1/5). Both constants
are estimated on a lattice of g points from flat-top lag-window estimates
of the long-run covariance sigma_C and of sum_k k^2 gamma(k), with the
truncation lag L chosen from the marginal autocorrelations.
"""
from dataclasses import replace
import logging
import math

import numpy as np
import pandas as pd
from scipy import linalg
from statsmodels.tsa.stattools import acf

from . import kernels
from .bootstrap import MultiplierBootstrap
from .copula_process import indicators, ranks
from .datagen import simulate, to_pseudo_uniform
from .exceptions import ConfigurationError, DegenerateVariance
from .models import (
    BandwidthEstimate, EvalGrid, KernelRole, MultiplierConfig, MultiplierMethod, as_data_matrix, odd_bandwidth,
)
from .multipliers import generate
from .parallel import derive_seed, parallel_map

logger = logging.getLogger('copula_multiplier')

PSI_FUNCTIONS = {
    'median': np.median,
    'mean': np.mean,
    'min': np.min,
    'max': np.max,
}


def round_half_up(value):
    return int(math.floor(value + 0.5))


def _centered_indicators(pobs, points):
    indicator = indicators(pobs, points).astype(np.float64)
    return indicator - indicator.mean(axis=0)


def cross_covariance(pobs, k, u, v):
    """Sample cross-covariance at lag k between 1(U_i <= u) and 1(U_{i+k} <= v)."""

    n = pobs.size
    k = int(k)
    if abs(k) >= n:
        raise ValueError(f'lag {k} must be smaller than the sample size {n} in absolute value')

    a = _centered_indicators(pobs, np.vstack([u, v]))
    left, right = a[:, 0], a[:, 1]

    if k >= 0:
        return float(left[:n - k] @ right[k:] / n)
    return float(left[-k:] @ right[:n + k] / n)


def lag_window_matrices(pobs, L, points):
    """Flat-top lag-window estimates (sigma, K) for every pair of points, as G x G matrices."""

    n = pobs.size
    L = int(L)
    if not 0 <= L <= n - 1:
        raise ValueError(f'truncation lag L={L} must lie in 0..{n - 1}')

    a = _centered_indicators(pobs, points)

    sigma = a.T @ a / n
    K = np.zeros_like(sigma)

    if L == 0:
        return sigma, K

    weights = kernels.evaluate(kernels.FLAT_TOP_LAG_WINDOW, np.arange(1, L + 1) / L)

    for k, weight in enumerate(weights, start=1):
        if weight == 0.0:
            continue

        gamma = a[:n - k].T @ a[k:] / n
        both = gamma + gamma.T

        sigma += weight * both
        K += weight * k ** 2 * both

    return sigma, K


def lag_window_estimates(pobs, L, u, v):
    """(sigma_hat(u, v), K_hat(u, v)); L = 0 keeps the lag-zero term only."""

    sigma, K = lag_window_matrices(pobs, L, np.vstack([u, v]))
    return float(sigma[0, 1]), float(K[0, 1])


def _negligible_lag(column):
    """Lag after which the sample autocorrelation of one margin looks negligible.

    Smallest m >= 1 such that the kn autocorrelations at lags m..m+kn-1 all
    lie inside +-2 sqrt(log10(n) / n), so m is the first lag of the
    insignificant run. Failing that the largest significant lag, capped at
    m_max.
    """

    n = column.shape[0]

    if np.ptp(column) == 0.0:
        logger.debug('constant margin, negligible lag set to 1')
        return 1

    kn = max(5, int(math.sqrt(math.log10(n))))
    m_max = int(math.ceil(math.sqrt(n))) + kn
    nlags = min(m_max + kn, n - 1)

    rho = np.abs(acf(column, nlags=nlags, fft=False))
    band = 2.0 * math.sqrt(math.log10(n) / n)
    insignificant = rho < band

    for m in range(1, nlags - kn + 2):
        if np.all(insignificant[m:m + kn]):
            return m

    # every window of kn lags holds a significant one
    significant = np.flatnonzero(~insignificant[1:]) + 1
    return int(min(significant.max(), m_max))


def select_L(data, psi='median'):
    """Truncation lag L = 2 psi(L_1, ..., L_d) from the marginal autocorrelations."""

    data = as_data_matrix(data)

    if data.n < 8:
        raise ValueError(f'automatic lag selection needs at least 8 observations, got {data.n}')

    try:
        aggregate = PSI_FUNCTIONS[psi]
    except KeyError:
        raise ConfigurationError(f'unknown aggregation {psi!r}, expected one of {sorted(PSI_FUNCTIONS)}') from None

    lags = [_negligible_lag(data.values[:, j]) for j in range(data.d)]
    L = min(max(1, round_half_up(2.0 * aggregate(lags))), data.n - 1)

    logger.debug(f'marginal negligible lags {lags}, L = {L}')

    return L


def ell_opt_from_constants(gamma_bar_sq, delta_bar, n):
    """(4 Gamma^2 / Delta)^(1/5) n^(1/5), unrounded."""

    if delta_bar <= 0:
        raise DegenerateVariance(f'variance constant must be positive, got {delta_bar}')

    return (4.0 * gamma_bar_sq / delta_bar) ** 0.2 * n ** 0.2


def lattice_for(g, d):
    per_axis = round_half_up(g ** (1.0 / d))

    if per_axis < 1 or per_axis ** d != g:
        raise ConfigurationError(f'grid size g={g} is not a perfect power of the dimension {d}')

    return EvalGrid.lattice(per_axis, d, open=True)


def estimate_ell_opt(data, phi, g=25, psi='median', L=None):
    """Plug-in estimate of the optimal bandwidth for multipliers with covariance function phi."""

    data = as_data_matrix(data)
    phi = phi.with_role(KernelRole.COVARIANCE_PHI)
    second_derivative, integral_of_square = kernels.phi_constants(phi)

    grid = lattice_for(g, data.d)

    if L is None:
        L = select_L(data, psi)

    pobs = ranks(data)
    sigma, K = lag_window_matrices(pobs, L, grid.points)

    gamma_bar_sq = second_derivative ** 2 / 4.0 * float(np.mean(K ** 2))
    delta_bar = integral_of_square * (float(np.mean(np.diag(sigma))) ** 2 + float(np.mean(sigma ** 2)))

    if not delta_bar > 0:
        raise DegenerateVariance(f'estimated variance constant is {delta_bar}; the data are degenerate')

    ell_raw = ell_opt_from_constants(gamma_bar_sq, delta_bar, data.n)
    ell_opt = max(1, round_half_up(ell_raw))

    logger.info(f'bandwidth: L={L}, g={g}, Gamma^2={gamma_bar_sq:.6g}, Delta={delta_bar:.6g}, '
                f'ell_opt={ell_opt} ({ell_raw:.3f}) with {phi.name}')

    return BandwidthEstimate(
        ell_opt=ell_opt,
        ell_raw=ell_raw,
        L_used=int(L),
        gamma_bar_sq=gamma_bar_sq,
        delta_bar=delta_bar,
        phi_constants=(second_derivative, integral_of_square),
        grid_size=grid.size,
        n=data.n,
    )


def oracle_sigma_tilde_matrix(U, phi, ell, points, c_true):
    """Multiplier-conditional covariance n^(-1) sum_ij phi((i-j)/ell) a_i(u) a_j(v) over all point pairs."""

    U = as_data_matrix(U).values
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    n = U.shape[0]

    indicator = np.all(U[:, np.newaxis, :] <= points[np.newaxis, :, :], axis=2).astype(np.float64)
    a = indicator - np.asarray(c_true(points), dtype=np.float64).reshape(1, -1)

    sigma = linalg.toeplitz(kernels.evaluate(phi, np.arange(n) / ell))

    return a.T @ sigma @ a / n


def oracle_sigma_tilde(U, phi, ell, u, v, c_true):
    return float(oracle_sigma_tilde_matrix(U, phi, ell, np.vstack([u, v]), c_true)[0, 1])


def _oracle_process_draw(task):
    model, seed, points = task
    U = to_pseudo_uniform(simulate(model, seed), model)
    indicator = np.all(U[:, np.newaxis, :] <= points[np.newaxis, :, :], axis=2)
    return indicator.sum(axis=0) / math.sqrt(U.shape[0])


def reference_sigma_c(model, points, reps, seed, workers=1):
    """Long-run covariance sigma_C at all point pairs from reps oracle samples of the model.

    Needs the stationary margins of the model in closed form.
    """

    model.stationary_margin()

    tasks = [(model, derive_seed(seed, r), points) for r in range(reps)]
    draws = np.array(parallel_map(_oracle_process_draw, tasks, workers))

    return np.cov(draws, rowvar=False)


def _imse_replicate(task):
    model, method, kernel, ell_list, M, points, seed = task

    data = simulate(model, derive_seed(seed, 0))
    engine = MultiplierBootstrap(data, points)

    covariances = []
    for ell in ell_list:
        config = MultiplierConfig(method, kernel, int(ell), model.n, M, derive_seed(seed, 1))
        replicates = engine.bhat(generate(config), 1.0)
        covariances.append(np.cov(replicates, rowvar=False))

    return covariances


def imse_experiment(model, phi, ell_list, n, M, mc_reps, g=25, reference_reps=20000, reference_n=None,
                    seed=1, workers=1, method=MultiplierMethod.COVARIANCE_MATRIX):
    """Integrated mean squared error of the multiplier covariance of B^(m)(1, .) against sigma_C, per ell.

    phi is the covariance function of the multipliers. Moving averages use
    the weights kappa inducing phi and odd bandwidths, so even entries of
    ell_list move up by one. Returns a DataFrame with columns scenario, n,
    method, ell, kernel, imse.
    """

    phi = phi.with_role(KernelRole.COVARIANCE_PHI)
    method = MultiplierMethod(method)

    if method is MultiplierMethod.MOVING_AVERAGE:
        kernel = kernels.weight_kernel_for(phi)
        ell_list = list(dict.fromkeys(odd_bandwidth(ell) for ell in ell_list))
    else:
        kernel = phi
        ell_list = [int(ell) for ell in ell_list]

    model = replace(model, n=int(n))
    grid = lattice_for(g, 2)

    reference_model = replace(model, n=int(reference_n or n))
    sigma_c = reference_sigma_c(reference_model, grid.points, reference_reps, derive_seed(seed, 0), workers)

    logger.info(f'IMSE sweep: {model.scenario}, n={n}, {method.value} with {kernel.name}, '
                f'{len(ell_list)} bandwidths, {mc_reps} samples')

    tasks = [(model, method, kernel, tuple(ell_list), M, grid.points, derive_seed(seed, 1, r))
             for r in range(mc_reps)]
    results = parallel_map(_imse_replicate, tasks, workers)

    rows = []
    for position, ell in enumerate(ell_list):
        errors = [np.mean((covariances[position] - sigma_c) ** 2) for covariances in results]
        rows.append({
            'scenario': model.scenario,
            'n': n,
            'method': method.value,
            'ell': ell,
            'kernel': phi.name,
            'imse': float(np.mean(errors)),
        })

    return pd.DataFrame(rows, columns=['scenario', 'n', 'method', 'ell', 'kernel', 'imse'])
