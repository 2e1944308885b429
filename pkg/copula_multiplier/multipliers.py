"""Dependent multiplier sequences.

Two constructions are available:

- moving average: xi_i = sum_j w_j Z_{i+j-1} with normalized weights
  w_j proportional to kappa((j - b) / b), j = 1..2b-1
- covariance matrix: xi = Sigma^(1/2) Z with Sigma_ij = phi((i - j) / ell)

Row m of a batch is drawn from its own substream of the seed, so a batch
does not depend on how many rows are requested alongside it.
"""
import functools
import logging

import numpy as np
from scipy import linalg

from . import kernels
from .exceptions import NotPositiveSemiDefinite
from .models import BaseLaw, MultiplierBatch, MultiplierMethod
from .parallel import substream

logger = logging.getLogger('copula_multiplier')

NEGATIVE_EIGENVALUE_TOLERANCE = 1e-6
RELATIVE_EIGENVALUE_FLOOR = 1e-10


def _base_draws(rng, size, law):
    if law is BaseLaw.RADEMACHER:
        return 2.0 * rng.integers(0, 2, size=size) - 1.0
    return rng.standard_normal(size)


def moving_average_weights(kappa, ell):
    """Normalized weights w_1..w_ell, with unit sum of squares."""

    b = (ell + 1) // 2
    j = np.arange(1, ell + 1)
    weights = kernels.evaluate(kappa, (j - b) / b)

    return weights / np.sqrt(np.sum(weights ** 2))


def generate_moving_average(config):
    if config.method is not MultiplierMethod.MOVING_AVERAGE:
        raise ValueError(f'expected a moving average configuration, got {config.method.value}')

    if config.ell >= 2 * config.n:
        logger.warning(f'bandwidth ell={config.ell} is at least twice the sample length n={config.n}; '
                       'the multipliers are nearly identical across the sample')

    weights = moving_average_weights(config.kernel, config.ell)
    draws = config.n + config.ell - 1

    xi = np.empty((config.M, config.n))
    for m in range(config.M):
        z = _base_draws(substream(config.seed, m), draws, config.base_law)
        xi[m] = np.correlate(z, weights, mode='valid')

    return MultiplierBatch(xi=xi, config=config)


@functools.lru_cache(maxsize=16)
def covariance_sqrt(n, ell, phi):
    """Symmetric square root of the n x n matrix [phi((i - j) / ell)], from its eigendecomposition."""

    sigma = linalg.toeplitz(kernels.evaluate(phi, np.arange(n) / ell))
    eigenvalues, eigenvectors = linalg.eigh(sigma)

    if eigenvalues.min() < -NEGATIVE_EIGENVALUE_TOLERANCE:
        raise NotPositiveSemiDefinite(
            f'multiplier covariance for {phi.name} with ell={ell}, n={n} has eigenvalue {eigenvalues.min():.3g}')

    floor = RELATIVE_EIGENVALUE_FLOOR * eigenvalues.max()
    clipped = int(np.sum(eigenvalues < floor))
    if clipped:
        logger.debug(f'clipping {clipped} eigenvalues below {floor:.3g} to zero')

    eigenvalues = np.where(eigenvalues < floor, 0.0, eigenvalues)
    root = (eigenvectors * np.sqrt(eigenvalues)) @ eigenvectors.T

    root.setflags(write=False)
    return root


def generate_covariance_matrix(config):
    if config.method is not MultiplierMethod.COVARIANCE_MATRIX:
        raise ValueError(f'expected a covariance matrix configuration, got {config.method.value}')

    root = covariance_sqrt(config.n, config.ell, config.kernel)

    z = np.empty((config.M, config.n))
    for m in range(config.M):
        z[m] = substream(config.seed, m).standard_normal(config.n)

    return MultiplierBatch(xi=z @ root, config=config)


def generate(config):
    """Draw a multiplier batch with the construction named in the configuration."""

    logger.debug(f'drawing {config.M} multiplier sequences: {config.method.value}, '
                 f'kernel {config.kernel.name}, ell={config.ell}, n={config.n}')

    if config.method is MultiplierMethod.MOVING_AVERAGE:
        return generate_moving_average(config)
    return generate_covariance_matrix(config)


def moving_average_covariance(kappa, ell, lags):
    """Exact covariance of moving average multipliers at the given lags."""

    weights = moving_average_weights(kappa, ell)
    lags = np.abs(np.atleast_1d(np.asarray(lags, dtype=int)))

    return np.array([np.dot(weights[r:], weights[:ell - r]) if r < ell else 0.0 for r in lags])


def theoretical_covariance(config, lags):
    """Multiplier covariance phi(r / ell) at the given lags.

    For the moving average construction this is the large-ell limit
    kappa * kappa (2r / ell) / kappa * kappa (0).
    """

    lags = np.atleast_1d(np.asarray(lags, dtype=np.float64))

    if config.method is MultiplierMethod.COVARIANCE_MATRIX:
        return kernels.evaluate(config.kernel, lags / config.ell)

    return np.array([kernels.self_convolution_normalized(config.kernel, r / config.ell) for r in lags])
