"""Copula evaluators, copula samplers and the serially dependent data models."""
import logging
import math

import numpy as np
from scipy import stats

from .models import CopulaFamily, DataMatrix, ModelKind, as_data_matrix
from .parallel import substream

logger = logging.getLogger('copula_multiplier')


def _points(u):
    points = np.atleast_2d(np.asarray(u, dtype=np.float64))

    if np.any(~np.isfinite(points)) or np.any(points < 0.0) or np.any(points > 1.0):
        raise ValueError('copula arguments must lie in [0, 1]')

    return points


def _scalar_or_array(u, values):
    if np.ndim(u) == 1:
        return float(values[0])
    return values


def copula_cdf(spec, u):
    """Copula value at u, or at each row of a (G, d) array."""

    points = _points(u)

    with np.errstate(divide='ignore', over='ignore', invalid='ignore'):
        if spec.family is CopulaFamily.INDEPENDENCE:
            values = np.prod(points, axis=1)

        elif spec.family is CopulaFamily.CLAYTON:
            theta = spec.theta
            total = np.sum(points ** -theta, axis=1) - points.shape[1] + 1.0
            values = total ** (-1.0 / theta)

        else:
            theta = spec.theta
            total = np.sum((-np.log(points)) ** theta, axis=1)
            values = np.exp(-total ** (1.0 / theta))

    values = np.where(np.any(points == 0.0, axis=1), 0.0, values)

    return _scalar_or_array(u, np.clip(values, 0.0, 1.0))


def copula_partial(spec, j, u):
    """Partial derivative dC/du_j (j is 0-based), set to zero where u_j is 0 or 1."""

    points = _points(u)
    if not 0 <= j < points.shape[1]:
        raise ValueError(f'axis {j} out of range for dimension {points.shape[1]}')

    uj = points[:, j]

    with np.errstate(divide='ignore', over='ignore', invalid='ignore'):
        if spec.family is CopulaFamily.INDEPENDENCE:
            values = np.prod(np.delete(points, j, axis=1), axis=1)

        elif spec.family is CopulaFamily.CLAYTON:
            theta = spec.theta
            values = copula_cdf(spec, points) ** (1.0 + theta) * uj ** (-theta - 1.0)

        else:
            theta = spec.theta
            logs = -np.log(points)
            total = np.sum(logs ** theta, axis=1)
            values = copula_cdf(spec, points) * total ** (1.0 / theta - 1.0) * logs[:, j] ** (theta - 1.0) / uj

    values = np.nan_to_num(values, nan=0.0, posinf=0.0, neginf=0.0)
    values = np.where((uj == 0.0) | (uj == 1.0), 0.0, values)

    return _scalar_or_array(u, values)


def copula_reference(spec):
    """The copula as a callable over (G, d) arrays."""
    return lambda points: copula_cdf(spec, np.atleast_2d(points))


def copula_partials(spec):
    """partials(j, points) for the oracle representation."""
    return lambda j, points: copula_partial(spec, j, np.atleast_2d(points))


def _generator(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def sample_copula(spec, count, seed, d=2):
    """count x d draws from the copula, strictly inside (0, 1)^d.

    - Clayton: gamma frailty V with shape 1/theta, U = (1 + E / V)^(-1/theta)
    - Gumbel-Hougaard: positive stable frailty of index 1/theta,
      U = exp(-(E / V)^(1/theta))

    with E standard exponential. Gumbel-Hougaard with theta = 1 is the
    independence copula.
    """

    rng = _generator(seed)
    count = int(count)
    if count < 0:
        raise ValueError(f'sample size must be non-negative, got {count}')

    if spec.family is CopulaFamily.INDEPENDENCE or (spec.family is CopulaFamily.GUMBEL and spec.theta == 1.0):
        sample = rng.uniform(size=(count, d))

    elif spec.family is CopulaFamily.CLAYTON:
        theta = spec.theta
        frailty = rng.gamma(shape=1.0 / theta, scale=1.0, size=(count, 1))
        exponential = rng.exponential(size=(count, d))
        sample = (1.0 + exponential / frailty) ** (-1.0 / theta)

    else:
        theta = spec.theta
        frailty = stats.levy_stable.rvs(
            1.0 / theta, 1.0, loc=0.0, scale=math.cos(math.pi / (2.0 * theta)) ** theta,
            size=(count, 1), random_state=rng,
        )
        exponential = rng.exponential(size=(count, d))
        sample = np.exp(-(exponential / frailty) ** (1.0 / theta))

    tiny = np.finfo(np.float64).tiny
    return np.clip(sample, tiny, 1.0 - np.finfo(np.float64).epsneg)


def _innovations(model, seed, total):
    """total x 2 standard normal innovations with the model's copula (and break)."""

    uniforms = sample_copula(model.copula, total, substream(seed, 0))

    if model.copula_after is not None:
        # observation i (1-based) sits at row burn_in + i
        first = model.burn_in + math.floor(model.n * model.break_at + 1e-9) + 1
        if first < total:
            uniforms[first:] = sample_copula(model.copula_after, total - first, substream(seed, 1))

    return stats.norm.ppf(uniforms)


def simulate(model, seed):
    """n x 2 sample of the data model, after a burn-in started at X = epsilon.

    Rows burn_in + 1 of draws are consumed before the first returned
    observation, i.e. time runs from -burn_in to n.
    """

    total = model.n + model.burn_in + 1
    eps = _innovations(model, seed, total)
    x = np.empty_like(eps)

    if model.kind is ModelKind.GARCH:
        omega, beta, alpha = (np.array(column, dtype=np.float64) for column in zip(*model.garch_params))
        variance = omega / (1.0 - alpha - beta)
        x[0] = np.sqrt(variance) * eps[0]

        for i in range(1, total):
            variance = omega + beta * variance + alpha * eps[i - 1] ** 2
            x[i] = np.sqrt(variance) * eps[i]

    else:
        x[0] = eps[0]

        for i in range(1, total):
            previous = x[i - 1]

            if model.kind is ModelKind.IID:
                x[i] = eps[i]
            elif model.kind is ModelKind.AR1:
                x[i] = 0.5 * previous + eps[i]
            elif model.kind is ModelKind.NAR:
                x[i] = 0.6 * np.sin(previous) + eps[i]
            else:
                x[i] = (0.8 - 1.1 * np.exp(-50.0 * previous ** 2)) * previous + 0.1 * eps[i]

    logger.debug(f'simulated {model.scenario} with n={model.n}, seed={seed}')

    return DataMatrix(x[model.burn_in + 1:])


def to_pseudo_uniform(data, model):
    """Probability-integral transform of the data by the model's stationary margin."""

    data = as_data_matrix(data)
    return model.stationary_margin().cdf(data.values)
