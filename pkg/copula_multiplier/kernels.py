"""Kernel and covariance functions for multiplier generation and lag windows.

Every kernel is symmetric, equals 1 at 0, vanishes outside [-1, 1] and
takes values in [0, 1]. The same functions serve two roles:

- as weights kappa of the moving average multiplier construction
- as covariance functions phi of the multiplier sequence

The uniform-sum family contains the others: truncated = usum:1,
bartlett = usum:2 and parzen = usum:4. Self-convolution doubles the order.
"""
import functools
import logging
import math

import numpy as np
from scipy import integrate
from scipy.special import comb

from .exceptions import BandwidthKernelNotSmooth, ConfigurationError
from .models import KernelFamily, KernelRole, KernelSpec

logger = logging.getLogger('copula_multiplier')

QUAD_EPSABS = 1e-10

# Lag window of the long-run covariance estimators
FLAT_TOP_LAG_WINDOW = KernelSpec(KernelFamily.FLAT_TOP, KernelRole.WEIGHT_KAPPA, c=0.5)

# Plateau recommended for flat-top multiplier weights
FLAT_TOP_MULTIPLIER_C = 0.14


def _uniform_sum_density(p, y):
    """Density of the sum of p independent uniforms on (-1/2, 1/2).

    Computed as p times the divided difference of t -> (t - y)_+^(p-1)
    over the knots -p/2, ..., p/2. The density is symmetric, so it is
    evaluated at |y| where fewer truncated powers are non-zero.
    """

    y = np.abs(np.asarray(y, dtype=np.float64))
    knots = np.arange(p + 1, dtype=np.float64) - p / 2.0

    diff = knots.reshape((-1,) + (1,) * y.ndim) - y
    positive = diff > 0
    table = np.where(positive, np.where(positive, diff, 0.0) ** (p - 1), 0.0)

    # divided difference table, sorted knots
    for level in range(1, p + 1):
        spacing = (knots[level:] - knots[:-level]).reshape((-1,) + (1,) * y.ndim)
        table = (table[1:] - table[:-1]) / spacing

    return p * table[0]


@functools.lru_cache(maxsize=None)
def _uniform_sum_peak(p):
    return float(_uniform_sum_density(p, 0.0))


def _evaluate_array(spec, x):
    a = np.abs(x)
    family = spec.family

    if family is KernelFamily.TRUNCATED:
        return np.where(a <= 1.0, 1.0, 0.0)

    if family is KernelFamily.BARTLETT:
        return np.clip(1.0 - a, 0.0, None)

    if family is KernelFamily.PARZEN:
        inner = 1.0 - 6.0 * a ** 2 + 6.0 * a ** 3
        outer = 2.0 * np.clip(1.0 - a, 0.0, None) ** 3
        return np.where(a <= 0.5, inner, outer)

    if family is KernelFamily.FLAT_TOP:
        if spec.c >= 1.0:
            return np.where(a <= 1.0, 1.0, 0.0)
        return np.clip((1.0 - a) / (1.0 - spec.c), 0.0, 1.0)

    p = spec.p
    inside = a < 1.0
    values = _uniform_sum_density(p, np.where(inside, a, 0.0) * p / 2.0) / _uniform_sum_peak(p)
    return np.where(inside, np.clip(values, 0.0, 1.0), 0.0)


def evaluate(spec, x):
    """Kernel value at x; arrays are evaluated elementwise."""

    values = np.asarray(x, dtype=np.float64)

    if not np.all(np.isfinite(values)):
        raise ValueError('kernel argument must be finite')

    result = _evaluate_array(spec, values)

    if np.ndim(x) == 0:
        return float(result)
    return result


def breakpoints(spec):
    """Points of [-1, 1] where the kernel is not a single polynomial."""

    family = spec.family

    if family is KernelFamily.TRUNCATED or family is KernelFamily.BARTLETT:
        points = [0.0]
    elif family is KernelFamily.PARZEN:
        points = [-0.5, 0.0, 0.5]
    elif family is KernelFamily.FLAT_TOP:
        points = [-spec.c, spec.c]
    else:
        points = [2.0 * k / spec.p - 1.0 for k in range(spec.p + 1)]

    return sorted({float(point) for point in points if -1.0 < point < 1.0})


@functools.lru_cache(maxsize=4096)
def _self_convolution(spec, y):
    """kappa * kappa evaluated at y (unnormalized)."""

    lower = max(-1.0, y - 1.0)
    upper = min(1.0, y + 1.0)

    if upper <= lower:
        return 0.0

    kinks = breakpoints(spec)
    points = [t for t in kinks + [y - t for t in kinks] if lower < t < upper]

    value, _ = integrate.quad(
        lambda t: evaluate(spec, t) * evaluate(spec, y - t),
        lower, upper,
        points=sorted(set(points)) or None,
        epsabs=QUAD_EPSABS,
        limit=200,
    )

    return value


def self_convolution_normalized(spec, x):
    """kappa * kappa (2x) / kappa * kappa (0), the covariance function induced by weights kappa."""

    x = float(x)
    if not math.isfinite(x):
        raise ValueError('kernel argument must be finite')

    if abs(x) >= 1.0:
        return 0.0

    spec = spec.with_role(KernelRole.WEIGHT_KAPPA)
    return _self_convolution(spec, 2.0 * abs(x)) / _self_convolution(spec, 0.0)


def uniform_sum_order(spec):
    """Number p of summed uniforms the kernel is the density of; None for flat-top kernels."""

    return {
        KernelFamily.TRUNCATED: 1,
        KernelFamily.BARTLETT: 2,
        KernelFamily.PARZEN: 4,
        KernelFamily.UNIFORM_SUM: spec.p,
    }.get(spec.family)


def uniform_sum_kernel(p, role=KernelRole.WEIGHT_KAPPA):
    """Kernel of order p, under its named family when it has one."""

    named = {1: KernelFamily.TRUNCATED, 2: KernelFamily.BARTLETT, 4: KernelFamily.PARZEN}
    if p in named:
        return KernelSpec(named[p], role)
    return KernelSpec(KernelFamily.UNIFORM_SUM, role, p=p)


def same_function(first, second):
    """Whether two specs describe the same kernel function, whatever their names and roles."""

    first_order, second_order = uniform_sum_order(first), uniform_sum_order(second)
    if first_order is not None and second_order is not None:
        return first_order == second_order
    return first.name == second.name


def induced_covariance(kappa):
    """Covariance function phi of moving average multipliers with weights kappa.

    Self-convolution doubles the order: truncated gives bartlett, bartlett
    gives parzen and parzen gives usum:8.
    """

    p = uniform_sum_order(kappa)
    if p is None:
        raise ConfigurationError(f'weights {kappa.name} induce no covariance function of the kernel list; '
                                 'choose ell explicitly')
    return uniform_sum_kernel(2 * p, KernelRole.COVARIANCE_PHI)


def weight_kernel_for(phi):
    """Moving average weights kappa whose induced covariance function is phi."""

    p = uniform_sum_order(phi)
    if p is None or p % 2:
        raise ConfigurationError(f'covariance function {phi.name} is not induced by moving average weights '
                                 'of the kernel list')
    return uniform_sum_kernel(p // 2, KernelRole.WEIGHT_KAPPA)


def phi_second_derivative(spec):
    """phi''(0) for a covariance function that is twice differentiable at 0.

    - parzen: -12
    - usum:p with p >= 4, from the second difference of the order p - 2 density
    """

    if spec.family is KernelFamily.PARZEN:
        return -12.0

    if spec.family is KernelFamily.UNIFORM_SUM and spec.p >= 4:
        p = spec.p
        second_difference = (_uniform_sum_density(p - 2, 1.0)
                             - 2.0 * _uniform_sum_density(p - 2, 0.0)
                             + _uniform_sum_density(p - 2, -1.0))
        return float((p / 2.0) ** 2 * second_difference / _uniform_sum_peak(p))

    raise BandwidthKernelNotSmooth(
        f'kernel {spec.name} is not twice differentiable at 0 and cannot drive the bandwidth estimator')


@functools.lru_cache(maxsize=None)
def phi_integral_of_square(spec):
    """Integral of phi(x)^2 over [-1, 1]."""

    if spec.family is KernelFamily.BARTLETT:
        return 2.0 / 3.0
    if spec.family is KernelFamily.PARZEN:
        return 151.0 / 280.0
    if spec.family is KernelFamily.TRUNCATED:
        return 2.0

    value, _ = integrate.quad(
        lambda t: evaluate(spec, t) ** 2,
        -1.0, 1.0,
        points=breakpoints(spec) or None,
        epsabs=QUAD_EPSABS,
        limit=200,
    )

    return value


def phi_constants(spec):
    """(phi''(0), integral of phi^2) as used by the optimal bandwidth formula."""

    spec = spec.with_role(KernelRole.COVARIANCE_PHI)
    constants = (phi_second_derivative(spec), phi_integral_of_square(spec))

    logger.debug(f'kernel {spec.name}: phi\'\'(0) = {constants[0]:.6g}, int phi^2 = {constants[1]:.6g}')

    return constants


@functools.lru_cache(maxsize=None)
def lipschitz_constant(spec):
    """Smallest lambda with |k(x) - k(y)| <= lambda |x - y|; inf for discontinuous kernels."""

    family = spec.family

    if family is KernelFamily.TRUNCATED:
        return math.inf
    if family is KernelFamily.BARTLETT:
        return 1.0
    if family is KernelFamily.PARZEN:
        return 1.5
    if family is KernelFamily.FLAT_TOP:
        return math.inf if spec.c >= 1.0 else 1.0 / (1.0 - spec.c)

    p = spec.p
    if p == 1:
        return math.inf
    if p == 2:
        return 1.0

    # f_p' = f_{p-1}(. + 1/2) - f_{p-1}(. - 1/2), maximized on a fine grid with a small margin
    y = np.linspace(0.0, p / 2.0, 20001)
    slope = np.abs(_uniform_sum_density(p - 1, y + 0.5) - _uniform_sum_density(p - 1, y - 0.5))

    return float(1.01 * (p / 2.0) * slope.max() / _uniform_sum_peak(p))


def covariance_kernel_matrix(spec, n, ell):
    """n x n matrix with entries phi((i - j) / ell)."""

    lags = np.arange(n, dtype=np.float64) / ell
    column = evaluate(spec, lags)
    index = np.abs(np.subtract.outer(np.arange(n), np.arange(n)))

    return column[index]


def _uniform_sum_binomial(p, y):
    """Density of the sum of p centered uniforms by the alternating binomial sum.

    Less accurate than the divided-difference evaluation for large p;
    kept as an independent check.
    """

    y = np.asarray(y, dtype=np.float64)
    total = np.zeros_like(y)

    for k in range(p + 1):
        shifted = y + p / 2.0 - k
        total += (-1) ** k * comb(p, k) * np.where(shifted > 0, shifted, 0.0) ** (p - 1)

    return total / math.factorial(p - 1)
