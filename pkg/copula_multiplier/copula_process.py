"""Ranks, window empirical copulas and the sequential empirical processes.

Windows are 1-based and inclusive: (k, l) covers observations k..l.
Time fractions s map to the index floor(n * s).
"""
import logging
import math

import numpy as np
from scipy.stats import rankdata

from .models import PseudoObsWindow, as_data_matrix

logger = logging.getLogger('copula_multiplier')

# absorbs rounding in n * s and u * m
INDEX_TOLERANCE = 1e-9


def floor_index(n, s):
    """floor(n * s), robust to representation error such as n * 0.3."""
    return int(math.floor(n * s + INDEX_TOLERANCE))


def _check_fraction(name, value):
    if not 0.0 <= value <= 1.0:
        raise ValueError(f'{name} must lie in [0, 1], got {value}')


def lambda_n(n, s, t):
    """(floor(nt) - floor(ns)) / n."""
    return (floor_index(n, t) - floor_index(n, s)) / n


def ranks(data, window=None):
    """Column-wise mid-ranks of the observations in the window (k, l)."""

    data = as_data_matrix(data)

    if window is None:
        window = (1, data.n)

    k, l = (int(w) for w in window)
    if not 1 <= k <= l <= data.n:
        raise ValueError(f'window ({k}, {l}) is empty or outside 1..{data.n}')

    block = data.values[k - 1:l]

    return PseudoObsWindow(window=(k, l), ranks=rankdata(block, method='average', axis=0))


def window_pobs(data, k, l):
    """Pseudo-observations of k..l, the empty window when l < k."""

    data = as_data_matrix(data)

    if l < k:
        return PseudoObsWindow.empty(k, data.d)

    return ranks(data, (k, l))


def indicators(pobs, points):
    """m x G boolean matrix of 1(U_i <= u_g), compared on the rank scale R_ij <= u_j m."""

    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    thresholds = points * pobs.size + INDEX_TOLERANCE

    return np.all(pobs.ranks[:, np.newaxis, :] <= thresholds[np.newaxis, :, :], axis=2)


def empirical_copula(pobs, u):
    """Empirical copula of a window at one point u, or at each row of a (G, d) array.

    The empty window has the zero function as its empirical copula.
    """

    u = np.asarray(u, dtype=np.float64)
    points = np.atleast_2d(u)

    if pobs.size == 0:
        values = np.zeros(points.shape[0])
    else:
        values = indicators(pobs, points).mean(axis=0)

    if u.ndim == 1:
        return float(values[0])
    return values


def _reference_values(c_ref, points):
    return np.asarray(c_ref(points), dtype=np.float64).reshape(points.shape[0])


def seq_copula_process_surface(data, s, t, points, c_ref):
    """Two-sided sequential empirical copula process over a set of points.

    sqrt(n) lambda_n(s, t) {C_{floor(ns)+1:floor(nt)}(u) - C_ref(u)}, where
    c_ref maps a (G, d) array to G copula values.
    """

    data = as_data_matrix(data)
    _check_fraction('s', s)
    _check_fraction('t', t)
    if s > t:
        raise ValueError(f'need s <= t, got s={s}, t={t}')

    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    n = data.n
    k, l = floor_index(n, s) + 1, floor_index(n, t)

    if l < k:
        return np.zeros(points.shape[0])

    pobs = window_pobs(data, k, l)
    weight = math.sqrt(n) * lambda_n(n, s, t)

    return weight * (empirical_copula(pobs, points) - _reference_values(c_ref, points))


def seq_copula_process(data, s, t, u, c_ref):
    return float(seq_copula_process_surface(data, s, t, np.atleast_2d(u), c_ref)[0])


def ruschendorf_process_surface(data, s, points, c_ref):
    """n^(-1/2) sum over i <= floor(ns) of {1(U_i^{1:n} <= u) - C_ref(u)}, full-sample pseudo-observations."""

    data = as_data_matrix(data)
    _check_fraction('s', s)

    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    n = data.n
    k = floor_index(n, s)

    if k == 0:
        return np.zeros(points.shape[0])

    pobs = ranks(data)
    counts = indicators(pobs, points)[:k].sum(axis=0)

    return (counts - k * _reference_values(c_ref, points)) / math.sqrt(n)


def ruschendorf_process(data, s, u, c_ref):
    return float(ruschendorf_process_surface(data, s, np.atleast_2d(u), c_ref)[0])


def _uniform_indicators(U, points):
    return np.all(U[:, np.newaxis, :] <= points[np.newaxis, :, :], axis=2)


def oracle_seq_process_surface(U, s, points, c_true):
    """Sequential empirical process of the true probability-integral transforms."""

    U = as_data_matrix(U).values
    _check_fraction('s', s)

    if np.any(U < 0.0) or np.any(U > 1.0):
        raise ValueError('oracle observations must lie in [0, 1]')

    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    n = U.shape[0]
    k = floor_index(n, s)

    if k == 0:
        return np.zeros(points.shape[0])

    counts = _uniform_indicators(U[:k], points).sum(axis=0)

    return (counts - k * _reference_values(c_true, points)) / math.sqrt(n)


def oracle_seq_process(U, s, u, c_true):
    return float(oracle_seq_process_surface(U, s, np.atleast_2d(u), c_true)[0])


def margin_points(points, j):
    """u^(j): every coordinate set to 1 except coordinate j."""

    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    margins = np.ones_like(points)
    margins[:, j] = points[:, j]

    return margins


def oracle_representation_surface(U, s, t, points, c_true, partials_true):
    """Asymptotic representation of the two-sided process in terms of the oracle process.

    partials_true(j, points) returns the j-th first order partial
    derivative of the true copula at each point.
    """

    _check_fraction('t', t)
    if s > t:
        raise ValueError(f'need s <= t, got s={s}, t={t}')

    points = np.atleast_2d(np.asarray(points, dtype=np.float64))

    def increment(where):
        return oracle_seq_process_surface(U, t, where, c_true) - oracle_seq_process_surface(U, s, where, c_true)

    value = increment(points)

    for j in range(points.shape[1]):
        slope = np.asarray(partials_true(j, points), dtype=np.float64).reshape(points.shape[0])
        value = value - slope * increment(margin_points(points, j))

    return value


def oracle_representation(U, s, t, u, c_true, partials_true):
    return float(oracle_representation_surface(U, s, t, np.atleast_2d(u), c_true, partials_true)[0])


def empirical_reference(data):
    """C_{1:n} as a callable over (G, d) arrays, for use as C_ref."""

    pobs = ranks(data)

    def reference(points):
        return empirical_copula(pobs, np.atleast_2d(points))

    return reference
