"""Multiplier replicates of the sequential empirical copula process.

All replicate processes are linear in the multipliers. With
A_i(u) = 1(U_i <= u) - C_{1:n}(u) and

    G_i(u) = A_i(u) - sum_j dC_j(u) A_i(u^(j)),

the replicate of the two-sided copula process over (s, t] is
n^(-1/2) sum over floor(ns) < i <= floor(nt) of xi_i G_i(u), and the
change-point replicate at s is the partial sum up to floor(ns) minus
floor(ns)/n times the full sum.
"""
import logging
import math

import numpy as np

from .copula_process import (
    empirical_copula, floor_index, indicators, lambda_n, margin_points, ranks, window_pobs,
)
from .models import (
    PartialDerivativeVariant, PartialDerivEstimatorSpec, ReplicateProcessSet, as_data_matrix,
)

logger = logging.getLogger('copula_multiplier')

# memory budget of the dense replicate surfaces built in one go
CHUNK_BYTES = 64 * 1024 * 1024


def partial_derivatives(pobs, j, points, spec=None):
    """Finite-difference estimates of the j-th partial derivative of the empirical copula.

    The estimates are clipped to [0, 1].
    """

    spec = spec or PartialDerivEstimatorSpec()
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    h = spec.resolve_bandwidth(pobs.size)
    uj = points[:, j]

    def at(coordinate):
        shifted = points.copy()
        shifted[:, j] = coordinate
        return empirical_copula(pobs, shifted)

    up = np.clip(uj + h, 0.0, 1.0)
    down = np.clip(uj - h, 0.0, 1.0)

    if spec.variant is PartialDerivativeVariant.REMILLARD_SCAILLET:
        estimate = (at(up) - at(down)) / (2.0 * h)

    elif spec.variant is PartialDerivativeVariant.BOUNDARY_CORRECTED:
        estimate = (at(up) - at(down)) / (up - down)

    else:
        central = (at(up) - at(down)) / (2.0 * h)
        # C vanishes when u_j = 0
        lower = at(up) / (uj + h)
        upper = (at(np.ones_like(uj)) - at(down)) / (1.0 - uj + h)
        estimate = np.where(uj < h, lower, np.where(uj > 1.0 - h, upper, central))

    return np.clip(estimate, 0.0, 1.0)


def partial_derivative(pobs, j, u, spec=None):
    """Estimate of dC/du_j at a single point u; j is a 0-based axis."""

    u = np.asarray(u, dtype=np.float64)
    if not 0 <= j < u.shape[-1]:
        raise ValueError(f'axis {j} out of range for dimension {u.shape[-1]}')

    return float(partial_derivatives(pobs, j, u.reshape(1, -1), spec)[0])


class MultiplierBootstrap:
    """Precomputed pieces of the replicate processes for one sample and one set of points.

    Ranks, indicators and partial derivatives are computed once and shared
    by every replicate, multiplier batch and time fraction.
    """

    def __init__(self, data, points, pd_spec=None):
        self.data = as_data_matrix(data)
        self.points = np.atleast_2d(np.asarray(points, dtype=np.float64))
        self.pd_spec = pd_spec or PartialDerivEstimatorSpec()

        self.pobs = ranks(self.data)
        self.n = self.data.n

        self.centered = self._centered(self.points)

        self.partials = np.vstack([
            partial_derivatives(self.pobs, j, self.points, self.pd_spec) for j in range(self.data.d)
        ])

        linearized = self.centered.copy()
        for j in range(self.data.d):
            linearized -= self.partials[j] * self._centered(margin_points(self.points, j))

        self.linearized = linearized

    def _centered(self, points):
        indicator = indicators(self.pobs, points).astype(np.float64)
        return indicator - indicator.mean(axis=0)

    @staticmethod
    def _xi(multipliers):
        xi = getattr(multipliers, 'xi', multipliers)
        return np.atleast_2d(np.asarray(xi, dtype=np.float64))

    def _partial_sum(self, xi, terms, s):
        k = floor_index(self.n, s)
        return xi[:, :k] @ terms[:k] / math.sqrt(self.n)

    def bhat(self, multipliers, s):
        """M x G values of the replicate sequential process B^(m)(s, .)."""
        return self._partial_sum(self._xi(multipliers), self.centered, s)

    def ghat(self, multipliers, s):
        return self._partial_sum(self._xi(multipliers), self.linearized, s)

    def chat(self, multipliers, s, t):
        """M x G values of the replicate two-sided copula process C^(m)(s, t, .)."""

        if s > t:
            raise ValueError(f'need s <= t, got s={s}, t={t}')

        xi = self._xi(multipliers)
        lo, hi = floor_index(self.n, s), floor_index(self.n, t)

        return xi[:, lo:hi] @ self.linearized[lo:hi] / math.sqrt(self.n)

    def changepoint_replicates(self, multipliers, s_grid):
        """M x S x G replicate change-point surfaces D^(m)(s, u)."""

        xi = self._xi(multipliers)
        ks = np.array([floor_index(self.n, s) for s in s_grid])
        M, G = xi.shape[0], self.points.shape[0]

        total = xi @ self.linearized
        surfaces = np.empty((M, len(ks), G))

        rows = max(1, CHUNK_BYTES // (8 * self.n * G))
        for start in range(0, M, rows):
            chunk = slice(start, start + rows)
            partial = np.cumsum(xi[chunk, :, np.newaxis] * self.linearized[np.newaxis], axis=1)
            partial = np.concatenate([np.zeros((partial.shape[0], 1, G)), partial], axis=1)
            surfaces[chunk] = partial[:, ks, :] - (ks / self.n)[np.newaxis, :, np.newaxis] * total[chunk, np.newaxis, :]

        return surfaces / math.sqrt(self.n)

    def changepoint_statistics(self, multipliers, s_grid):
        """Replicate sup-norm and mean square of D^(m) over the (s, u) grid.

        Streams over the sample instead of holding the M x S x G surfaces.
        """

        xi = self._xi(multipliers)
        ks = [floor_index(self.n, s) for s in s_grid]
        wanted = {}
        for k in ks:
            wanted[k] = wanted.get(k, 0) + 1

        M, G = xi.shape[0], self.points.shape[0]
        total = xi @ self.linearized
        running = np.zeros((M, G))

        sup = np.zeros(M)
        square = np.zeros(M)

        def visit(k):
            surface = (running - (k / self.n) * total) / math.sqrt(self.n)
            np.maximum(sup, np.abs(surface).max(axis=1), out=sup)
            square[:] += wanted[k] * np.sum(surface ** 2, axis=1)

        if 0 in wanted:
            visit(0)

        for i in range(self.n):
            running += xi[:, i, np.newaxis] * self.linearized[i]
            if i + 1 in wanted:
                visit(i + 1)

        return sup, square / (len(ks) * G)


def _single_row(batch, m):
    xi = MultiplierBootstrap._xi(batch)
    if not 0 <= m < xi.shape[0]:
        raise ValueError(f'replicate index {m} out of range for {xi.shape[0]} multiplier rows')
    return xi[m:m + 1]


def replicate_Bhat(data, batch, s, u, m):
    """B^(m)(s, u) for one replicate m (0-based)."""
    engine = MultiplierBootstrap(data, np.atleast_2d(u))
    return float(engine.bhat(_single_row(batch, m), s)[0, 0])


def replicate_Chat(data, batch, pd_spec, s, t, u, m):
    """C^(m)(s, t, u) for one replicate m (0-based)."""
    engine = MultiplierBootstrap(data, np.atleast_2d(u), pd_spec)
    return float(engine.chat(_single_row(batch, m), s, t)[0, 0])


def replicate_Zhat(data, batch, s, x, m):
    """Replicate of the sequential empirical process of the raw observations, centered by F_n."""

    data = as_data_matrix(data)
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    xi = _single_row(batch, m)[0]

    indicator = np.all(data.values[:, np.newaxis, :] <= x[np.newaxis, :, :], axis=2).astype(np.float64)
    centered = indicator - indicator.mean(axis=0)
    k = floor_index(data.n, s)

    return float((xi[:k] @ centered[:k] / math.sqrt(data.n))[0])


def changepoint_surface(data, s_grid, points):
    """Observed change-point process D_n over s_grid x points.

    sqrt(n) lambda(0, s) lambda(s, 1) {C_{1:floor(ns)}(u) - C_{floor(ns)+1:n}(u)};
    no reference copula is needed.
    """

    data = as_data_matrix(data)
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    n = data.n

    surface = np.zeros((len(s_grid), points.shape[0]))

    for row, s in enumerate(s_grid):
        k = floor_index(n, s)
        if k == 0 or k == n:
            continue

        before = empirical_copula(window_pobs(data, 1, k), points)
        after = empirical_copula(window_pobs(data, k + 1, n), points)

        surface[row] = math.sqrt(n) * lambda_n(n, 0, s) * lambda_n(n, s, 1) * (before - after)

    return surface


def changepoint_processes(data, batch, pd_spec, s_grid, u_grid):
    """Observed D_n surface and the M replicate surfaces D^(m) on the same grids."""

    points = getattr(u_grid, 'points', u_grid)
    engine = MultiplierBootstrap(data, points, pd_spec)

    observed = changepoint_surface(engine.data, s_grid, engine.points)
    replicates = ReplicateProcessSet(
        values=engine.changepoint_replicates(batch, s_grid),
        meta=replicate_meta(batch, engine.pd_spec),
    )

    return observed, replicates


def replicate_meta(batch, pd_spec):
    config = getattr(batch, 'config', None)
    meta = {'pd_variant': pd_spec.variant.value}

    if config is not None:
        meta.update(ell=config.ell, kernel=config.kernel.name, method=config.method.value, seed=config.seed)

    return meta
