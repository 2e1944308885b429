"""Loop implementations of the empirical processes, for small samples without ties."""
import math

import numpy as np

TOL = 1e-9


def index(n, s):
    return int(math.floor(n * s + TOL))


def window_copula(X, k, l, u):
    """C_{k:l}(u) with 1-based inclusive k..l."""

    rows = X[k - 1:l]
    m = len(rows)
    if m == 0:
        return 0.0

    hits = 0
    for i in range(m):
        inside = True
        for j in range(X.shape[1]):
            rank = sum(1 for r in range(m) if rows[r, j] <= rows[i, j])
            if rank > u[j] * m + TOL:
                inside = False
        hits += inside
    return hits / m


def full_indicator(X, i, u):
    """1(U_i^{1:n} <= u), i 0-based."""

    n = X.shape[0]
    for j in range(X.shape[1]):
        rank = sum(1 for r in range(n) if X[r, j] <= X[i, j])
        if rank > u[j] * n + TOL:
            return 0.0
    return 1.0


def seq_process(X, s, t, u, c_ref):
    n = X.shape[0]
    k, l = index(n, s), index(n, t)
    if l <= k:
        return 0.0
    return (l - k) / math.sqrt(n) * (window_copula(X, k + 1, l, u) - c_ref(u))


def ruschendorf(X, s, u, c_ref):
    n = X.shape[0]
    return sum(full_indicator(X, i, u) - c_ref(u) for i in range(index(n, s))) / math.sqrt(n)


def oracle(U, s, u, c_true):
    n = U.shape[0]
    total = 0.0
    for i in range(index(n, s)):
        total += float(np.all(U[i] <= u)) - c_true(u)
    return total / math.sqrt(n)


def changepoint(X, s, u):
    n = X.shape[0]
    k = index(n, s)
    if k in (0, n):
        return 0.0
    return math.sqrt(n) * (k / n) * ((n - k) / n) * (window_copula(X, 1, k, u) - window_copula(X, k + 1, n, u))


def bhat(X, xi, s, u):
    n = X.shape[0]
    c = window_copula(X, 1, n, u)
    return sum(xi[i] * (full_indicator(X, i, u) - c) for i in range(index(n, s))) / math.sqrt(n)


def remillard_scaillet(X, j, u, h):
    n = X.shape[0]
    up, down = np.array(u, dtype=float), np.array(u, dtype=float)
    up[j] = min(u[j] + h, 1.0)
    down[j] = max(u[j] - h, 0.0)
    value = (window_copula(X, 1, n, up) - window_copula(X, 1, n, down)) / (2 * h)
    return min(max(value, 0.0), 1.0)


def chat(X, xi, s, t, u):
    n = X.shape[0]
    h = n ** -0.5
    slopes = [remillard_scaillet(X, j, u, h) for j in range(X.shape[1])]

    def centered(i, point):
        return full_indicator(X, i, point) - window_copula(X, 1, n, point)

    total = 0.0
    for i in range(index(n, s), index(n, t)):
        term = centered(i, u)
        for j, slope in enumerate(slopes):
            margin = np.ones(len(u))
            margin[j] = u[j]
            term -= slope * centered(i, margin)
        total += xi[i] * term
    return total / math.sqrt(n)
