"""Hot numeric kernels.

Two implementations live here: numba ``@njit`` loops and plain numpy.
The env flag ``SPROD_NO_NUMBA=1`` (or an unavailable numba) selects the
numpy path. Both paths are serial and deterministic; no ``parallel=True``
and no ``fastmath``, so results do not depend on thread count.
"""

from __future__ import annotations

import os

import numpy as np

_flag = os.environ.get("SPROD_NO_NUMBA", "").strip().lower()
USE_NUMBA = _flag not in ("1", "true", "yes")

if USE_NUMBA:
    try:
        from numba import njit
    except ImportError:  # pragma: no cover
        USE_NUMBA = False


def _sqdist_matrix_np(queries, points):
    """All-pairs squared Euclidean distances, shape (n_queries, n_points)."""
    q2 = np.sum(queries * queries, axis=1)[:, None]
    p2 = np.sum(points * points, axis=1)[None, :]
    d2 = q2 + p2 - 2.0 * (queries @ points.T)
    np.maximum(d2, 0.0, out=d2)
    return d2


def _kth_nn_dist_np(train, queries, k):
    """Distance from each query to its k-th nearest training row (1-based k).

    Uses the difference-based form (not the expanded q^2+p^2-2qp) so the
    result is free of cancellation and agrees with the loop kernel.
    """
    out = np.empty(queries.shape[0], dtype=np.float64)
    for i in range(queries.shape[0]):
        d2 = np.sum((train - queries[i]) ** 2, axis=1)
        out[i] = np.sqrt(np.partition(d2, k - 1)[k - 1])
    return out


def _dot_matrix_np(queries, points):
    return queries @ points.T


if USE_NUMBA:

    @njit(cache=True)
    def _sqdist_matrix_nb(queries, points):
        n, d = queries.shape
        m = points.shape[0]
        out = np.empty((n, m), dtype=np.float64)
        for i in range(n):
            for j in range(m):
                acc = 0.0
                for t in range(d):
                    diff = queries[i, t] - points[j, t]
                    acc += diff * diff
                out[i, j] = acc
        return out

    @njit(cache=True)
    def _kth_nn_dist_nb(train, queries, k):
        n = queries.shape[0]
        d = queries.shape[1]
        m = train.shape[0]
        out = np.empty(n, dtype=np.float64)
        row = np.empty(m, dtype=np.float64)
        for i in range(n):
            for j in range(m):
                acc = 0.0
                for t in range(d):
                    diff = queries[i, t] - train[j, t]
                    acc += diff * diff
                row[j] = acc
            out[i] = np.sqrt(np.partition(row, k - 1)[k - 1])
        return out

    @njit(cache=True)
    def _dot_matrix_nb(queries, points):
        n, d = queries.shape
        m = points.shape[0]
        out = np.empty((n, m), dtype=np.float64)
        for i in range(n):
            for j in range(m):
                acc = 0.0
                for t in range(d):
                    acc += queries[i, t] * points[j, t]
                out[i, j] = acc
        return out

    sqdist_matrix = _sqdist_matrix_nb
    kth_nn_dist = _kth_nn_dist_nb
    dot_matrix = _dot_matrix_nb
else:
    sqdist_matrix = _sqdist_matrix_np
    kth_nn_dist = _kth_nn_dist_np
    dot_matrix = _dot_matrix_np


def as_f64(x):
    """Contiguous float64 view/copy; all kernel arithmetic is 64-bit."""
    return np.ascontiguousarray(x, dtype=np.float64)
