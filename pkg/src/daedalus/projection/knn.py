"""Exact k-nearest-neighbor search.

Brute-force all-pairs scan, parallel over query rows. Exact search is the
deliberate choice up to desk scale (tens of thousands of particles); there
is no index to build or tune and results are reproducible bit-for-bit.
"""

from __future__ import annotations

import numpy as np
from numba import njit, prange

from ..errors import ConfigError

METRICS = ("euclidean",)


@njit(parallel=True, cache=True)
def _brute_force(data, k):
    n = data.shape[0]
    dim = data.shape[1]
    indices = np.empty((n, k), dtype=np.int64)
    distances = np.empty((n, k), dtype=np.float64)
    for i in prange(n):
        best_d = np.full(k, np.inf)
        best_j = np.full(k, -1, dtype=np.int64)
        for j in range(n):
            if j == i:
                continue
            d = 0.0
            for c in range(dim):
                diff = data[i, c] - data[j, c]
                d += diff * diff
            # keep the k smallest (distance, index) pairs; index breaks ties
            tail_d = best_d[k - 1]
            if d > tail_d or (d == tail_d and j > best_j[k - 1] >= 0):
                continue
            pos = k - 1
            while pos > 0 and (
                d < best_d[pos - 1] or (d == best_d[pos - 1] and j < best_j[pos - 1])
            ):
                best_d[pos] = best_d[pos - 1]
                best_j[pos] = best_j[pos - 1]
                pos -= 1
            best_d[pos] = d
            best_j[pos] = j
        for m in range(k):
            indices[i, m] = best_j[m]
            distances[i, m] = np.sqrt(best_d[m])
    return indices, distances


def knn_graph(
    data: np.ndarray, k: int, metric: str = "euclidean"
) -> tuple[np.ndarray, np.ndarray]:
    """Exact k nearest neighbors of every row among all other rows.

    Returns (indices, distances), each (n, k), sorted ascending by distance
    with ties broken toward the smaller index. Self matches are excluded.
    """
    if metric not in METRICS:
        raise ConfigError(f"unsupported metric {metric!r}")
    data = np.ascontiguousarray(data, dtype=np.float64)
    if data.ndim != 2:
        raise ConfigError("feature matrix must be 2-D")
    n = data.shape[0]
    if not 1 <= k < n:
        raise ConfigError(f"k={k} out of range for {n} rows (need 1 <= k < n)")
    return _brute_force(data, k)
