"""Fuzzy similarity graph over kNN results.

Each point gets a local distance scale: rho is the distance to its nearest
non-identical neighbor and sigma is calibrated by bisection so the smoothed
neighbor weights sum to log2(k). Directed memberships
w(i->j) = exp(-max(0, d_ij - rho_i) / sigma_i) are then symmetrized with the
fuzzy union a + b - a*b, which keeps every weight in (0, 1] and makes the
matrix exactly symmetric (the per-edge arithmetic is commutative).

target_intersect applies label supervision edge-wise: edges between
differently-labeled endpoints are scaled by far_weight, edges between a
labeled and an unlabeled endpoint by unknown_weight, and edges among
unlabeled points are left alone. When any weight actually changed, local
connectivity is rebalanced so each point keeps one full-strength tie.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy import sparse

from ..errors import ConfigError
from ..features import MISSING, TargetVector

SMOOTH_TOLERANCE = 1e-5
SIGMA_ITERATIONS = 64
MIN_SIGMA_SCALE = 1e-3


@dataclass(frozen=True)
class FuzzyGraph:
    """Symmetric weighted graph over particle row indices.

    Weights live in (0, 1], there are no self-edges, and w(i,j) == w(j,i)
    exactly. Stored as CSR; edges() yields the directed COO triplets in
    row-major order (each undirected edge appears twice).
    """

    matrix: sparse.csr_matrix

    @property
    def n_nodes(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_edges(self) -> int:
        return int(self.matrix.nnz)

    def edges(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        coo = self.matrix.tocoo()
        return (
            coo.row.astype(np.int64),
            coo.col.astype(np.int64),
            coo.data.astype(np.float64),
        )

    def max_asymmetry(self) -> float:
        diff = self.matrix - self.matrix.T
        if diff.nnz == 0:
            return 0.0
        return float(np.abs(diff.data).max())


@njit(cache=True)
def _calibrate(distances, rho, target, global_mean):
    n, k = distances.shape
    sigma = np.empty(n, dtype=np.float64)
    for i in range(n):
        lo = 0.0
        hi = np.inf
        mid = 1.0
        for _ in range(SIGMA_ITERATIONS):
            total = 0.0
            for j in range(k):
                d = distances[i, j] - rho[i]
                if d > 0.0:
                    total += np.exp(-d / mid)
                else:
                    total += 1.0
            if abs(total - target) < SMOOTH_TOLERANCE:
                break
            if total > target:
                hi = mid
                mid = (lo + hi) / 2.0
            else:
                lo = mid
                if hi == np.inf:
                    mid *= 2.0
                else:
                    mid = (lo + hi) / 2.0
        sigma[i] = mid
        # floor sigma so later exponents stay bounded; an isolated duplicate
        # cluster (rho == 0) falls back to the corpus-wide mean distance
        if rho[i] > 0.0:
            row_mean = distances[i].mean()
            if sigma[i] < MIN_SIGMA_SCALE * row_mean:
                sigma[i] = MIN_SIGMA_SCALE * row_mean
        else:
            if sigma[i] < MIN_SIGMA_SCALE * global_mean:
                sigma[i] = MIN_SIGMA_SCALE * global_mean
    return sigma


def smooth_knn(distances: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-point (rho, sigma) from ascending kNN distance rows.

    rho is the smallest positive distance in the row (0 if every neighbor is
    a duplicate). sigma solves sum_j exp(-max(0, d_j - rho)/sigma) = log2(k)
    by bisection to 1e-5 within 64 iterations, then is clamped from below by
    1e-3 times the row mean distance (corpus mean when rho == 0).
    """
    distances = np.ascontiguousarray(distances, dtype=np.float64)
    if distances.ndim != 2 or distances.shape[1] < 1:
        raise ConfigError("distance rows must be (n, k) with k >= 1")
    n, k = distances.shape
    rho = np.zeros(n, dtype=np.float64)
    positive = distances > 0.0
    has_positive = positive.any(axis=1)
    first_positive = positive.argmax(axis=1)
    rows = np.nonzero(has_positive)[0]
    rho[rows] = distances[rows, first_positive[rows]]
    target = float(np.log2(k))
    global_mean = float(distances.mean()) if distances.size else 0.0
    sigma = _calibrate(distances, rho, target, global_mean)
    return rho, sigma


def fuzzy_simplicial_set(
    indices: np.ndarray,
    distances: np.ndarray,
    rho: np.ndarray,
    sigma: np.ndarray,
) -> FuzzyGraph:
    """Directed smoothed memberships, symmetrized by fuzzy union."""
    indices = np.asarray(indices, dtype=np.int64)
    distances = np.asarray(distances, dtype=np.float64)
    if indices.shape != distances.shape:
        raise ConfigError("indices and distances must have matching shapes")
    n, k = indices.shape
    if rho.shape != (n,) or sigma.shape != (n,):
        raise ConfigError("rho and sigma must be length-n vectors")

    rows = np.repeat(np.arange(n, dtype=np.int64), k)
    cols = indices.ravel()
    gaps = distances - rho[:, None]
    vals = np.where(gaps <= 0.0, 1.0, np.exp(-np.maximum(gaps, 0.0) / sigma[:, None]))
    vals = vals.ravel()

    keep = rows != cols  # no self-edges, even for degenerate inputs
    directed = sparse.coo_matrix(
        (vals[keep], (rows[keep], cols[keep])), shape=(n, n)
    ).tocsr()
    transpose = directed.T.tocsr()
    merged = directed + transpose - directed.multiply(transpose)
    merged = merged.tocsr()
    merged.eliminate_zeros()
    merged.sort_indices()
    return FuzzyGraph(matrix=merged)


def target_intersect(
    graph: FuzzyGraph,
    target: TargetVector,
    far_weight: float,
    unknown_weight: float = 0.0,
) -> FuzzyGraph:
    """Rescale edges by label agreement, then rebalance connectivity.

    Both endpoints labeled with different classes -> weight * far_weight;
    exactly one endpoint labeled -> weight * unknown_weight; same class or
    both unlabeled -> untouched. Edges scaled to zero are removed. If any
    weight changed, each row is rescaled by its max and re-unioned so every
    point keeps one full-strength tie; without that, supervision-weakened
    labeled points would still be dominated by their strong unlabeled
    neighbors. A target that changes nothing returns the graph as is.
    """
    if not 0.0 <= far_weight <= 1.0:
        raise ConfigError(f"far_weight {far_weight} outside [0, 1]")
    if not 0.0 <= unknown_weight <= 1.0:
        raise ConfigError(f"unknown_weight {unknown_weight} outside [0, 1]")
    codes = np.asarray(target.codes, dtype=np.int64)
    if codes.shape[0] != graph.n_nodes:
        raise ConfigError("target length does not match graph node count")
    coo = graph.matrix.tocoo()
    ci = codes[coo.row]
    cj = codes[coo.col]
    labeled_i = ci != MISSING
    labeled_j = cj != MISSING
    scale = np.ones_like(coo.data)
    scale[labeled_i != labeled_j] = unknown_weight
    scale[labeled_i & labeled_j & (ci != cj)] = far_weight
    if np.all(scale == 1.0):
        return graph
    out = sparse.coo_matrix(
        (coo.data * scale, (coo.row, coo.col)), shape=coo.shape
    ).tocsr()
    out.eliminate_zeros()
    if out.nnz:
        row_max = out.max(axis=1).toarray().ravel()
        row_max[row_max <= 0.0] = 1.0  # empty rows divide by 1
        rescaled = sparse.diags(1.0 / row_max) @ out
        out = (rescaled + rescaled.T - rescaled.multiply(rescaled.T)).tocsr()
        out.eliminate_zeros()
    out.sort_indices()
    return FuzzyGraph(matrix=out)
