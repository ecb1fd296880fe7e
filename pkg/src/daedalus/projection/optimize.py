"""Curve fitting and stochastic optimization of the 2D embedding.

The low-dimensional affinity kernel is 1/(1 + a*d^(2b)) with (a, b) fitted
so the kernel tracks an offset exponential: flat at 1 out to min_dist, then
decaying with the given spread. Optimization samples edges proportionally to
weight, applies the kernel's attractive gradient to both endpoints, and
pushes each sampled head away from randomly drawn negatives. Every gradient
component is clipped to [-4, 4] and the learning rate anneals linearly to 0.

The epoch kernel is compiled single-threaded with its own xorshift RNG, so
runs with identical inputs and seed produce byte-identical coordinates.
"""

from __future__ import annotations

from typing import TYPE_CHECKING, Callable

import numpy as np
from numba import njit
from scipy import sparse
from scipy.optimize import curve_fit
from scipy.sparse.csgraph import connected_components

from ..errors import ConfigError
from .fuzzy import FuzzyGraph

if TYPE_CHECKING:
    from .pipeline import ProjectionConfig

CLIP = 4.0
REPULSION = 1.0
INIT_RANGE = 10.0
SPECTRAL_MIN_NODES = 4  # the eigensolver needs k=3 < n


def fit_curve_params(min_dist: float, spread: float) -> tuple[float, float]:
    """Least-squares (a, b) for the kernel 1/(1 + a*x^(2b)).

    Target curve: 1 for x < min_dist, exp(-(x - min_dist)/spread) beyond,
    sampled at 300 points on [0, 3*spread].
    """
    if not 0.0 <= min_dist < spread:
        raise ConfigError(f"need 0 <= min_dist < spread, got {min_dist}, {spread}")
    xv = np.linspace(0.0, spread * 3.0, 300)
    yv = np.where(xv < min_dist, 1.0, np.exp(-(xv - min_dist) / spread))

    def kernel(x, a, b):
        return 1.0 / (1.0 + a * x ** (2.0 * b))

    params, _ = curve_fit(kernel, xv, yv)
    return float(params[0]), float(params[1])


# Energies as functions of squared distance x, per edge. The SGD kernel uses
# coefficient -2 * grad (chain rule through x = |yi - yj|^2), plus a 0.001
# smoothing term in the repulsive denominator.


def attractive_energy(d2, a, b):
    return np.log1p(a * d2**b)


def attractive_grad(d2, a, b):
    return a * b * d2 ** (b - 1.0) / (1.0 + a * d2**b)


def repulsive_energy(d2, a, b, repulsion=REPULSION):
    return repulsion * np.log1p(1.0 / (a * d2**b))


def repulsive_grad(d2, a, b, repulsion=REPULSION):
    return -repulsion * b / (d2 * (1.0 + a * d2**b))


@njit(cache=True)
def _tau_rand_int(state):
    state[0] = (((state[0] & 4294967294) << 12) & 0xFFFFFFFF) ^ (
        (((state[0] << 13) & 0xFFFFFFFF) ^ state[0]) >> 19
    )
    state[1] = (((state[1] & 4294967288) << 4) & 0xFFFFFFFF) ^ (
        (((state[1] << 2) & 0xFFFFFFFF) ^ state[1]) >> 25
    )
    state[2] = (((state[2] & 4294967280) << 17) & 0xFFFFFFFF) ^ (
        (((state[2] << 3) & 0xFFFFFFFF) ^ state[2]) >> 11
    )
    return state[0] ^ state[1] ^ state[2]


@njit(cache=True)
def _clip(val):
    if val > CLIP:
        return CLIP
    if val < -CLIP:
        return -CLIP
    return val


@njit(cache=True)
def _sgd_epoch(
    embedding,
    head,
    tail,
    epochs_per_sample,
    epoch_of_next_sample,
    epochs_per_negative_sample,
    epoch_of_next_negative_sample,
    rng_state,
    a,
    b,
    alpha,
    epoch,
):
    n_vertices = embedding.shape[0]
    dim = embedding.shape[1]
    for i in range(epochs_per_sample.shape[0]):
        if epoch_of_next_sample[i] > epoch:
            continue
        j = head[i]
        k = tail[i]

        dist_squared = 0.0
        for d in range(dim):
            diff = embedding[j, d] - embedding[k, d]
            dist_squared += diff * diff
        if dist_squared > 0.0:
            grad_coeff = -2.0 * a * b * dist_squared ** (b - 1.0)
            grad_coeff /= a * dist_squared**b + 1.0
        else:
            grad_coeff = 0.0
        for d in range(dim):
            grad_d = _clip(grad_coeff * (embedding[j, d] - embedding[k, d]))
            embedding[j, d] += grad_d * alpha
            embedding[k, d] -= grad_d * alpha

        epoch_of_next_sample[i] += epochs_per_sample[i]

        n_neg = int(
            (epoch - epoch_of_next_negative_sample[i])
            / epochs_per_negative_sample[i]
        )
        for _ in range(n_neg):
            other = _tau_rand_int(rng_state) % n_vertices
            dist_squared = 0.0
            for d in range(dim):
                diff = embedding[j, d] - embedding[other, d]
                dist_squared += diff * diff
            if dist_squared > 0.0:
                grad_coeff = 2.0 * REPULSION * b
                grad_coeff /= (0.001 + dist_squared) * (a * dist_squared**b + 1.0)
            elif j == other:
                continue
            else:
                grad_coeff = 0.0
            for d in range(dim):
                if grad_coeff > 0.0:
                    grad_d = _clip(grad_coeff * (embedding[j, d] - embedding[other, d]))
                else:
                    # coincident with a distinct vertex: kick apart hard
                    grad_d = 4.0
                embedding[j, d] += grad_d * alpha

        epoch_of_next_negative_sample[i] += n_neg * epochs_per_negative_sample[i]


def _spectral_init(matrix: sparse.csr_matrix, rng: np.random.Generator) -> np.ndarray:
    n = matrix.shape[0]
    degrees = np.asarray(matrix.sum(axis=1)).ravel()
    inv_sqrt = sparse.dia_matrix((1.0 / np.sqrt(degrees), 0), shape=(n, n))
    laplacian = sparse.identity(n) - inv_sqrt @ matrix @ inv_sqrt
    k = 3  # 2 embedding axes + the trivial constant eigenvector
    ncv = min(n - 1, max(2 * k + 1, int(np.sqrt(n))))
    values, vectors = sparse.linalg.eigsh(
        laplacian,
        k,
        which="SM",
        ncv=ncv,
        tol=1e-4,
        v0=np.ones(n),
        maxiter=n * 5,
    )
    order = np.argsort(values)[1:k]
    init = vectors[:, order]
    expansion = INIT_RANGE / np.abs(init).max()
    noise = rng.normal(scale=1e-4, size=init.shape)
    return init * expansion + noise


def optimize_embedding(
    graph: FuzzyGraph,
    config: "ProjectionConfig",
    initial: np.ndarray | None = None,
    progress: Callable[[float], None] | None = None,
) -> np.ndarray:
    """SGD layout of the graph into 2D; float32 (n, 2), finite.

    Initialization order: the provided previous embedding when its shape
    matches, else the spectral layout of the graph when it is connected and
    large enough for the eigensolver, else seeded uniform coordinates in
    [-10, 10]^2. A single node sits at the origin.

    progress (if given) is called after every epoch with the completed
    fraction in (0, 1]; an exception raised inside it aborts the run.
    """
    n = graph.n_nodes
    if n == 0:
        raise ConfigError("cannot embed an empty graph")
    if n == 1:
        return np.zeros((1, 2), dtype=np.float32)

    rng = np.random.default_rng(config.seed & 0xFFFFFFFFFFFFFFFF)

    matrix = graph.matrix.copy().tocsr()
    if matrix.nnz:
        # edges too weak to be sampled even once contribute nothing
        threshold = matrix.data.max() / float(config.n_epochs)
        matrix.data[matrix.data < threshold] = 0.0
        matrix.eliminate_zeros()

    if initial is not None and initial.shape == (n, 2):
        coords = np.array(initial, dtype=np.float32, copy=True)
    else:
        coords = None
        components, _ = connected_components(matrix, directed=False)
        if components == 1 and n >= SPECTRAL_MIN_NODES:
            try:
                coords = _spectral_init(matrix, rng).astype(np.float32)
            except Exception:
                coords = None
        if coords is None:
            coords = rng.uniform(-INIT_RANGE, INIT_RANGE, size=(n, 2)).astype(
                np.float32
            )

    coords = np.ascontiguousarray(coords, dtype=np.float32)
    rng_state = rng.integers(1 << 10, (1 << 31) - 1, size=3, dtype=np.int64)

    coo = matrix.tocoo()
    head = coo.row.astype(np.int64)
    tail = coo.col.astype(np.int64)
    weights = coo.data.astype(np.float64)

    a, b = fit_curve_params(config.min_dist, config.spread)
    n_epochs = config.n_epochs
    if weights.size:
        epochs_per_sample = weights.max() / weights
    else:
        epochs_per_sample = np.empty(0, dtype=np.float64)
    epochs_per_negative = epochs_per_sample / float(config.negative_sample_rate)
    next_sample = epochs_per_sample.copy()
    next_negative = epochs_per_negative.copy()

    alpha = config.initial_learning_rate
    for epoch in range(n_epochs):
        _sgd_epoch(
            coords,
            head,
            tail,
            epochs_per_sample,
            next_sample,
            epochs_per_negative,
            next_negative,
            rng_state,
            a,
            b,
            alpha,
            epoch,
        )
        alpha = config.initial_learning_rate * (1.0 - float(epoch) / float(n_epochs))
        if progress is not None:
            progress((epoch + 1) / n_epochs)

    if not np.isfinite(coords).all():
        raise ConfigError("optimization produced non-finite coordinates")
    return coords
