"""Neighborhood-preserving 2D projection of review vectors.

The recipe follows the standard manifold-projection pipeline: exact k-nearest
neighbors under Euclidean distance, per-point bandwidth calibration by
bisection, fuzzy symmetrization w = a + b - a*b, and a stochastic layout with
attractive forces on edges and repulsive forces on sampled non-edges under the
low-dimensional kernel 1 / (1 + a * d^(2b)). Exact neighbor search keeps the
dependency surface small at desk scale.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from numba import njit
from scipy import sparse
from scipy.optimize import curve_fit
from scipy.spatial.distance import cdist
from sklearn.base import BaseEstimator

from ._rng import rng_double

_SMOOTH_TOL = 1e-6
_MAX_GRAD = 4.0


@dataclass(frozen=True)
class ProjectConfig:
    k_neighbors: int = 15
    min_dist: float = 0.1
    epochs: int = 200
    negative_rate: int = 5
    init: str = "pca"
    seed: int = 0

    def __post_init__(self) -> None:
        if self.k_neighbors < 2:
            raise ValueError("k_neighbors must be >= 2")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if not self.min_dist > 0:
            raise ValueError("min_dist must be positive")
        if self.negative_rate < 0:
            raise ValueError("negative_rate must be >= 0")
        if self.init not in ("pca", "random"):
            raise ValueError("init must be 'pca' or 'random'")
        if self.seed < 0:
            raise ValueError("seed must be unsigned")


@dataclass(frozen=True)
class Projection2D:
    """2D coordinates row-aligned with the input, plus a quality score."""

    points: np.ndarray
    config: ProjectConfig
    quality: float


def pairwise_distances(x: np.ndarray) -> np.ndarray:
    # cdist computes from coordinate differences, so distances (and therefore
    # the whole layout) are exactly invariant to translating the inputs.
    x = np.asarray(x, dtype=np.float64)
    return cdist(x, x)


def neighbor_scales(knn_dists: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-point (rho, sigma): rho is the nearest-neighbor distance, sigma
    solves sum_j exp(-max(0, d_ij - rho_i) / sigma_i) = log2(k) by bisection."""
    n = knn_dists.shape[0]
    target = math.log2(k)
    rho = knn_dists[:, 0].copy()
    sigma = np.empty(n)
    for i in range(n):
        shifted = np.clip(knn_dists[i] - rho[i], 0.0, None)
        lo, hi, mid = 0.0, np.inf, 1.0
        for _ in range(100):
            total = float(np.exp(-shifted / mid).sum()) if mid > 0 else 0.0
            if abs(total - target) < _SMOOTH_TOL:
                break
            if total > target:
                hi = mid
                mid = (lo + hi) / 2.0
            else:
                lo = mid
                mid = mid * 2.0 if hi == np.inf else (lo + hi) / 2.0
        # Ties at rho can make the target unreachable; floor sigma instead of 0.
        sigma[i] = max(mid, 1e-12)
    return rho, sigma


def knn_fuzzy_graph(vectors: np.ndarray, k: int) -> sparse.csr_matrix:
    """Exact k-NN graph with locally scaled weights, fuzzily symmetrized.

    Weights lie in [0, 1]; the returned matrix is exactly symmetric. Duplicate
    points produce zero-distance edges with weight 1.
    """
    x = np.asarray(vectors, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError("vectors must be a 2D array")
    n = x.shape[0]
    if n <= k:
        raise ValueError(f"need more points than neighbors (D={n}, k={k})")

    dists = pairwise_distances(x)
    np.fill_diagonal(dists, np.inf)
    order = np.argsort(dists, axis=1, kind="stable")[:, :k]
    knn_dists = np.take_along_axis(dists, order, axis=1)
    rho, sigma = neighbor_scales(knn_dists, k)

    weights = np.exp(-np.clip(knn_dists - rho[:, None], 0.0, None) / sigma[:, None])
    rows = np.repeat(np.arange(n), k)
    directed = sparse.csr_matrix(
        (weights.ravel(), (rows, order.ravel())), shape=(n, n)
    )
    transpose = directed.T.tocsr()
    graph = directed + transpose - directed.multiply(transpose)
    graph.eliminate_zeros()
    return graph.tocsr()


def _fit_kernel_params(min_dist: float, spread: float = 1.0) -> tuple[float, float]:
    """Fit (a, b) of 1/(1 + a d^(2b)) to the offset exponential at min_dist."""

    def curve(x, a, b):
        return 1.0 / (1.0 + a * x ** (2.0 * b))

    xv = np.linspace(0.0, spread * 3.0, 300)
    yv = np.ones_like(xv)
    tail = xv >= min_dist
    yv[tail] = np.exp(-(xv[tail] - min_dist) / spread)
    (a, b), _ = curve_fit(curve, xv, yv, p0=(1.0, 1.0), maxfev=10_000)
    return float(a), float(b)


@njit(cache=True)
def _optimize_layout(coords, head, tail, epochs_per_sample, n_epochs, a, b,
                     negative_rate, seed):
    n_vertices = coords.shape[0]
    state = np.empty(1, dtype=np.uint64)
    state[0] = seed
    epoch_next = epochs_per_sample.copy()

    for epoch in range(n_epochs):
        alpha = 1.0 - epoch / n_epochs
        for e in range(head.shape[0]):
            if epoch_next[e] > epoch:
                continue
            epoch_next[e] += epochs_per_sample[e]
            i = head[e]
            j = tail[e]

            d2 = 0.0
            for d in range(2):
                diff = coords[i, d] - coords[j, d]
                d2 += diff * diff
            if d2 > 0.0:
                coeff = (-2.0 * a * b * d2 ** (b - 1.0)) / (a * d2**b + 1.0)
                for d in range(2):
                    g = coeff * (coords[i, d] - coords[j, d])
                    if g > _MAX_GRAD:
                        g = _MAX_GRAD
                    elif g < -_MAX_GRAD:
                        g = -_MAX_GRAD
                    coords[i, d] += g * alpha
                    coords[j, d] -= g * alpha

            for _ in range(negative_rate):
                v = int(rng_double(state) * n_vertices)
                if v >= n_vertices:
                    v = n_vertices - 1
                if v == i:
                    continue
                d2 = 0.0
                for d in range(2):
                    diff = coords[i, d] - coords[v, d]
                    d2 += diff * diff
                if d2 > 0.0:
                    coeff = 2.0 * b / ((0.001 + d2) * (a * d2**b + 1.0))
                    for d in range(2):
                        g = coeff * (coords[i, d] - coords[v, d])
                        if g > _MAX_GRAD:
                            g = _MAX_GRAD
                        elif g < -_MAX_GRAD:
                            g = -_MAX_GRAD
                        coords[i, d] += g * alpha
                else:
                    # Coincident but distinct points: push apart at full clip.
                    for d in range(2):
                        coords[i, d] += _MAX_GRAD * alpha
    return coords


def _initial_coords(data: np.ndarray | None, n: int, config: ProjectConfig) -> np.ndarray:
    if config.init == "pca":
        if data is None:
            raise ValueError("PCA initialization needs the high-dimensional data")
        x = np.asarray(data, dtype=np.float64)
        # (n*x - colsum)/n centers exactly even under a constant shift of x,
        # keeping the whole layout translation-invariant.
        count = x.shape[0]
        centered = (count * x - x.sum(axis=0)) / count
        _, s, vt = np.linalg.svd(centered, full_matrices=False)
        coords = centered @ vt[:2].T
        top = np.abs(coords).max()
        if top > 0:
            coords = coords * (10.0 / top)
        return np.ascontiguousarray(coords, dtype=np.float64)
    rng = np.random.default_rng(config.seed)
    return rng.uniform(-10.0, 10.0, size=(n, 2))


def layout2d(
    graph: sparse.spmatrix,
    config: ProjectConfig,
    data: np.ndarray | None = None,
) -> np.ndarray:
    """Optimize 2D coordinates for a fuzzy neighbor graph.

    Edges are attracted with frequency proportional to their weight; each
    processed edge also repels ``negative_rate`` uniformly sampled vertices.
    Deterministic given the config seed.
    """
    coo = sparse.triu(graph.tocoo(), k=1).tocoo()
    n = graph.shape[0]
    coords = _initial_coords(data, n, config)
    if coo.nnz == 0:
        return coords

    weights = coo.data.astype(np.float64)
    epochs_per_sample = weights.max() / weights
    a, b = _fit_kernel_params(config.min_dist)
    return _optimize_layout(
        coords,
        coo.row.astype(np.int64),
        coo.col.astype(np.int64),
        epochs_per_sample,
        config.epochs,
        a,
        b,
        config.negative_rate,
        np.uint64(config.seed),
    )


def trustworthiness(high: np.ndarray, low: np.ndarray, k: int) -> float:
    """Share of low-dimensional neighborhoods free of high-dimensional
    intruders, on the standard [0, 1] scale.

    Points that enter a k-neighborhood in the projection without being
    high-dimensional neighbors are penalized by their high-dimensional rank
    excess; zero penalty scores exactly 1.0.
    """
    high = np.asarray(high, dtype=np.float64)
    low = np.asarray(low, dtype=np.float64)
    n = high.shape[0]
    if low.shape[0] != n:
        raise ValueError("high and low must have the same number of rows")
    if not 1 <= k < n:
        raise ValueError(f"need 1 <= k < D (D={n}, k={k})")

    d_high = pairwise_distances(high)
    d_low = pairwise_distances(low)
    np.fill_diagonal(d_high, np.inf)
    np.fill_diagonal(d_low, np.inf)

    order_high = np.argsort(d_high, axis=1, kind="stable")
    order_low = np.argsort(d_low, axis=1, kind="stable")
    ranks = np.empty((n, n), dtype=np.int64)
    rows = np.arange(n)[:, None]
    ranks[rows, order_high] = np.arange(n)[None, :] + 1  # 1-based, self last

    knn_high = order_high[:, :k]
    knn_low = order_low[:, :k]

    penalty = 0
    for i in range(n):
        intruders = np.setdiff1d(knn_low[i], knn_high[i], assume_unique=True)
        penalty += int((ranks[i, intruders] - k).sum())

    if penalty == 0:
        return 1.0
    denom = n * k * (2 * n - 3 * k - 1)
    if denom <= 0:
        raise ValueError("k too large for the trustworthiness normalization")
    return 1.0 - 2.0 * penalty / denom


class NeighborProjection(BaseEstimator):
    """Estimator wrapper: fit_transform(X) -> 2D embedding.

    Exposes ``embedding_`` and ``trustworthiness_`` after fitting, in the
    style of other manifold learners (no out-of-sample transform).
    """

    def __init__(self, k_neighbors=15, min_dist=0.1, epochs=200,
                 negative_rate=5, init="pca", seed=0):
        self.k_neighbors = k_neighbors
        self.min_dist = min_dist
        self.epochs = epochs
        self.negative_rate = negative_rate
        self.init = init
        self.seed = seed

    @classmethod
    def from_config(cls, config: ProjectConfig) -> "NeighborProjection":
        return cls(**asdict(config))

    @property
    def config(self) -> ProjectConfig:
        return ProjectConfig(**self.get_params())

    def fit(self, X, y=None):
        config = self.config
        x = np.asarray(X, dtype=np.float64)
        graph = knn_fuzzy_graph(x, config.k_neighbors)
        coords = layout2d(graph, config, data=x)
        self.embedding_ = coords
        self.trustworthiness_ = trustworthiness(
            x, coords, min(config.k_neighbors, x.shape[0] - 1)
        )
        return self

    def fit_transform(self, X, y=None) -> np.ndarray:
        return self.fit(X).embedding_

    def projection(self) -> Projection2D:
        if not hasattr(self, "embedding_"):
            raise RuntimeError("NeighborProjection is not fitted")
        return Projection2D(
            points=self.embedding_.copy(),
            config=self.config,
            quality=self.trustworthiness_,
        )
