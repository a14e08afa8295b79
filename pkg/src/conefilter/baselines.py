"""Comparison algorithms: Euclidean soft k-means and dual-metric KNN.

Soft k-means is the Euclidean counterpart used to contrast against the
cosine-style soft clustering the filter pipeline performs.  KNN supports
both metrics; the cosine variant is implemented exactly as L2-normalize
followed by the Euclidean path, which reuses the same distance code.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .linalg import check_matrix

__all__ = [
    "SoftKMeansModel",
    "soft_kmeans_fit",
    "soft_kmeans_represent",
    "KnnConfig",
    "knn_classify",
]


@dataclass
class SoftKMeansModel:
    centroids: np.ndarray  # (O, K), one centroid per column
    beta: float

    @property
    def k_clusters(self) -> int:
        return self.centroids.shape[1]


def _responsibilities(sq_dist: np.ndarray, beta: float) -> np.ndarray:
    # softmax of -beta * squared distance, stabilized per point
    logits = -beta * sq_dist
    logits = logits - logits.max(axis=1, keepdims=True)
    r = np.exp(logits)
    return r / r.sum(axis=1, keepdims=True)


def _squared_distances(x: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    # (N, K) squared Euclidean distances, columns of x against centroids
    diff = x.T[:, np.newaxis, :] - centroids.T[np.newaxis, :, :]
    return np.sum(diff * diff, axis=2)


def soft_kmeans_fit(x: np.ndarray, k_clusters: int, beta: float, iterations: int,
                    rng: np.random.Generator) -> SoftKMeansModel:
    """Alternate soft assignments and responsibility-weighted centroid updates.

    Centroids start as k distinct data columns.  A cluster whose total
    responsibility collapses below 1e-12 is re-seeded from a random data
    column (with a warning) rather than left to divide by zero.
    """
    x = check_matrix(x, "data")
    n = x.shape[1]
    if not 1 <= k_clusters <= n:
        raise ValueError(f"k_clusters must be in [1, {n}], got {k_clusters}")
    if not beta > 0:
        raise ValueError("beta must be positive")
    centroids = x[:, rng.choice(n, size=k_clusters, replace=False)].copy()

    for _ in range(iterations):
        resp = _responsibilities(_squared_distances(x, centroids), beta)
        weights = resp.sum(axis=0)
        dead = np.flatnonzero(weights < 1e-12)
        if dead.size:
            for k in dead:
                centroids[:, k] = x[:, rng.integers(0, n)]
            warnings.warn(
                f"re-seeded {dead.size} empty cluster(s) from random data columns",
                RuntimeWarning,
                stacklevel=2,
            )
            resp = _responsibilities(_squared_distances(x, centroids), beta)
            weights = resp.sum(axis=0)
        centroids = (x @ resp) / weights[np.newaxis, :]

    return SoftKMeansModel(centroids=centroids, beta=beta)


def soft_kmeans_represent(model: SoftKMeansModel, x) -> np.ndarray:
    """Responsibility vector of one point: non-negative, sums to one."""
    x = np.asarray(x, dtype=np.float64).ravel()
    if x.size != model.centroids.shape[0]:
        raise ValueError(
            f"point has dimension {x.size} but centroids have {model.centroids.shape[0]}")
    sq = _squared_distances(x[:, np.newaxis], model.centroids)
    return _responsibilities(sq, model.beta)[0]


@dataclass
class KnnConfig:
    k: int
    metric: str = "euclidean"

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.metric not in ("euclidean", "cosine"):
            raise ValueError(f"unknown metric {self.metric!r}")


def _normalize_columns_strict(m: np.ndarray, name: str) -> np.ndarray:
    norms = np.linalg.norm(m, axis=0)
    if np.any(norms == 0.0):
        raise ValueError(f"zero vector in {name}: cosine metric undefined")
    return m / norms[np.newaxis, :]


def knn_classify(train_x: np.ndarray, train_y, test_x: np.ndarray,
                 cfg: KnnConfig) -> np.ndarray:
    """Majority-vote nearest neighbors; vote ties go to the smallest label.

    The cosine metric normalizes every column to unit length and then runs
    the identical Euclidean machinery, so both metrics share one code path
    after that step.
    """
    train_x = check_matrix(train_x, "training data")
    test_x = check_matrix(test_x, "test data")
    train_y = np.asarray(train_y)
    if train_y.shape[0] != train_x.shape[1]:
        raise ValueError(
            f"{train_y.shape[0]} labels for {train_x.shape[1]} training columns")
    if cfg.k > train_x.shape[1]:
        raise ValueError(f"k={cfg.k} exceeds the {train_x.shape[1]} training samples")

    if cfg.metric == "cosine":
        train_x = _normalize_columns_strict(train_x, "training data")
        test_x = _normalize_columns_strict(test_x, "test data")

    diff = test_x.T[:, np.newaxis, :] - train_x.T[np.newaxis, :, :]
    sq_dist = np.sum(diff * diff, axis=2)  # (n_test, n_train)
    neighbor_idx = np.argsort(sq_dist, axis=1, kind="stable")[:, :cfg.k]

    labels = np.empty(test_x.shape[1], dtype=train_y.dtype)
    for i in range(test_x.shape[1]):
        votes = train_y[neighbor_idx[i]]
        values, counts = np.unique(votes, return_counts=True)
        labels[i] = values[np.flatnonzero(counts == counts.max()).min()]
    return labels
