"""Seeded experiment implementations behind the CLI.

Each experiment maps a config to per-trial result rows plus a summary
block.  Per-trial seeds derive as base_seed + trial_index, so results are
identical whether trials run serially or on a worker pool.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .baselines import KnnConfig, knn_classify, soft_kmeans_fit, soft_kmeans_represent
from .datagen import (
    GaussianClusterSpec,
    RadialClusterSpec,
    default_gaussian_specs,
    default_radial_specs,
    gen_gaussian_clusters,
    gen_radial_clusters,
    gen_toy_collinear,
)
from .geometry import (
    ConeBoundParams,
    cone_probability_bounds,
    cone_probability_lower_condensed,
    monte_carlo_cone_probability,
)
from .linalg import make_rng
from .nonlinearity import Nonlinearity
from .sparse_filter import TrainConfig, train, transform

EXPERIMENTS = (
    "toy_collinear",
    "radial_nonlin_compare",
    "metric_showdown",
    "knn_explore",
    "cone_bounds",
    "filter_mesh",
)

KNN_K_LIST = (2, 3, 5, 7, 10, 15, 20, 25, 50, 75, 100)

CONE_GRID = tuple(
    (o, m, big_m_factor * m, delta)
    for o in (2, 3, 5)
    for m in (1.0, 2.0)
    for big_m_factor in (1.0, 2.0)
    for delta in (0.05, 0.1)
)


@dataclass
class ExperimentConfig:
    experiment: str
    trials: int = 1
    base_seed: int = 0
    iterations: int = 2000
    learning_rate: float = 0.05
    optimizer: str = "lbfgs"
    nonlinearity: str = "softabs"
    epsilon: float = 1e-8
    l_dim: int | None = None
    resolution: int = 60
    mc_samples: int = 100_000
    beta: float = 1.0
    mesh_box: tuple[float, float, float, float] = (-5.0, 5.0, -5.0, 5.0)

    def __post_init__(self) -> None:
        if self.experiment not in EXPERIMENTS:
            raise ValueError(
                f"unknown experiment {self.experiment!r}; valid: {', '.join(EXPERIMENTS)}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")

    def train_config(self, seed: int) -> TrainConfig:
        return TrainConfig(iterations=self.iterations, learning_rate=self.learning_rate,
                           seed=seed, optimizer=self.optimizer)

    def nl(self, kind: str | None = None) -> Nonlinearity:
        return Nonlinearity(kind or self.nonlinearity, self.epsilon)


def worker_count() -> int:
    """Worker pool size from CONEFILTER_THREADS (default: serial)."""
    raw = os.environ.get("CONEFILTER_THREADS", "1")
    try:
        n = int(raw)
    except ValueError as exc:
        raise ValueError(f"CONEFILTER_THREADS must be an integer, got {raw!r}") from exc
    return max(1, n)


def run_trials(fn, trials: int):
    """Evaluate fn(trial_index) for each trial, optionally on a thread pool.

    Results come back ordered by trial index regardless of scheduling.
    """
    workers = worker_count()
    if workers == 1:
        return [fn(i) for i in range(trials)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(trials)))


# ---------------------------------------------------------------------------
# shared metrics


def stable_argmax(z: np.ndarray, tol: float = 0.05) -> np.ndarray:
    """Per-column argmax with near-ties broken toward the smaller index.

    The objective permits exact filter duplicates; a duplicated pair leaves
    components tied up to floating-point noise, and a plain argmax would
    flip between them.  Components within ``tol`` of the column max count
    as tied (genuine filter contrasts on these problems are an order of
    magnitude larger).
    """
    mx = z.max(axis=0)
    return np.argmax(z >= mx[np.newaxis, :] - tol, axis=0)


def cluster_consistency_purity(assignments: np.ndarray, labels: np.ndarray) -> float:
    """Fraction of points agreeing with their true cluster's modal assignment.

    Measures whether same-cluster points land on the same filter, which is
    the neighborhood-preservation property; it does not demand that
    different clusters use different filters (the pipeline never promises
    large-distance separation).
    """
    total = 0
    for lab in np.unique(labels):
        _, counts = np.unique(assignments[labels == lab], return_counts=True)
        total += counts.max()
    return total / labels.size


def within_between_distances(reps: np.ndarray, labels: np.ndarray) -> tuple[float, float]:
    """Mean pairwise distance among same-label vs different-label columns."""
    n = reps.shape[1]
    within, between = [], []
    for i in range(n):
        for j in range(i + 1, n):
            d = float(np.linalg.norm(reps[:, i] - reps[:, j]))
            (within if labels[i] == labels[j] else between).append(d)
    return float(np.mean(within)), float(np.mean(between))


def basis_distances(z: np.ndarray) -> np.ndarray:
    """(L, N) matrix of distances from each column to each basis vector."""
    l = z.shape[0]
    return np.stack([np.linalg.norm(z - np.eye(l)[:, [j]], axis=0) for j in range(l)])


def _mean_stderr(values) -> tuple[float, float]:
    arr = np.asarray(values, dtype=np.float64)
    stderr = float(arr.std(ddof=1) / np.sqrt(arr.size)) if arr.size > 1 else 0.0
    return float(arr.mean()), stderr


def same_ray_gaussian_specs(count_per_cluster: int = 8,
                            variance: float = 0.05) -> list[GaussianClusterSpec]:
    """Gaussian benchmark whose labels only the Euclidean metric can see.

    Two clusters sit on one ray at different radii (angularly identical),
    the third off to the side; angle-based neighbors cannot distinguish
    the first two.
    """
    return [
        GaussianClusterSpec((1.0, 1.0), variance, count_per_cluster),
        GaussianClusterSpec((3.0, 3.0), variance, count_per_cluster),
        GaussianClusterSpec((-1.0, 2.0), variance, count_per_cluster),
    ]


def full_line_radial_specs(count_per_cluster: int = 12,
                           angle_noise: float = math.pi / 45) -> list[RadialClusterSpec]:
    """Radial benchmark whose labels only the angle can see.

    Each cluster spans a full line through the origin (radius range
    symmetric around zero), so the radius carries no label information and
    isotropic neighborhoods get confused wherever the lines crowd.
    """
    return [
        RadialClusterSpec((-2.0, 2.0), math.pi / 9, angle_noise, count_per_cluster),
        RadialClusterSpec((-3.0, 3.0), 2 * math.pi / 9, angle_noise, count_per_cluster),
        RadialClusterSpec((-4.0, 4.0), 4 * math.pi / 9, angle_noise, count_per_cluster),
    ]


def train_test_split(x: np.ndarray, y: np.ndarray, rng: np.random.Generator,
                     train_frac: float = 2 / 3):
    n = x.shape[1]
    perm = rng.permutation(n)
    cut = int(round(n * train_frac))
    return x[:, perm[:cut]], y[perm[:cut]], x[:, perm[cut:]], y[perm[cut:]]


# ---------------------------------------------------------------------------
# experiments


def run_toy_collinear(cfg: ExperimentConfig):
    """Train on the three-point set with an exactly collinear pair.

    Success means the final objective lands within 1% of its ideal value N
    and the collinear pair / free point sit on two distinct basis vectors.
    """
    l_dim = cfg.l_dim or 2
    nl = cfg.nl()

    def one(trial: int):
        seed = cfg.base_seed + trial
        x, labels = gen_toy_collinear(make_rng(seed))
        model, history = train(x, l_dim, nl, cfg.train_config(seed))
        z = transform(model, x, norm_mode="batch")
        d = basis_distances(z)
        # distance of the pair (worst of its two points) to its best basis
        pair_per_basis = d[:, 0:2].max(axis=1)
        pair_basis = int(np.argmin(pair_per_basis))
        pair_basis_dist = float(pair_per_basis[pair_basis])
        other = [j for j in range(l_dim) if j != pair_basis]
        third_basis_dist = float(min(d[j, 2] for j in other)) if other else float("nan")
        final_obj = float(history[-1])
        success = (final_obj <= 1.01 * x.shape[1]
                   and pair_basis_dist <= 1e-3 and third_basis_dist <= 1e-3)
        row = {
            "trial": trial,
            "seed": seed,
            "final_objective": final_obj,
            "pair_z_distance": float(np.linalg.norm(z[:, 0] - z[:, 1])),
            "pair_basis_dist": pair_basis_dist,
            "third_basis_dist": third_basis_dist,
            "success": int(success),
        }
        return row, history

    results = run_trials(one, cfg.trials)
    rows = [r for r, _ in results]
    histories = [h for _, h in results]
    succ = [r["success"] for r in rows]
    obj_mean, obj_se = _mean_stderr([r["final_objective"] for r in rows])
    summary = [{
        "trials": cfg.trials,
        "success_rate": float(np.mean(succ)),
        "final_objective_mean": obj_mean,
        "final_objective_stderr": obj_se,
        "pair_z_distance_mean": float(np.mean([r["pair_z_distance"] for r in rows])),
    }]
    return rows, summary, {"histories": histories}


def run_radial_nonlin_compare(cfg: ExperimentConfig):
    """Same radial data per trial through all three activations."""
    l_dim = cfg.l_dim or 3

    def one(trial: int):
        seed = cfg.base_seed + trial
        x, labels = gen_radial_clusters(default_radial_specs(), make_rng(seed))
        out = []
        for kind in ("softabs", "sigmoid", "softrelu"):
            model, history = train(x, l_dim, cfg.nl(kind), cfg.train_config(seed))
            z = transform(model, x, norm_mode="batch")
            within, between = within_between_distances(z, labels)
            out.append({
                "nonlinearity": kind,
                "trial": trial,
                "seed": seed,
                "final_objective": float(history[-1]),
                "purity": cluster_consistency_purity(stable_argmax(z), labels),
                "within_mean": within,
                "between_mean": between,
            })
        return out

    nested = run_trials(one, cfg.trials)
    rows = [row for kind in ("softabs", "sigmoid", "softrelu")
            for trial_rows in nested for row in trial_rows
            if row["nonlinearity"] == kind]
    summary = []
    for kind in ("softabs", "sigmoid", "softrelu"):
        sub = [r for r in rows if r["nonlinearity"] == kind]
        purity_mean, purity_se = _mean_stderr([r["purity"] for r in sub])
        summary.append({
            "nonlinearity": kind,
            "trials": cfg.trials,
            "purity_mean": purity_mean,
            "purity_stderr": purity_se,
            "perfect_purity_rate": float(np.mean([r["purity"] == 1.0 for r in sub])),
            "within_mean": float(np.mean([r["within_mean"] for r in sub])),
            "between_mean": float(np.mean([r["between_mean"] for r in sub])),
        })
    return rows, summary, {}


def run_metric_showdown(cfg: ExperimentConfig):
    """Sparse filtering vs soft k-means on radially vs Euclidean-structured data.

    The merge statistic is the distance between the two antipodal clusters'
    mean learned representations on the Euclidean-structured set; sign
    folding maps those clusters onto one line, so the pipeline cannot keep
    them apart.
    """
    l_dim = cfg.l_dim or 3
    nl = cfg.nl()

    def one(trial: int):
        seed = cfg.base_seed + trial
        # one substream per dataset, so adding or reordering datasets never
        # shifts another dataset's draws
        x_cos, y_cos = gen_radial_clusters(default_radial_specs(), make_rng(seed))
        x_euc, y_euc = gen_gaussian_clusters(default_gaussian_specs(),
                                             make_rng(seed, stream=3))
        out = []
        for dataset, (x, y) in (("cosine", (x_cos, y_cos)), ("euclid", (x_euc, y_euc))):
            model, _ = train(x, l_dim, nl, cfg.train_config(seed))
            z = transform(model, x, norm_mode="batch")
            within, between = within_between_distances(z, y)
            merge = float("nan")
            if dataset == "euclid":
                merge = float(np.linalg.norm(
                    z[:, y == 0].mean(axis=1) - z[:, y == 2].mean(axis=1)))
            out.append({
                "dataset": dataset, "algorithm": "sparse_filter", "trial": trial,
                "seed": seed, "within_mean": within, "between_mean": between,
                "separated": int(within < between), "antipodal_merge_distance": merge,
            })
            skm = soft_kmeans_fit(x, 3, beta=cfg.beta, iterations=100,
                                  rng=make_rng(seed, stream=2))
            reps = np.stack([soft_kmeans_represent(skm, x[:, i])
                             for i in range(x.shape[1])], axis=1)
            within, between = within_between_distances(reps, y)
            out.append({
                "dataset": dataset, "algorithm": "soft_kmeans", "trial": trial,
                "seed": seed, "within_mean": within, "between_mean": between,
                "separated": int(within < between), "antipodal_merge_distance": float("nan"),
            })
        return out

    nested = run_trials(one, cfg.trials)
    rows = [row for dataset in ("cosine", "euclid")
            for algorithm in ("sparse_filter", "soft_kmeans")
            for trial_rows in nested for row in trial_rows
            if row["dataset"] == dataset and row["algorithm"] == algorithm]
    summary = []
    for dataset in ("cosine", "euclid"):
        for algorithm in ("sparse_filter", "soft_kmeans"):
            sub = [r for r in rows if r["dataset"] == dataset and r["algorithm"] == algorithm]
            within_mean, within_se = _mean_stderr([r["within_mean"] for r in sub])
            between_mean, between_se = _mean_stderr([r["between_mean"] for r in sub])
            entry = {
                "dataset": dataset,
                "algorithm": algorithm,
                "trials": cfg.trials,
                "separated_rate": float(np.mean([r["separated"] for r in sub])),
                "within_mean": within_mean,
                "within_stderr": within_se,
                "between_mean": between_mean,
                "between_stderr": between_se,
            }
            merges = [r["antipodal_merge_distance"] for r in sub
                      if not np.isnan(r["antipodal_merge_distance"])]
            entry["antipodal_merge_distance_mean"] = (
                float(np.mean(merges)) if merges else float("nan"))
            summary.append(entry)
    return rows, summary, {}


def run_knn_explore(cfg: ExperimentConfig):
    """Nearest-neighbor accuracy under both metrics across the k grid.

    The dense variants carry the full accuracy curves; the sparse variants
    reproduce the small-sample regime where isotropic neighborhoods start
    absorbing points from adjacent rays.
    """

    def one(trial: int):
        seed = cfg.base_seed + trial
        # one substream per dataset (generation and split), so datasets stay
        # independent of each other and of list ordering
        datasets = {
            "radial_dense": gen_radial_clusters(
                default_radial_specs(count_per_cluster=60), make_rng(seed)),
            "gauss_dense": gen_gaussian_clusters(
                same_ray_gaussian_specs(60), make_rng(seed, stream=3)),
            "radial_sparse": gen_radial_clusters(
                full_line_radial_specs(12), make_rng(seed, stream=7)),
            "gauss_sparse": gen_gaussian_clusters(
                same_ray_gaussian_specs(8), make_rng(seed, stream=9)),
        }
        out = []
        for di, (dataset, (x, y)) in enumerate(datasets.items()):
            tr_x, tr_y, te_x, te_y = train_test_split(x, y, make_rng(seed, stream=20 + di))
            for metric in ("cosine", "euclidean"):
                row = {"dataset": dataset, "metric": metric, "trial": trial, "seed": seed}
                for k in KNN_K_LIST:
                    key = f"acc_k{k}"
                    if k <= tr_x.shape[1]:
                        pred = knn_classify(tr_x, tr_y, te_x, KnnConfig(k=k, metric=metric))
                        row[key] = float(np.mean(pred == te_y))
                    else:
                        row[key] = float("nan")
                out.append(row)
        return out

    nested = run_trials(one, cfg.trials)
    order = [("radial_dense", "cosine"), ("radial_dense", "euclidean"),
             ("gauss_dense", "cosine"), ("gauss_dense", "euclidean"),
             ("radial_sparse", "cosine"), ("radial_sparse", "euclidean"),
             ("gauss_sparse", "cosine"), ("gauss_sparse", "euclidean")]
    rows = [row for dataset, metric in order
            for trial_rows in nested for row in trial_rows
            if row["dataset"] == dataset and row["metric"] == metric]
    summary = []
    for dataset, metric in order:
        sub = [r for r in rows if r["dataset"] == dataset and r["metric"] == metric]
        entry = {"dataset": dataset, "metric": metric, "trials": cfg.trials}
        valid_all = []
        for k in KNN_K_LIST:
            vals = [r[f"acc_k{k}"] for r in sub if not np.isnan(r[f"acc_k{k}"])]
            entry[f"acc_k{k}_mean"] = float(np.mean(vals)) if vals else float("nan")
            valid_all.extend(vals)
        if valid_all:
            entry["acc_overall_mean"], entry["acc_overall_stderr"] = _mean_stderr(valid_all)
        else:
            entry["acc_overall_mean"] = entry["acc_overall_stderr"] = float("nan")
        summary.append(entry)
    return rows, summary, {}


def run_cone_bounds(cfg: ExperimentConfig):
    """Probability bracket per grid cell with its Monte-Carlo estimate.

    Raw bound values are kept alongside [0, 1]-clamped ones, and the
    condensed lower-bound variant is reported for comparison since the two
    published forms disagree by a length factor.
    """
    rows = []
    for idx, (o, m, big_m, delta) in enumerate(CONE_GRID):
        params = ConeBoundParams(o_dim=o, delta=delta, m=m, big_m=big_m)
        lower, upper = cone_probability_bounds(params)
        est, se = monte_carlo_cone_probability(
            params, cfg.mc_samples, make_rng(cfg.base_seed + idx, stream=6))
        rows.append({
            "o_dim": o, "m": m, "big_m": big_m, "delta": delta,
            "lower": lower, "upper": upper,
            "lower_condensed": cone_probability_lower_condensed(params),
            "lower_clamped": min(max(lower, 0.0), 1.0),
            "upper_clamped": min(max(upper, 0.0), 1.0),
            "mc_estimate": est, "mc_stderr": se,
            "inside_sandwich": int(lower - 3 * se <= est <= upper + 3 * se),
        })
    inside = [r["inside_sandwich"] for r in rows]
    summary = [{
        "cells": len(rows),
        "inside_sandwich_count": int(np.sum(inside)),
        "inside_sandwich_rate": float(np.mean(inside)),
        "mc_samples": cfg.mc_samples,
    }]
    return rows, summary, {}


def run_filter_mesh(cfg: ExperimentConfig):
    """Train on the toy set, then map each filter's distance field over a grid.

    Single run from the base seed; the trials count is not used here.
    """
    from .geometry import filter_mesh  # deferred: geometry imports sparse_filter

    l_dim = cfg.l_dim or 2
    nl = cfg.nl()
    seed = cfg.base_seed
    x, labels = gen_toy_collinear(make_rng(seed))
    model, history = train(x, l_dim, nl, cfg.train_config(seed))
    xmin, xmax, ymin, ymax = cfg.mesh_box
    xs, ys, grids = filter_mesh(model, xmin, xmax, ymin, ymax, cfg.resolution)
    rows = []
    for j, grid in enumerate(grids):
        for yi in range(cfg.resolution):
            for xi in range(cfg.resolution):
                rows.append({"basis": j, "x": float(xs[xi]), "y": float(ys[yi]),
                             "distance": float(grid[yi, xi])})
    summary = [{
        "seed": seed,
        "final_objective": float(history[-1]),
        "resolution": cfg.resolution,
        "bases": len(grids),
        "distance_min": float(min(g.min() for g in grids)),
        "distance_max": float(max(g.max() for g in grids)),
    }]
    return rows, summary, {"model": model, "xs": xs, "ys": ys, "grids": grids,
                           "data": x, "labels": labels}


RUNNERS = {
    "toy_collinear": run_toy_collinear,
    "radial_nonlin_compare": run_radial_nonlin_compare,
    "metric_showdown": run_metric_showdown,
    "knn_explore": run_knn_explore,
    "cone_bounds": run_cone_bounds,
    "filter_mesh": run_filter_mesh,
}


def run_experiment(cfg: ExperimentConfig):
    return RUNNERS[cfg.experiment](cfg)
