"""Figure rendering for the report path.

Figures are written next to the delimited output with the Agg backend, so
runs work headless and rerenders are byte-stable.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .experiments import KNN_K_LIST

_DPI = 110


def _save(fig, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def plot_loss_history(history, path: Path) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(np.arange(len(history)), history)
    ax.set_xlabel("iteration")
    ax.set_ylabel("objective")
    ax.set_title("training objective")
    fig.tight_layout()
    _save(fig, path)


def plot_toy_collinear(rows, histories, outdir: Path) -> None:
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    for h in histories:
        ax1.plot(np.arange(len(h)), h, alpha=0.5, linewidth=0.9)
    ax1.set_xlabel("iteration")
    ax1.set_ylabel("objective")
    ax1.set_title("objective per trial")
    objs = [r["final_objective"] for r in rows]
    seeds = [r["seed"] for r in rows]
    ok = np.array([bool(r["success"]) for r in rows])
    objs = np.array(objs)
    seeds = np.array(seeds)
    ax2.scatter(seeds[ok], objs[ok], color="tab:green", label="success", s=25)
    if (~ok).any():
        ax2.scatter(seeds[~ok], objs[~ok], color="tab:red", label="failure", s=25)
    ax2.axhline(3.0, color="gray", linestyle=":", linewidth=1)
    ax2.set_xlabel("seed")
    ax2.set_ylabel("final objective")
    ax2.set_title("end states")
    ax2.legend()
    fig.tight_layout()
    _save(fig, outdir / "toy_collinear.png")


def plot_radial_nonlin_compare(summary, outdir: Path) -> None:
    kinds = [s["nonlinearity"] for s in summary]
    means = [s["purity_mean"] for s in summary]
    errs = [s["purity_stderr"] for s in summary]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar(kinds, means, yerr=errs, capsize=4, color=["tab:blue", "tab:orange", "tab:green"])
    ax.set_ylabel("mean cluster-consistency purity")
    ax.set_ylim(0.0, 1.05)
    ax.set_title("activation comparison on radial clusters")
    fig.tight_layout()
    _save(fig, outdir / "radial_nonlin_compare.png")


def plot_metric_showdown(summary, outdir: Path) -> None:
    fig, ax = plt.subplots(figsize=(7, 4))
    labels = []
    within = []
    between = []
    for s in summary:
        labels.append(f"{s['algorithm']}\n{s['dataset']}")
        within.append(s["within_mean"])
        between.append(s["between_mean"])
    pos = np.arange(len(labels))
    width = 0.38
    ax.bar(pos - width / 2, within, width, label="within-cluster")
    ax.bar(pos + width / 2, between, width, label="between-cluster")
    ax.set_xticks(pos, labels, fontsize=8)
    ax.set_ylabel("mean representation distance")
    ax.set_title("metric showdown")
    ax.legend()
    fig.tight_layout()
    _save(fig, outdir / "metric_showdown.png")


def plot_knn_explore(summary, outdir: Path) -> None:
    fig, axes = plt.subplots(1, 2, figsize=(11, 4))
    for ax, dataset in zip(axes, ("radial_dense", "gauss_dense")):
        for metric, style in (("cosine", "o-"), ("euclidean", "s--")):
            entry = next(s for s in summary
                         if s["dataset"] == dataset and s["metric"] == metric)
            ys = [entry[f"acc_k{k}_mean"] for k in KNN_K_LIST]
            ax.plot(KNN_K_LIST, ys, style, label=metric, markersize=4)
        ax.set_xscale("log")
        ax.set_xlabel("k")
        ax.set_ylabel("mean accuracy")
        ax.set_title(dataset)
        ax.legend()
    fig.tight_layout()
    _save(fig, outdir / "knn_explore.png")


def plot_cone_bounds(rows, outdir: Path) -> None:
    fig, ax = plt.subplots(figsize=(10, 4.5))
    idx = np.arange(len(rows))
    lower = np.array([r["lower"] for r in rows])
    upper = np.array([r["upper"] for r in rows])
    est = np.array([r["mc_estimate"] for r in rows])
    se = np.array([r["mc_stderr"] for r in rows])
    ax.vlines(idx, lower, upper, color="tab:blue", linewidth=3, alpha=0.5,
              label="analytic bracket")
    ax.errorbar(idx, est, yerr=3 * se, fmt="o", color="tab:red", markersize=3,
                label="Monte-Carlo (3 s.e.)")
    ax.set_yscale("log")
    ax.set_xlabel("grid cell")
    ax.set_ylabel("probability")
    ax.set_title("neighborhood-capture probability: bounds vs simulation")
    labels = [f"O={r['o_dim']},m={r['m']:g},M={r['big_m']:g},d={r['delta']:g}"
              for r in rows]
    ax.set_xticks(idx, labels, rotation=90, fontsize=6)
    ax.legend()
    fig.tight_layout()
    _save(fig, outdir / "cone_bounds.png")


def plot_filter_mesh(extras, outdir: Path) -> None:
    xs, ys, grids = extras["xs"], extras["ys"], extras["grids"]
    data, labels = extras["data"], extras["labels"]
    for j, grid in enumerate(grids):
        fig, ax = plt.subplots(figsize=(5.5, 4.5))
        mesh = ax.contourf(xs, ys, grid, levels=24, cmap="viridis")
        fig.colorbar(mesh, ax=ax, label=f"distance to basis {j}")
        for lab, marker in zip(sorted(set(int(v) for v in labels)), ("o", "^", "s")):
            pts = data[:, labels == lab]
            ax.scatter(pts[0], pts[1], marker=marker, edgecolor="white",
                       color="tab:red", zorder=3, label=f"cluster {lab}")
        ax.set_xlabel("x")
        ax.set_ylabel("y")
        ax.set_title(f"filter field for basis {j}")
        ax.legend(loc="upper right", fontsize=7)
        fig.tight_layout()
        _save(fig, outdir / f"filter_e{j}.png")


def render_experiment_figures(experiment: str, rows, summary, extras, outdir: Path) -> list[Path]:
    before = set(outdir.glob("*.png")) if outdir.exists() else set()
    if experiment == "toy_collinear":
        plot_toy_collinear(rows, extras.get("histories", []), outdir)
    elif experiment == "radial_nonlin_compare":
        plot_radial_nonlin_compare(summary, outdir)
    elif experiment == "metric_showdown":
        plot_metric_showdown(summary, outdir)
    elif experiment == "knn_explore":
        plot_knn_explore(summary, outdir)
    elif experiment == "cone_bounds":
        plot_cone_bounds(rows, outdir)
    elif experiment == "filter_mesh":
        plot_filter_mesh(extras, outdir)
    return sorted(set(outdir.glob("*.png")) - before)
