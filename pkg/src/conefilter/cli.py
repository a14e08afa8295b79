"""Command-line harness: train models, run experiments, render filter fields.

Subcommands: ``train``, ``experiment``, ``filters``, ``cone-bounds``.
Options resolve as: built-in defaults < JSON config file (--config) <
explicit flags.  Every output embeds the resolved config; reruns with the
same config produce byte-identical files.  The CONEFILTER_THREADS env var
caps the trial worker pool (default: serial).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .datagen import (
    default_gaussian_specs,
    default_radial_specs,
    gen_gaussian_clusters,
    gen_radial_clusters,
    gen_toy_collinear,
    gen_uniform_box,
)
from .experiments import EXPERIMENTS, ExperimentConfig, run_experiment
from .geometry import filter_mesh
from .linalg import make_rng
from .nonlinearity import KINDS, Nonlinearity
from .output import read_data_csv, write_csv, write_json
from .sparse_filter import SFModel, TrainConfig, train

DEFAULTS = {
    "trials": 1,
    "seed": 0,
    "iterations": 2000,
    "lr": 0.05,
    "optimizer": "lbfgs",
    "nonlinearity": "softabs",
    "epsilon": 1e-8,
    "l_dim": None,
    "out": "out",
    "format": "csv",
    "resolution": 60,
    "mc_samples": 100_000,
    "beta": 1.0,
    "generator": "toy_collinear",
    "gen_count": 3,
    "data": None,
    "model": None,
    "experiment": None,
    "no_plots": False,
    "xmin": -5.0,
    "xmax": 5.0,
    "ymin": -5.0,
    "ymax": 5.0,
}


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file with option defaults; flags override it")
    p.add_argument("--seed", type=int)
    p.add_argument("--iterations", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--optimizer", choices=["lbfgs", "gd"])
    p.add_argument("--nonlinearity", choices=list(KINDS))
    p.add_argument("--epsilon", type=float)
    p.add_argument("--l-dim", dest="l_dim", type=int)
    p.add_argument("--out")
    p.add_argument("--format", choices=["csv", "json"])
    p.add_argument("--no-plots", dest="no_plots", action="store_const", const=True)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="conefilter",
        description="sparse filtering experiments with deterministic seeds")
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="fit a model and save it")
    _add_common(p_train)
    p_train.add_argument("--data", help="CSV input, one sample per row with a header")
    p_train.add_argument("--generator",
                         choices=["toy_collinear", "radial", "gaussian", "uniform"])
    p_train.add_argument("--gen-count", dest="gen_count", type=int,
                         help="samples per cluster (or total for uniform)")

    p_exp = sub.add_parser("experiment", help="run a named experiment over seeded trials")
    _add_common(p_exp)
    p_exp.add_argument("--experiment")
    p_exp.add_argument("--trials", type=int)
    p_exp.add_argument("--resolution", type=int)
    p_exp.add_argument("--mc-samples", dest="mc_samples", type=int)
    p_exp.add_argument("--beta", type=float)
    for flag in ("xmin", "xmax", "ymin", "ymax"):
        p_exp.add_argument(f"--{flag}", type=float)

    p_filters = sub.add_parser("filters", help="render filter distance fields for a saved model")
    _add_common(p_filters)
    p_filters.add_argument("--model", help="directory containing model.csv and model.json")
    p_filters.add_argument("--resolution", type=int)
    for flag in ("xmin", "xmax", "ymin", "ymax"):
        p_filters.add_argument(f"--{flag}", type=float)

    p_cone = sub.add_parser("cone-bounds", help="alias for experiment --experiment cone_bounds")
    _add_common(p_cone)
    p_cone.add_argument("--trials", type=int)
    p_cone.add_argument("--mc-samples", dest="mc_samples", type=int)

    return parser


def resolve_options(args: argparse.Namespace) -> dict:
    """Layer defaults, config file, then explicit flags."""
    resolved = dict(DEFAULTS)
    config_path = getattr(args, "config", None)
    if config_path:
        try:
            file_values = json.loads(Path(config_path).read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ValueError(f"config file not found: {config_path}")
        except json.JSONDecodeError as exc:
            raise ValueError(f"config file {config_path} is not valid JSON: {exc}")
        unknown = set(file_values) - set(DEFAULTS)
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(sorted(unknown))}")
        resolved.update(file_values)
    for key, value in vars(args).items():
        if key in ("command", "config") or value is None:
            continue
        resolved[key] = value
    return resolved


def _generate_training_data(opts: dict):
    rng = make_rng(opts["seed"])
    gen = opts["generator"]
    count = opts["gen_count"]
    if gen == "toy_collinear":
        x, _ = gen_toy_collinear(rng)
    elif gen == "radial":
        x, _ = gen_radial_clusters(default_radial_specs(count_per_cluster=count), rng)
    elif gen == "gaussian":
        x, _ = gen_gaussian_clusters(default_gaussian_specs(count_per_cluster=count), rng)
    else:
        x = gen_uniform_box(max(count, 2), 2, -5.0, 5.0, rng)
    return x


def save_model(model: SFModel, history, outdir: Path, config: dict) -> list[Path]:
    paths = []
    w = model.weights
    fieldnames = [f"w_{j}" for j in range(w.shape[1])]
    rows = [{f"w_{j}": float(w[l, j]) for j in range(w.shape[1])} for l in range(w.shape[0])]
    write_csv(outdir / "model.csv", fieldnames, rows, config)
    paths.append(outdir / "model.csv")
    meta = {
        "nonlinearity": model.nonlinearity.kind,
        "epsilon": model.nonlinearity.epsilon,
        "frozen_feature_norms": list(model.frozen_feature_norms),
        "seed": config.get("seed"),
        "l_dim": model.learned_dim,
        "o_dim": model.original_dim,
        "loss_history": [float(v) for v in history],
    }
    write_json(outdir / "model.json", meta, config)
    paths.append(outdir / "model.json")
    hist_rows = [{"iteration": i, "objective": float(v)} for i, v in enumerate(history)]
    write_csv(outdir / "loss_history.csv", ["iteration", "objective"], hist_rows, config)
    paths.append(outdir / "loss_history.csv")
    return paths


def load_model(model_dir: Path) -> SFModel:
    meta_path = model_dir / "model.json"
    csv_path = model_dir / "model.csv"
    if not meta_path.exists() or not csv_path.exists():
        raise ValueError(f"no model found in {model_dir} (need model.csv and model.json)")
    meta = json.loads(meta_path.read_text(encoding="utf-8"))
    lines = [ln for ln in csv_path.read_text(encoding="utf-8").splitlines()
             if ln and not ln.startswith("#")]
    weights = np.array([[float(tok) for tok in ln.split(",")] for ln in lines[1:]])
    nl = Nonlinearity(meta["nonlinearity"], meta["epsilon"])
    frozen = np.asarray(meta["frozen_feature_norms"], dtype=np.float64)
    return SFModel(weights=weights, nonlinearity=nl, frozen_feature_norms=frozen)


def cmd_train(opts: dict) -> list[Path]:
    if opts["data"]:
        x = read_data_csv(Path(opts["data"]))
    else:
        x = _generate_training_data(opts)
    l_dim = opts["l_dim"] or 2
    nl = Nonlinearity(opts["nonlinearity"], opts["epsilon"])
    cfg = TrainConfig(iterations=opts["iterations"], learning_rate=opts["lr"],
                      seed=opts["seed"], optimizer=opts["optimizer"])
    model, history = train(x, l_dim, nl, cfg)
    outdir = Path(opts["out"])
    config = _public_config(opts, "train")
    paths = save_model(model, history, outdir, config)
    if not opts["no_plots"]:
        from .plots import plot_loss_history
        plot_loss_history(history, outdir / "loss_history.png")
        paths.append(outdir / "loss_history.png")
    return paths


def cmd_experiment(opts: dict) -> list[Path]:
    name = opts["experiment"]
    if name is None:
        raise ValueError(f"no experiment given; valid: {', '.join(EXPERIMENTS)}")
    if name not in EXPERIMENTS:
        raise ValueError(f"unknown experiment {name!r}; valid: {', '.join(EXPERIMENTS)}")
    cfg = ExperimentConfig(
        experiment=name,
        trials=opts["trials"],
        base_seed=opts["seed"],
        iterations=opts["iterations"],
        learning_rate=opts["lr"],
        optimizer=opts["optimizer"],
        nonlinearity=opts["nonlinearity"],
        epsilon=opts["epsilon"],
        l_dim=opts["l_dim"],
        resolution=opts["resolution"],
        mc_samples=opts["mc_samples"],
        beta=opts["beta"],
        mesh_box=(opts["xmin"], opts["xmax"], opts["ymin"], opts["ymax"]),
    )
    rows, summary, extras = run_experiment(cfg)
    outdir = Path(opts["out"])
    config = _public_config(opts, "experiment")
    paths = []
    if opts["format"] == "csv":
        write_csv(outdir / "results.csv", list(rows[0].keys()), rows, config)
        write_csv(outdir / "summary.csv", list(summary[0].keys()), summary, config)
        paths += [outdir / "results.csv", outdir / "summary.csv"]
    else:
        write_json(outdir / "results.json", {"rows": rows}, config)
        write_json(outdir / "summary.json", {"summary": summary}, config)
        paths += [outdir / "results.json", outdir / "summary.json"]
    if not opts["no_plots"]:
        from .plots import render_experiment_figures
        paths += render_experiment_figures(name, rows, summary, extras, outdir)
    return paths


def cmd_filters(opts: dict) -> list[Path]:
    if not opts["model"]:
        raise ValueError("filters requires --model pointing at a trained model directory")
    model = load_model(Path(opts["model"]))
    xs, ys, grids = filter_mesh(model, opts["xmin"], opts["xmax"], opts["ymin"],
                                opts["ymax"], opts["resolution"])
    outdir = Path(opts["out"])
    config = _public_config(opts, "filters")
    paths = []
    for j, grid in enumerate(grids):
        rows = [{"x": float(xs[xi]), "y": float(ys[yi]), "distance": float(grid[yi, xi])}
                for yi in range(len(ys)) for xi in range(len(xs))]
        path = outdir / f"filter_e{j}.csv"
        write_csv(path, ["x", "y", "distance"], rows, config)
        paths.append(path)
    if not opts["no_plots"]:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        for j, grid in enumerate(grids):
            fig, ax = plt.subplots(figsize=(5.5, 4.5))
            mesh = ax.contourf(xs, ys, grid, levels=24, cmap="viridis")
            fig.colorbar(mesh, ax=ax, label=f"distance to basis {j}")
            ax.set_xlabel("x")
            ax.set_ylabel("y")
            ax.set_title(f"filter field for basis {j}")
            fig.tight_layout()
            path = outdir / f"filter_e{j}.png"
            fig.savefig(path, dpi=110)
            plt.close(fig)
            paths.append(path)
    return paths


def _public_config(opts: dict, command: str) -> dict:
    config = {"command": command}
    config.update({k: opts[k] for k in sorted(DEFAULTS)})
    return config


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        opts = resolve_options(args)
        if args.command == "train":
            paths = cmd_train(opts)
        elif args.command == "experiment":
            paths = cmd_experiment(opts)
        elif args.command == "filters":
            paths = cmd_filters(opts)
        else:
            opts["experiment"] = "cone_bounds"
            paths = cmd_experiment(opts)
    except (ValueError, FloatingPointError, OSError, IndexError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for path in paths:
        print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
