"""The sparse filtering pipeline: forward pass, objective, gradient, trainer.

The pipeline maps a data matrix X (one sample per column) through four
stages:

1. linear projection      P = W @ X
2. element-wise activation F = g(P)
3. feature normalization   each row of F scaled to unit L2 norm
4. sample normalization    each column of the result scaled to unit L2 norm

Training minimizes the total activation (the entry-wise L1 norm) of the
final representation over W, by quasi-Newton descent or plain full-batch
gradient descent.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .linalg import (
    check_matrix,
    gaussian_matrix,
    l1_sum,
    l2_normalize_cols,
    l2_normalize_rows,
    make_rng,
    matmul,
)
from .nonlinearity import Nonlinearity

__all__ = [
    "ForwardTrace",
    "SFModel",
    "TrainConfig",
    "forward",
    "objective",
    "gradient",
    "finite_difference_gradient",
    "train",
    "transform",
    "apply_from_activation",
]


@dataclass
class ForwardTrace:
    """Every intermediate of one forward pass.

    ``feature_norms`` holds the per-row L2 norms divided out in stage 3
    (length L), ``sample_norms`` the per-column norms divided out in
    stage 4 (length N).
    """

    projected: np.ndarray
    activated: np.ndarray
    feature_normalized: np.ndarray
    output: np.ndarray
    feature_norms: np.ndarray
    sample_norms: np.ndarray


@dataclass
class SFModel:
    """A trained filter bank.

    ``frozen_feature_norms`` stores the feature norms of the final training
    batch so single samples can be transformed without recomputing batch
    statistics (see ``transform`` with ``norm_mode="frozen"``).
    """

    weights: np.ndarray
    nonlinearity: Nonlinearity
    frozen_feature_norms: np.ndarray | None = None

    @property
    def learned_dim(self) -> int:
        return self.weights.shape[0]

    @property
    def original_dim(self) -> int:
        return self.weights.shape[1]


@dataclass
class TrainConfig:
    """Options for ``train``.

    ``optimizer`` selects quasi-Newton descent ("lbfgs", the default; its
    iteration budget is ``iterations``) or fixed-step gradient descent
    ("gd", stepping by ``learning_rate`` for exactly ``iterations`` steps).
    Both are fully deterministic given the seed.  ``gradient_mode`` can fall
    back to the central-difference oracle for debugging.
    """

    iterations: int = 2000
    learning_rate: float = 0.05
    seed: int = 0
    optimizer: str = "lbfgs"
    gradient_mode: str = "analytic"
    record_history: bool = True

    def __post_init__(self) -> None:
        if self.iterations < 0:
            raise ValueError("iterations must be >= 0")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if self.optimizer not in ("lbfgs", "gd"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")
        if self.gradient_mode not in ("analytic", "finite_difference"):
            raise ValueError(f"unknown gradient_mode {self.gradient_mode!r}")


def forward(weights: np.ndarray, x: np.ndarray, nl: Nonlinearity) -> ForwardTrace:
    """Run stages 1-4 and return all intermediates."""
    weights = check_matrix(weights, "weights")
    x = check_matrix(x, "data")
    projected = matmul(weights, x)
    activated = nl.apply(projected)
    feature_normalized, feature_norms = l2_normalize_rows(activated)
    output, sample_norms = l2_normalize_cols(feature_normalized)
    return ForwardTrace(projected, activated, feature_normalized, output,
                        feature_norms, sample_norms)


def objective(trace: ForwardTrace) -> float:
    """Total activation of the final representation (entry-wise L1 norm)."""
    return l1_sum(trace.output)


def _gradient_from_trace(trace: ForwardTrace, x: np.ndarray, nl: Nonlinearity) -> np.ndarray:
    # Backpropagate d(sum |Z|)/dW through both normalizations; each
    # normalization couples the entries it shares a row/column with.
    g_out = np.sign(trace.output)
    z = trace.output
    ft = trace.feature_normalized
    # column normalization: v -> v/|v| gives grad (g - (g.z) z)/|v|
    g_ft = (g_out - z * np.sum(g_out * z, axis=0, keepdims=True)) / trace.sample_norms[np.newaxis, :]
    # row normalization, same form along the other axis
    g_f = (g_ft - ft * np.sum(g_ft * ft, axis=1, keepdims=True)) / trace.feature_norms[:, np.newaxis]
    g_proj = g_f * nl.derivative(trace.projected)
    return g_proj @ x.T


def gradient(weights: np.ndarray, x: np.ndarray, nl: Nonlinearity) -> np.ndarray:
    """Analytic gradient of the objective with respect to the weights."""
    trace = forward(weights, x, nl)
    return _gradient_from_trace(trace, x, nl)


def finite_difference_gradient(weights: np.ndarray, x: np.ndarray, nl: Nonlinearity,
                               step: float = 1e-6) -> np.ndarray:
    """Central-difference gradient of the objective; the reference oracle."""
    weights = check_matrix(weights, "weights").copy()
    grad = np.zeros_like(weights)
    for l in range(weights.shape[0]):
        for j in range(weights.shape[1]):
            orig = weights[l, j]
            weights[l, j] = orig + step
            hi = objective(forward(weights, x, nl))
            weights[l, j] = orig - step
            lo = objective(forward(weights, x, nl))
            weights[l, j] = orig
            grad[l, j] = (hi - lo) / (2.0 * step)
    return grad


def _warn_if_oscillating(history: np.ndarray, window: int = 50,
                         factor: float = 1.10) -> None:
    """Warn (once) when the objective rises more than 10% over a 50-step
    window; descent on this non-convex objective may legitimately bounce."""
    for t in range(window, history.size):
        if history[t] > factor * history[t - window]:
            warnings.warn(
                f"objective rose more than 10% between steps {t - window} and {t}; "
                "optimization may be oscillating",
                RuntimeWarning,
                stacklevel=3,
            )
            return


def _grad_for(weights: np.ndarray, x: np.ndarray, nl: Nonlinearity,
              trace: ForwardTrace, mode: str) -> np.ndarray:
    if mode == "analytic":
        return _gradient_from_trace(trace, x, nl)
    return finite_difference_gradient(weights, x, nl)


def _train_gd(weights: np.ndarray, x: np.ndarray, nl: Nonlinearity,
              cfg: TrainConfig) -> tuple[np.ndarray, list[float]]:
    history = []
    for step in range(cfg.iterations):
        try:
            trace = forward(weights, x, nl)
            loss = objective(trace)
        except ValueError as exc:
            # saturated activations can zero out a feature or sample
            raise FloatingPointError(
                f"degenerate forward pass at training step {step}: {exc}") from exc
        if not np.isfinite(loss):
            raise FloatingPointError(f"non-finite objective at training step {step}")
        history.append(loss)
        grad = _grad_for(weights, x, nl, trace, cfg.gradient_mode)
        weights = weights - cfg.learning_rate * grad
    return weights, history


def _train_lbfgs(weights: np.ndarray, x: np.ndarray, nl: Nonlinearity,
                 cfg: TrainConfig) -> tuple[np.ndarray, list[float]]:
    from scipy.optimize import minimize

    shape = weights.shape
    history = []

    def value_and_grad(flat: np.ndarray) -> tuple[float, np.ndarray]:
        w = flat.reshape(shape)
        try:
            trace = forward(w, x, nl)
        except (ValueError, FloatingPointError):
            # degenerate region (e.g. saturated activations); make the line
            # search back off instead of crashing
            return np.inf, np.zeros(flat.size)
        return objective(trace), _grad_for(w, x, nl, trace, cfg.gradient_mode).ravel()

    def record(flat: np.ndarray) -> None:
        try:
            history.append(objective(forward(flat.reshape(shape), x, nl)))
        except (ValueError, FloatingPointError):
            history.append(np.inf)

    result = minimize(value_and_grad, weights.ravel(), jac=True, method="L-BFGS-B",
                      callback=record,
                      options={"maxiter": cfg.iterations, "ftol": 1e-14, "gtol": 1e-12})
    return result.x.reshape(shape), history


def train(x: np.ndarray, learned_dim: int, nl: Nonlinearity,
          cfg: TrainConfig) -> tuple[SFModel, np.ndarray]:
    """Fit a filter bank by minimizing the total activation.

    Weights start as i.i.d. standard normals drawn from the config seed
    (stream 1, so data generated under the same seed stays independent).
    Returns the model and the objective history: the initial value, one
    value per optimizer iteration, and the final value.  A sustained
    objective increase only warns: descent on this non-convex landscape may
    legitimately oscillate.
    """
    x = check_matrix(x, "data")
    if learned_dim < 1:
        raise ValueError("learned_dim must be >= 1")
    rng = make_rng(cfg.seed, stream=1)
    weights = gaussian_matrix(learned_dim, x.shape[0], rng)

    initial = objective(forward(weights, x, nl))
    if not np.isfinite(initial):
        raise FloatingPointError("non-finite objective at training step 0")

    if cfg.iterations == 0:
        steps: list[float] = []
    elif cfg.optimizer == "gd":
        # the per-step loop records the pre-update objective, so its first
        # entry repeats the initial value and is dropped below
        weights, steps = _train_gd(weights, x, nl, cfg)
        steps = steps[1:]
    else:
        weights, steps = _train_lbfgs(weights, x, nl, cfg)

    final_trace = forward(weights, x, nl)
    final_loss = objective(final_trace)
    if not np.isfinite(final_loss):
        raise FloatingPointError(f"non-finite objective at training step {len(steps)}")

    history_list = [initial] + steps
    if history_list[-1] != final_loss:
        history_list.append(final_loss)
    history = np.array(history_list)
    _warn_if_oscillating(history)
    if not cfg.record_history and history.size > 1:
        history = np.array([history[0], history[-1]])

    model = SFModel(weights=weights, nonlinearity=nl,
                    frozen_feature_norms=final_trace.feature_norms.copy())
    return model, history


def transform(model: SFModel, x_new: np.ndarray, norm_mode: str = "batch") -> np.ndarray:
    """Map new data through the trained pipeline.

    ``batch`` recomputes the feature norms over ``x_new`` (a single sample
    then degenerates to the uniform representation, since each feature row
    normalizes to one).  ``frozen`` reuses the training-time feature norms,
    which is the mode that makes single-sample queries meaningful.
    """
    x_new = check_matrix(x_new, "data")
    if x_new.shape[0] != model.original_dim:
        raise ValueError(
            f"data has {x_new.shape[0]} rows but the model expects {model.original_dim}")
    if norm_mode == "batch":
        return forward(model.weights, x_new, model.nonlinearity).output
    if norm_mode == "frozen":
        if model.frozen_feature_norms is None:
            raise ValueError("frozen norm_mode requires a model with frozen feature norms")
        activated = model.nonlinearity.apply(matmul(model.weights, x_new))
        feature_normalized = activated / model.frozen_feature_norms[:, np.newaxis]
        output, _ = l2_normalize_cols(feature_normalized)
        return output
    raise ValueError(f"unknown norm_mode {norm_mode!r}, expected 'batch' or 'frozen'")


def apply_from_activation(f_raw: np.ndarray, nl: Nonlinearity) -> np.ndarray:
    """Run the pipeline from the activation stage onward (no projection).

    Exposes the sign-folding behaviour directly: under the smooth absolute
    value, inputs differing only in entry signs produce identical outputs.
    """
    f_raw = check_matrix(f_raw, "activation input")
    activated = nl.apply(f_raw)
    feature_normalized, _ = l2_normalize_rows(activated)
    output, _ = l2_normalize_cols(feature_normalized)
    return output
