"""Element-wise activation applied after the linear projection.

Three variants are supported.  The smooth absolute value is the one that
folds sign information away and therefore preserves collinear structure;
the sigmoid and the soft rectifier are kept around to demonstrate how that
structure is lost when the folding property is absent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

KINDS = ("softabs", "sigmoid", "softrelu")

__all__ = ["Nonlinearity", "KINDS", "soft_abs", "sigmoid", "soft_relu"]


@dataclass(frozen=True)
class Nonlinearity:
    """An activation function tag plus its smoothing constant.

    ``epsilon`` keeps the soft absolute value differentiable at zero and
    floors the soft rectifier; both outputs stay strictly positive, which
    the downstream normalizations rely on.
    """

    kind: str
    epsilon: float = 1e-8

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown nonlinearity {self.kind!r}, expected one of {KINDS}")
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")

    def apply(self, x):
        """Evaluate the activation element-wise."""
        x = np.asarray(x, dtype=np.float64)
        if self.kind == "softabs":
            out = np.sqrt(x * x + self.epsilon)
        elif self.kind == "sigmoid":
            out = _stable_sigmoid(x)
        else:
            out = np.where(x > 0.0, x, self.epsilon)
        return out if out.ndim else float(out)

    def derivative(self, x):
        """Element-wise derivative of the activation.

        The soft rectifier uses the subgradient 0 at its kink.
        """
        x = np.asarray(x, dtype=np.float64)
        if self.kind == "softabs":
            out = x / np.sqrt(x * x + self.epsilon)
        elif self.kind == "sigmoid":
            s = _stable_sigmoid(x)
            out = s * (1.0 - s)
        else:
            out = np.where(x > 0.0, 1.0, 0.0)
        return out if out.ndim else float(out)


def _stable_sigmoid(x: np.ndarray) -> np.ndarray:
    # Evaluate exp only on the non-overflowing side of each entry.
    flat = np.atleast_1d(np.asarray(x, dtype=np.float64))
    out = np.empty_like(flat)
    pos = flat >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-flat[pos]))
    ex = np.exp(flat[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out.reshape(np.shape(x))


def soft_abs(epsilon: float = 1e-8) -> Nonlinearity:
    return Nonlinearity("softabs", epsilon)


def sigmoid(epsilon: float = 1e-8) -> Nonlinearity:
    return Nonlinearity("sigmoid", epsilon)


def soft_relu(epsilon: float = 1e-8) -> Nonlinearity:
    return Nonlinearity("softrelu", epsilon)
