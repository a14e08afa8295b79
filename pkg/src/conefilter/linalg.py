"""Dense matrix primitives: products, norms, normalizations, seeded sampling.

All matrices follow a sample-per-column convention: a data matrix of shape
(O, N) holds one O-dimensional sample in each of its N columns.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "make_rng",
    "check_matrix",
    "matmul",
    "l2_normalize_rows",
    "l2_normalize_cols",
    "l1_sum",
    "gaussian_matrix",
]


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Deterministic random generator for a (seed, stream) pair.

    Backed by PCG64 keyed through ``SeedSequence(seed, spawn_key=(stream,))``,
    so the same pair reproduces an identical draw sequence on every platform.
    Distinct streams under one seed are statistically independent; normal
    variates come from numpy's ziggurat sampler.
    """
    seq = np.random.SeedSequence(entropy=seed, spawn_key=(stream,))
    return np.random.Generator(np.random.PCG64(seq))


def check_matrix(m: np.ndarray, name: str = "matrix") -> np.ndarray:
    """Validate and return a 2-D float64 matrix with finite entries."""
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {m.shape}")
    if m.shape[0] < 1 or m.shape[1] < 1:
        raise ValueError(f"{name} must have at least one row and column, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} contains non-finite entries")
    return m


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Matrix product a @ b with explicit shape checking."""
    a = check_matrix(a, "left operand")
    b = check_matrix(b, "right operand")
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"dimension mismatch: cannot multiply {a.shape} by {b.shape}")
    return a @ b


def l2_normalize_rows(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Scale each row to unit L2 norm.

    Returns the normalized matrix and the vector of original row norms.
    A row of exact zeros cannot be normalized and raises.
    """
    m = check_matrix(m)
    norms = np.linalg.norm(m, axis=1)
    if np.any(norms == 0.0):
        bad = int(np.flatnonzero(norms == 0.0)[0])
        raise ValueError(f"degenerate feature: row {bad} has zero norm")
    return m / norms[:, np.newaxis], norms


def l2_normalize_cols(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Scale each column to unit L2 norm.

    Returns the normalized matrix and the vector of original column norms.
    """
    m = check_matrix(m)
    norms = np.linalg.norm(m, axis=0)
    if np.any(norms == 0.0):
        bad = int(np.flatnonzero(norms == 0.0)[0])
        raise ValueError(f"degenerate sample: column {bad} has zero norm")
    return m / norms[np.newaxis, :], norms


def l1_sum(m: np.ndarray) -> float:
    """Sum of absolute values over all entries."""
    return float(np.abs(np.asarray(m, dtype=np.float64)).sum())


def gaussian_matrix(rows: int, cols: int, rng: np.random.Generator) -> np.ndarray:
    """Matrix of i.i.d. standard-normal entries drawn from ``rng``."""
    if rows < 1 or cols < 1:
        raise ValueError(f"matrix dimensions must be positive, got ({rows}, {cols})")
    return rng.standard_normal((rows, cols))
