"""Metrics, the collinear decomposition, distance/probability bounds, and
representation-filter machinery.

Two analytic results are made executable here.  The first bounds the
learned-space Euclidean distance of two samples by a function of their
cosine distance and their stage-3 norms (``neighbor_distance_bound``).
The second brackets the probability that a point drawn uniformly inside a
hyper-conical filter lands in the Euclidean neighborhood of the filter's
center line (``cone_probability_bounds``), with a Monte-Carlo oracle as an
independent check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .sparse_filter import SFModel, transform

__all__ = [
    "cosine_distance",
    "euclidean_distance",
    "collinear_decompose",
    "NeighborBound",
    "neighbor_distance_bound",
    "neighbor_bound_from_pair",
    "representation_filter",
    "filter_mesh",
    "hypersphere_volume",
    "cone_volume",
    "ConeBoundParams",
    "cone_probability_bounds",
    "cone_probability_lower_condensed",
    "monte_carlo_cone_probability",
]


def _as_vector(v, name: str) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64).ravel()
    if v.size == 0:
        raise ValueError(f"{name} is empty")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} contains non-finite entries")
    return v


def cosine_distance(u, v) -> float:
    """1 - cos(angle between u and v), in [0, 2]."""
    u = _as_vector(u, "u")
    v = _as_vector(v, "v")
    if u.size != v.size:
        raise ValueError(f"length mismatch: {u.size} vs {v.size}")
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise ValueError("cosine distance undefined for zero vectors")
    c = float(np.dot(u, v) / (nu * nv))
    return 1.0 - max(-1.0, min(1.0, c))


def euclidean_distance(u, v) -> float:
    """L2 norm of u - v."""
    u = _as_vector(u, "u")
    v = _as_vector(v, "v")
    if u.size != v.size:
        raise ValueError(f"length mismatch: {u.size} vs {v.size}")
    return float(np.linalg.norm(u - v))


def collinear_decompose(x1, x2) -> tuple[float, np.ndarray]:
    """Split x2 into a multiple of x1 plus an orthogonal residual.

    Returns (k, b) with x2 = k*x1 + b and <b, x1> = 0.  The projection
    coefficient is the unique choice that minimizes |b|.
    """
    x1 = _as_vector(x1, "x1")
    x2 = _as_vector(x2, "x2")
    if x1.size != x2.size:
        raise ValueError(f"length mismatch: {x1.size} vs {x2.size}")
    denom = float(np.dot(x1, x1))
    if denom == 0.0:
        raise ValueError("cannot decompose against a zero vector")
    k = float(np.dot(x2, x1) / denom)
    b = x2 - k * x1
    return k, b


@dataclass
class NeighborBound:
    """Inputs of the near-collinear distance bound, plus the bound itself.

    ``delta`` is the cosine distance of the original pair, ``k`` the
    collinearity coefficient of sample 2 against sample 1, ``l2_f1``/
    ``l2_f2`` the stage-3 column norms of the two samples, and
    ``learned_dim`` the representation dimensionality.  The pair must be
    oriented so k * l2_f1 >= l2_f2 (see ``neighbor_bound_from_pair``).
    """

    delta: float
    k: float
    l2_f1: float
    l2_f2: float
    learned_dim: int
    epsilon_bound: float = field(init=False)

    def __post_init__(self) -> None:
        if self.delta < 0:
            raise ValueError("delta must be >= 0")
        if self.l2_f1 <= 0 or self.l2_f2 <= 0:
            raise ValueError("stage-3 norms must be positive")
        if self.learned_dim < 1:
            raise ValueError("learned_dim must be >= 1")
        angular = abs(math.sqrt(max(0.0, 2.0 * self.delta - self.delta ** 2)))
        self.epsilon_bound = self.learned_dim * (
            (self.k + angular) / self.l2_f2 - 1.0 / self.l2_f1)


def neighbor_distance_bound(nb: NeighborBound) -> float:
    """Guaranteed ceiling on the learned-space distance of a near-collinear pair."""
    return nb.epsilon_bound


def neighbor_bound_from_pair(x1, x2, l2_f1: float, l2_f2: float,
                             learned_dim: int) -> NeighborBound:
    """Build the bound inputs from an original-space pair.

    The derivation of the bound expands sample 2 as k * sample 1 plus an
    orthogonal residual and requires the collinear displacement coefficient
    k * l2_f1 / l2_f2 - 1 to be nonnegative; exactly one orientation of the
    pair satisfies this (both do at exact collinearity), so the pair is
    swapped when needed.  Reflected pairs (k <= 0) are rejected since the
    bound targets small cosine distances only.
    """
    delta = cosine_distance(x1, x2)
    k, _ = collinear_decompose(x1, x2)
    if k * l2_f1 < l2_f2:
        k, _ = collinear_decompose(x2, x1)
        l2_f1, l2_f2 = l2_f2, l2_f1
    if k <= 0.0:
        raise ValueError("pair is reflected (k <= 0); the bound applies to nearly-collinear pairs")
    return NeighborBound(delta=delta, k=k, l2_f1=l2_f1, l2_f2=l2_f2,
                         learned_dim=learned_dim)


def representation_filter(model: SFModel, x, basis_index: int,
                          norm_mode: str = "frozen") -> float:
    """Distance of a point's learned representation from one basis vector.

    Bounded by [0, sqrt(2)] for activations with positive outputs, since
    representations live on the unit sphere in the closed positive orthant.
    """
    if not 0 <= basis_index < model.learned_dim:
        raise IndexError(
            f"basis index {basis_index} out of range for {model.learned_dim} filters")
    x = _as_vector(x, "x")
    z = transform(model, x[:, np.newaxis], norm_mode=norm_mode)[:, 0]
    basis = np.zeros(model.learned_dim)
    basis[basis_index] = 1.0
    return euclidean_distance(z, basis)


def filter_mesh(model: SFModel, xmin: float, xmax: float, ymin: float, ymax: float,
                resolution: int) -> tuple[np.ndarray, np.ndarray, list[np.ndarray]]:
    """Filter values over a 2-D grid, one (resolution x resolution) array per basis.

    The whole mesh goes through the pipeline as a single batch, so the
    stage-3 statistics come from the mesh itself.  Grid extremes are
    included.  Only defined for two-dimensional inputs.
    """
    if model.original_dim != 2:
        raise ValueError("mesh rendering defined for O=2 only")
    if resolution < 2:
        raise ValueError("resolution must be >= 2")
    xs = np.linspace(xmin, xmax, resolution)
    ys = np.linspace(ymin, ymax, resolution)
    grid_x, grid_y = np.meshgrid(xs, ys)
    points = np.vstack([grid_x.ravel(), grid_y.ravel()])
    z = transform(model, points, norm_mode="batch")
    grids = []
    for j in range(model.learned_dim):
        basis = np.zeros((model.learned_dim, 1))
        basis[j, 0] = 1.0
        dist = np.linalg.norm(z - basis, axis=0)
        grids.append(dist.reshape(resolution, resolution))
    return xs, ys, grids


def hypersphere_volume(n: int, r: float) -> float:
    """Volume of the n-ball of radius r: pi^(n/2) / Gamma(n/2 + 1) * r^n."""
    if n < 1:
        raise ValueError("dimension must be >= 1")
    if not r > 0:
        raise ValueError("radius must be positive")
    return math.pi ** (n / 2.0) / math.gamma(n / 2.0 + 1.0) * r ** n


def cone_volume(n: int, base_radius: float, height: float) -> float:
    """Volume of the n-dimensional cone: base (n-1)-ball volume * height / n."""
    if n < 2:
        raise ValueError("cone dimension must be >= 2")
    return hypersphere_volume(n - 1, base_radius) * height / n


@dataclass
class ConeBoundParams:
    """Geometry of the neighborhood-capture probability question.

    A point sits at distance ``m`` from the origin inside a hyper-conical
    filter; data occupy a region bounded by ``big_m``; ``delta`` is the
    Euclidean neighborhood radius; ``o_dim`` the ambient dimensionality.
    """

    o_dim: int
    delta: float
    m: float
    big_m: float

    def __post_init__(self) -> None:
        if self.o_dim < 2:
            raise ValueError("o_dim must be >= 2")
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        if not 0 < self.m <= self.big_m:
            raise ValueError("need 0 < m <= big_m")


def _gamma_ratio(o_dim: int) -> float:
    return math.gamma((o_dim + 1) / 2.0) / math.gamma((o_dim + 2) / 2.0)


def cone_probability_bounds(p: ConeBoundParams) -> tuple[float, float]:
    """Bracket on the probability that a uniform point in the widest
    admissible cone falls within ``delta`` of the filter center.

    The lower bound follows the volume-ratio chain
    O*delta*m^(O-1)/M^O * Gamma((O+1)/2)/Gamma((O+2)/2); the upper bound is
    O*delta/m times the same Gamma ratio.  Values are returned raw: for
    large delta they may exceed 1 and callers that report probabilities
    should clamp to [0, 1].
    """
    ratio = _gamma_ratio(p.o_dim)
    lower = p.o_dim * p.delta * p.m ** (p.o_dim - 1) / p.big_m ** p.o_dim * ratio
    upper = p.o_dim * p.delta / p.m * ratio
    return lower, upper


def cone_probability_lower_condensed(p: ConeBoundParams) -> float:
    """Condensed variant of the lower bound, O*delta/(M/m)^(O-1) * Gamma ratio.

    Differs from the volume-ratio form by a length factor; both are
    reported so the discrepancy stays visible.
    """
    ratio = _gamma_ratio(p.o_dim)
    return p.o_dim * p.delta / (p.big_m / p.m) ** (p.o_dim - 1) * ratio


def monte_carlo_cone_probability(p: ConeBoundParams, n_samples: int,
                                 rng: np.random.Generator) -> tuple[float, float]:
    """Estimate the capture probability by uniform sampling inside the cone.

    The cone has its apex at the origin, axis through the center point at
    distance ``m``, half-angle arctan(delta/m) and height ``big_m``.
    Sampling rejects from the bounding cylinder (acceptance rate 1/O).
    Returns (estimate, standard error).
    """
    if n_samples < 10_000:
        raise ValueError("n_samples must be at least 10000")
    slope = p.delta / p.m
    max_radius = p.big_m * slope
    base_dim = p.o_dim - 1

    hits = 0
    accepted = 0
    # Center of the neighborhood lies on the axis at height m; in cone
    # coordinates only the height coordinate is nonzero.
    while accepted < n_samples:
        # acceptance rate from cylinder to cone is 1/O; oversample a little
        batch = max(int((n_samples - accepted) * p.o_dim * 1.25), 10_000)
        heights = rng.uniform(0.0, p.big_m, size=batch)
        # uniform points in the (O-1)-ball of radius max_radius
        directions = rng.standard_normal(size=(batch, base_dim))
        norms = np.linalg.norm(directions, axis=1)
        norms[norms == 0.0] = 1.0
        radii = max_radius * rng.uniform(0.0, 1.0, size=batch) ** (1.0 / base_dim)
        lateral = directions / norms[:, np.newaxis] * radii[:, np.newaxis]

        inside = radii <= heights * slope
        heights = heights[inside]
        lateral = lateral[inside]
        take = min(heights.size, n_samples - accepted)
        heights = heights[:take]
        lateral = lateral[:take]
        d2 = (heights - p.m) ** 2 + np.sum(lateral * lateral, axis=1)
        hits += int(np.count_nonzero(d2 <= p.delta ** 2))
        accepted += take

    estimate = hits / n_samples
    stderr = math.sqrt(estimate * (1.0 - estimate) / n_samples)
    return estimate, stderr
