"""Seeded synthetic data generators.

All generators are pure functions of their spec and generator state, with
labels aligned positionally to columns.  Radial specs allow negative radii,
so "same cluster" means same line through the origin rather than same ray;
the sign-folding activation is exactly what makes such clusters cohere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "RadialClusterSpec",
    "GaussianClusterSpec",
    "gen_uniform_box",
    "gen_toy_collinear",
    "gen_radial_clusters",
    "gen_gaussian_clusters",
    "default_radial_specs",
    "default_gaussian_specs",
]


@dataclass(frozen=True)
class RadialClusterSpec:
    """A cluster drawn in polar coordinates.

    Radius uniform over ``radial_range`` (which may dip below zero), angle
    uniform within ``angle_noise`` of ``angle_center``.
    """

    radial_range: tuple[float, float]
    angle_center: float
    angle_noise: float
    count: int

    def __post_init__(self) -> None:
        lo, hi = self.radial_range
        if not lo < hi:
            raise ValueError(f"radial range must satisfy lo < hi, got ({lo}, {hi})")
        if self.angle_noise < 0:
            raise ValueError("angle_noise must be >= 0")
        if self.count < 1:
            raise ValueError("count must be >= 1")


@dataclass(frozen=True)
class GaussianClusterSpec:
    """An isotropic Gaussian blob."""

    mean: tuple[float, ...]
    variance: float
    count: int

    def __post_init__(self) -> None:
        if not self.variance > 0:
            raise ValueError("variance must be positive")
        if self.count < 1:
            raise ValueError("count must be >= 1")


def default_radial_specs(count_per_cluster: int = 3,
                         angle_noise: float = math.pi / 45) -> list[RadialClusterSpec]:
    """Three angularly separated clusters with overlapping radial extents."""
    return [
        RadialClusterSpec((-2.0, 0.0), math.pi / 9, angle_noise, count_per_cluster),
        RadialClusterSpec((0.0, 3.0), 2 * math.pi / 9, angle_noise, count_per_cluster),
        RadialClusterSpec((2.0, 4.0), 4 * math.pi / 9, angle_noise, count_per_cluster),
    ]


def default_gaussian_specs(count_per_cluster: int = 3,
                           variance: float = 0.05) -> list[GaussianClusterSpec]:
    """Three well-separated blobs; the first and last sit on opposite rays."""
    return [
        GaussianClusterSpec((1.0, 1.0), variance, count_per_cluster),
        GaussianClusterSpec((2.0, -1.0), variance, count_per_cluster),
        GaussianClusterSpec((-1.0, -1.0), variance, count_per_cluster),
    ]


def gen_uniform_box(n: int, o: int, lo: float, hi: float,
                    rng: np.random.Generator) -> np.ndarray:
    """n samples in o dimensions with i.i.d. Uniform[lo, hi) coordinates."""
    if not lo < hi:
        raise ValueError(f"need lo < hi, got ({lo}, {hi})")
    if n < 1 or o < 1:
        raise ValueError("n and o must be >= 1")
    return rng.uniform(lo, hi, size=(o, n))


def gen_toy_collinear(rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Three 2-D points: two exactly collinear, one at a free angle.

    Radii are Uniform(-5, 5); the shared angle is pi/3.  The third point's
    angle is redrawn while it lies within 0.05 rad of the shared line, so
    the free point is always distinguishable from the collinear pair.
    """
    angle = math.pi / 3
    radii = rng.uniform(-5.0, 5.0, size=3)
    third_angle = rng.uniform(0.0, math.pi)
    while (abs(third_angle - angle) < 0.05
           or abs(third_angle - (angle + math.pi)) < 0.05):
        third_angle = rng.uniform(0.0, math.pi)
    angles = np.array([angle, angle, third_angle])
    points = np.vstack([radii * np.cos(angles), radii * np.sin(angles)])
    return points, np.array([0, 0, 1])


def gen_radial_clusters(specs: list[RadialClusterSpec],
                        rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Polar-coordinate clusters; label i marks points from specs[i]."""
    if not specs:
        raise ValueError("need at least one cluster spec")
    columns = []
    labels = []
    for label, spec in enumerate(specs):
        lo, hi = spec.radial_range
        radii = rng.uniform(lo, hi, size=spec.count)
        angles = rng.uniform(spec.angle_center - spec.angle_noise,
                             spec.angle_center + spec.angle_noise,
                             size=spec.count)
        columns.append(np.vstack([radii * np.cos(angles), radii * np.sin(angles)]))
        labels.extend([label] * spec.count)
    return np.hstack(columns), np.array(labels)


def gen_gaussian_clusters(specs: list[GaussianClusterSpec],
                          rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Isotropic Gaussian blobs; label i marks points from specs[i]."""
    if not specs:
        raise ValueError("need at least one cluster spec")
    dim = len(specs[0].mean)
    columns = []
    labels = []
    for label, spec in enumerate(specs):
        if len(spec.mean) != dim:
            raise ValueError("all cluster means must share one dimensionality")
        mean = np.asarray(spec.mean, dtype=np.float64)
        draws = mean[:, np.newaxis] + math.sqrt(spec.variance) * rng.standard_normal(
            (dim, spec.count))
        columns.append(draws)
        labels.extend([label] * spec.count)
    return np.hstack(columns), np.array(labels)
