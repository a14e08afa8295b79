"""Feature-distribution learning via sparse filtering, with executable
structure-preservation checks, clustering baselines, synthetic benchmark
generators, and a deterministic experiment CLI."""

from .linalg import (
    gaussian_matrix,
    l1_sum,
    l2_normalize_cols,
    l2_normalize_rows,
    make_rng,
    matmul,
)
from .nonlinearity import Nonlinearity, sigmoid, soft_abs, soft_relu
from .sparse_filter import (
    ForwardTrace,
    SFModel,
    TrainConfig,
    apply_from_activation,
    finite_difference_gradient,
    forward,
    gradient,
    objective,
    train,
    transform,
)
from .geometry import (
    ConeBoundParams,
    NeighborBound,
    collinear_decompose,
    cone_probability_bounds,
    cone_probability_lower_condensed,
    cone_volume,
    cosine_distance,
    euclidean_distance,
    filter_mesh,
    hypersphere_volume,
    monte_carlo_cone_probability,
    neighbor_bound_from_pair,
    neighbor_distance_bound,
    representation_filter,
)
from .baselines import (
    KnnConfig,
    SoftKMeansModel,
    knn_classify,
    soft_kmeans_fit,
    soft_kmeans_represent,
)
from .datagen import (
    GaussianClusterSpec,
    RadialClusterSpec,
    default_gaussian_specs,
    default_radial_specs,
    gen_gaussian_clusters,
    gen_radial_clusters,
    gen_toy_collinear,
    gen_uniform_box,
)

__version__ = "0.1.0"
