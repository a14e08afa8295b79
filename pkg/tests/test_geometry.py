import math
import warnings

import numpy as np
import pytest

from conefilter import (
    ConeBoundParams,
    NeighborBound,
    SFModel,
    TrainConfig,
    collinear_decompose,
    cone_probability_bounds,
    cone_probability_lower_condensed,
    cone_volume,
    cosine_distance,
    euclidean_distance,
    filter_mesh,
    gen_toy_collinear,
    hypersphere_volume,
    make_rng,
    monte_carlo_cone_probability,
    neighbor_bound_from_pair,
    representation_filter,
    soft_abs,
    train,
    transform,
)
from conefilter.sparse_filter import forward

from conftest import draw_conditioned_pair_base


class TestMetrics:
    def test_cosine_identical(self, rng):
        v = rng.standard_normal(5)
        assert cosine_distance(v, v) == pytest.approx(0.0, abs=1e-12)

    def test_cosine_orthogonal(self):
        assert cosine_distance([1, 0], [0, 2]) == pytest.approx(1.0)

    def test_cosine_antipodal(self, rng):
        v = rng.standard_normal(4)
        assert cosine_distance(v, -v) == pytest.approx(2.0, abs=1e-12)

    def test_cosine_scale_invariance(self, rng):
        v = rng.standard_normal(6)
        assert cosine_distance(v, 3.7 * v) <= 1e-12
        assert cosine_distance(v, -0.2 * v) >= 2 - 1e-12

    def test_cosine_zero_vector_raises(self):
        with pytest.raises(ValueError, match="zero"):
            cosine_distance([0.0, 0.0], [1.0, 2.0])

    def test_euclidean_identical(self, rng):
        v = rng.standard_normal(5)
        assert euclidean_distance(v, v) == 0.0

    def test_euclidean_antipodal_diagonal(self):
        for o in (2, 3, 7):
            v = np.full(o, 1 / math.sqrt(2))
            assert euclidean_distance(v, -v) == pytest.approx(math.sqrt(2 * o))

    def test_euclidean_matches_componentwise_loop(self, rng):
        u = rng.standard_normal(6)
        v = rng.standard_normal(6)
        expected = math.sqrt(sum((a - b) ** 2 for a, b in zip(u, v)))
        assert euclidean_distance(u, v) == pytest.approx(expected, abs=1e-12)

    def test_length_mismatch(self):
        with pytest.raises(ValueError, match="length mismatch"):
            euclidean_distance([1.0], [1.0, 2.0])


class TestCollinearDecompose:
    def test_exact_collinear(self, rng):
        x1 = rng.standard_normal(4)
        k, b = collinear_decompose(x1, 3.0 * x1)
        assert k == pytest.approx(3.0)
        np.testing.assert_allclose(b, 0.0, atol=1e-12)

    def test_hand_projection(self):
        k, b = collinear_decompose([1.0, 0.0], [2.0, 1.0])
        assert k == 2.0
        np.testing.assert_allclose(b, [0.0, 1.0])

    def test_residual_orthogonal(self, rng):
        for _ in range(50):
            x1 = rng.standard_normal(5)
            x2 = rng.standard_normal(5)
            _, b = collinear_decompose(x1, x2)
            nb = np.linalg.norm(b)
            if nb > 1e-12:
                assert abs(b @ x1) / (nb * np.linalg.norm(x1)) <= 1e-10

    def test_trig_identity(self, rng):
        # the residual-to-projection ratio is the tangent of the pair angle
        for _ in range(50):
            x1 = rng.standard_normal(4)
            x2 = rng.standard_normal(4)
            if x1 @ x2 <= 0:
                continue
            k, b = collinear_decompose(x1, x2)
            delta = cosine_distance(x1, x2)
            ratio = np.linalg.norm(b) / (k * np.linalg.norm(x1))
            assert ratio == pytest.approx(math.tan(math.acos(1 - delta)), abs=1e-9)

    def test_zero_base_raises(self):
        with pytest.raises(ValueError, match="zero"):
            collinear_decompose([0.0, 0.0], [1.0, 1.0])


class TestNeighborBound:
    def test_exact_collinear_gives_zero(self):
        nb = NeighborBound(delta=0.0, k=2.5, l2_f1=0.7, l2_f2=2.5 * 0.7, learned_dim=4)
        assert abs(nb.epsilon_bound) <= 1e-10

    def test_identical_points_give_zero(self):
        nb = NeighborBound(delta=0.0, k=1.0, l2_f1=0.9, l2_f2=0.9, learned_dim=3)
        assert abs(nb.epsilon_bound) <= 1e-12

    def test_nonnegative_on_forward_traces(self):
        rng = make_rng(17)
        nl = soft_abs()
        for _ in range(100):
            o = int(rng.integers(2, 5))
            l = int(rng.integers(2, 5))
            w, x1 = draw_conditioned_pair_base(rng, o, l)
            direction = rng.standard_normal(o)
            direction -= direction.dot(x1) / x1.dot(x1) * x1
            direction /= np.linalg.norm(direction)
            theta = rng.uniform(0.0, 0.3)
            k = rng.uniform(0.8, 3.0)
            x2 = k * (math.cos(theta) * x1
                      + math.sin(theta) * np.linalg.norm(x1) * direction)
            batch = np.column_stack([x1, x2, rng.standard_normal((o, 5))])
            trace = forward(w, batch, nl)
            nb = neighbor_bound_from_pair(
                x1, x2, trace.sample_norms[0], trace.sample_norms[1], l)
            assert nb.epsilon_bound >= -1e-12

    def test_reflected_pair_rejected(self):
        with pytest.raises(ValueError, match="reflected"):
            neighbor_bound_from_pair([1.0, 0.0], [-2.0, 0.0], 1.0, 1.0, 2)

    def test_invariants(self):
        with pytest.raises(ValueError):
            NeighborBound(delta=-0.1, k=1.0, l2_f1=1.0, l2_f2=1.0, learned_dim=2)
        with pytest.raises(ValueError):
            NeighborBound(delta=0.1, k=1.0, l2_f1=0.0, l2_f2=1.0, learned_dim=2)


@pytest.fixture(scope="module")
def toy_model():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        x, labels = gen_toy_collinear(make_rng(3))
        model, _ = train(x, 2, soft_abs(), TrainConfig(iterations=800, seed=3))
    return model, x, labels


class TestRepresentationFilter:
    def test_training_point_on_its_filter_height_line(self, toy_model):
        model, x, _ = toy_model
        z = transform(model, x, "batch")
        j = int(np.argmax(z[:, 2]))
        assert representation_filter(model, x[:, 2], j, "frozen") <= 1e-3

    def test_bounded_by_sqrt_two(self, toy_model, rng):
        model, _, _ = toy_model
        for _ in range(30):
            v = representation_filter(model, rng.uniform(-5, 5, size=2), 0, "frozen")
            assert 0.0 <= v <= math.sqrt(2) + 1e-12

    def test_even_in_the_input(self, toy_model, rng):
        model, _, _ = toy_model
        x = rng.uniform(-4, 4, size=2)
        a = representation_filter(model, x, 1, "frozen")
        b = representation_filter(model, -x, 1, "frozen")
        assert a == pytest.approx(b, abs=1e-12)

    def test_index_out_of_range(self, toy_model):
        model, x, _ = toy_model
        with pytest.raises(IndexError, match="out of range"):
            representation_filter(model, x[:, 0], 5, "frozen")


class TestFilterMesh:
    def test_two_grids_bounded_and_corners_sampled(self, toy_model):
        model, _, _ = toy_model
        xs, ys, grids = filter_mesh(model, -5, 5, -5, 5, 21)
        assert len(grids) == 2
        assert xs[0] == -5 and xs[-1] == 5 and ys[0] == -5 and ys[-1] == 5
        for g in grids:
            assert g.shape == (21, 21)
            assert np.all(g >= 0) and np.all(g <= math.sqrt(2) + 1e-12)

    def test_winners_partition_into_contiguous_angular_sectors(self, toy_model):
        model, _, _ = toy_model
        xs, ys, grids = filter_mesh(model, -5, 5, -5, 5, 41)
        gx, gy = np.meshgrid(xs, ys)
        pts = np.vstack([gx.ravel(), gy.ravel()])
        vals = np.stack([g.ravel() for g in grids])
        radius = np.linalg.norm(pts, axis=0)
        gap = np.abs(vals[0] - vals[1])
        keep = (radius > 0.5) & (gap > 0.05)
        angles = np.arctan2(pts[1, keep], pts[0, keep]) % math.pi
        winners = np.argmin(vals[:, keep], axis=0)
        seq = winners[np.argsort(angles)]
        transitions = int(np.sum(seq != np.roll(seq, 1)))
        assert set(seq.tolist()) == {0, 1}
        assert transitions <= 2

    def test_requires_two_dimensional_models(self, rng):
        model = SFModel(weights=rng.standard_normal((2, 3)), nonlinearity=soft_abs())
        with pytest.raises(ValueError, match="O=2"):
            filter_mesh(model, -1, 1, -1, 1, 8)

    def test_resolution_floor(self, toy_model):
        model, _, _ = toy_model
        with pytest.raises(ValueError, match="resolution"):
            filter_mesh(model, -1, 1, -1, 1, 1)


class TestInverseProportionality:
    def test_closer_to_one_basis_means_farther_from_all_others(self):
        # along any great-circle path toward a basis, the distance to that
        # basis falls while the smallest distance to the others grows
        rng = make_rng(7)
        nl = soft_abs()

        def slerp(a, b, t):
            omega = math.acos(min(1.0, max(-1.0, float(a @ b))))
            return (math.sin((1 - t) * omega) * a + math.sin(t * omega) * b) / math.sin(omega)

        checked = 0
        while checked < 20:
            w = rng.standard_normal((4, 3))
            model = SFModel(weights=w, nonlinearity=nl)
            z = transform(model, rng.standard_normal((3, 6)), "batch")
            z0 = z[:, 0]
            j = int(rng.integers(0, 4))
            basis = np.eye(4)[j]
            if z0 @ basis > 0.999:
                continue
            ts = np.linspace(0.05, 0.95, 12)
            path = np.stack([slerp(z0, basis, t) for t in ts])
            to_target = np.linalg.norm(path - basis, axis=1)
            to_others = np.stack([np.linalg.norm(path - np.eye(4)[k], axis=1)
                                  for k in range(4) if k != j]).min(axis=0)
            assert np.all(np.diff(to_target) < 0)
            assert np.all(np.diff(to_others) > 0)
            checked += 1


class TestHypersphereVolume:
    def test_unit_disk(self):
        assert hypersphere_volume(2, 1.0) == pytest.approx(math.pi)

    def test_unit_ball(self):
        assert hypersphere_volume(3, 1.0) == pytest.approx(4 * math.pi / 3)

    def test_interval(self):
        assert hypersphere_volume(1, 2.0) == pytest.approx(4.0)

    def test_dimension_recurrence(self):
        for n in range(2, 21):
            ratio = hypersphere_volume(n, 1.0) / hypersphere_volume(n - 1, 1.0)
            expected = math.sqrt(math.pi) * math.gamma((n + 1) / 2) / math.gamma((n + 2) / 2)
            assert ratio == pytest.approx(expected, rel=1e-10)

    def test_invalid(self):
        with pytest.raises(ValueError):
            hypersphere_volume(0, 1.0)
        with pytest.raises(ValueError):
            hypersphere_volume(2, 0.0)


class TestConeBounds:
    def test_degenerate_region_value(self):
        p = ConeBoundParams(o_dim=2, delta=0.1, m=1.0, big_m=1.0)
        lower, upper = cone_probability_bounds(p)
        expected = 0.2 * (math.sqrt(math.pi) / 2) / 1.0
        assert lower == pytest.approx(expected)
        assert upper == pytest.approx(expected)

    def test_degenerate_region_bounds_coincide(self):
        for o in (2, 4, 7):
            p = ConeBoundParams(o_dim=o, delta=0.05, m=1.5, big_m=1.5)
            lower, upper = cone_probability_bounds(p)
            assert lower == pytest.approx(upper)

    def test_lower_below_upper(self):
        p = ConeBoundParams(o_dim=3, delta=0.05, m=1.0, big_m=2.0)
        lower, upper = cone_probability_bounds(p)
        assert lower < upper

    def test_condensed_lower_differs_by_length_factor(self):
        p = ConeBoundParams(o_dim=3, delta=0.05, m=2.0, big_m=4.0)
        lower, _ = cone_probability_bounds(p)
        assert cone_probability_lower_condensed(p) == pytest.approx(lower * p.big_m)

    def test_invariants(self):
        with pytest.raises(ValueError):
            ConeBoundParams(o_dim=1, delta=0.1, m=1.0, big_m=1.0)
        with pytest.raises(ValueError):
            ConeBoundParams(o_dim=2, delta=0.1, m=2.0, big_m=1.0)


class TestMonteCarlo:
    def test_reproducible_and_in_unit_interval(self):
        p = ConeBoundParams(o_dim=3, delta=0.1, m=1.0, big_m=2.0)
        a = monte_carlo_cone_probability(p, 20_000, make_rng(5))
        b = monte_carlo_cone_probability(p, 20_000, make_rng(5))
        assert a == b
        assert 0.0 <= a[0] <= 1.0

    def test_enforces_sample_floor(self):
        p = ConeBoundParams(o_dim=2, delta=0.1, m=1.0, big_m=1.0)
        with pytest.raises(ValueError, match="10000"):
            monte_carlo_cone_probability(p, 100, make_rng(0))

    @pytest.mark.parametrize("o_dim,m,delta", [(2, 1.0, 0.1), (3, 1.0, 0.05), (5, 2.0, 0.1)])
    def test_matches_volume_ratio_when_ball_fits(self, o_dim, m, delta):
        # with the region extending past the neighborhood, the estimate is
        # the plain ball/cone volume ratio (up to a sliver where the ball
        # grazes the cone wall, well under the Monte-Carlo noise)
        big_m = 2 * m
        p = ConeBoundParams(o_dim=o_dim, delta=delta, m=m, big_m=big_m)
        est, se = monte_carlo_cone_probability(p, 100_000, make_rng(42))
        exact = hypersphere_volume(o_dim, delta) / cone_volume(
            o_dim, big_m * delta / m, big_m)
        assert abs(est - exact) <= 4 * se

    def test_half_of_neighborhood_lies_outside_degenerate_region(self):
        # when the data region ends exactly at the center point, half the
        # neighborhood ball sits beyond it, so the estimate is half the
        # full-ball ratio
        p = ConeBoundParams(o_dim=3, delta=0.1, m=1.0, big_m=1.0)
        est, se = monte_carlo_cone_probability(p, 100_000, make_rng(11))
        full_ratio = hypersphere_volume(3, 0.1) / cone_volume(3, 0.1, 1.0)
        assert abs(est - 0.5 * full_ratio) <= 5 * se

    def test_sandwich_holds_where_the_region_extends_past_the_point(self):
        idx = 0
        for o in (2, 3, 5):
            for m in (1.0, 2.0):
                for delta in (0.05, 0.1):
                    p = ConeBoundParams(o_dim=o, delta=delta, m=m, big_m=2 * m)
                    lower, upper = cone_probability_bounds(p)
                    est, se = monte_carlo_cone_probability(p, 50_000, make_rng(100 + idx))
                    assert lower - 3 * se <= est <= upper + 3 * se
                    idx += 1
