import math

import numpy as np
import pytest

from conefilter import Nonlinearity, make_rng, sigmoid, soft_abs, soft_relu


class TestApply:
    def test_soft_abs_at_zero_is_sqrt_eps(self):
        assert soft_abs().apply(0.0) == pytest.approx(1e-4, rel=1e-12)

    def test_soft_abs_even(self):
        nl = soft_abs()
        assert nl.apply(-3.0) == nl.apply(3.0) == pytest.approx(math.sqrt(9 + 1e-8))

    def test_sigmoid_at_zero(self):
        assert sigmoid().apply(0.0) == 0.5

    def test_soft_relu_floors_negatives(self):
        assert soft_relu().apply(-5.0) == 1e-8
        assert soft_relu().apply(2.5) == 2.5

    def test_strictly_positive_outputs(self, rng):
        x = rng.standard_normal(200) * 5
        for nl in (soft_abs(), soft_relu()):
            assert np.all(nl.apply(x) > 0)

    def test_sigmoid_stable_at_extremes(self):
        nl = sigmoid()
        assert nl.apply(-1000.0) == 0.0
        assert nl.apply(1000.0) == 1.0


class TestDerivative:
    def test_soft_abs_zero_at_origin(self):
        assert soft_abs().derivative(0.0) == 0.0

    def test_soft_abs_approaches_sign(self):
        assert soft_abs().derivative(3.0) == pytest.approx(1.0, abs=1e-9)
        assert soft_abs().derivative(-3.0) == pytest.approx(-1.0, abs=1e-9)

    def test_soft_relu_subgradient_zero_at_kink(self):
        nl = soft_relu()
        assert nl.derivative(0.0) == 0.0
        assert nl.derivative(1e-9) == 1.0

    @pytest.mark.parametrize("kind", ["softabs", "sigmoid", "softrelu"])
    def test_matches_finite_differences(self, kind):
        nl = Nonlinearity(kind)
        rng = make_rng(11)
        xs = rng.uniform(-5, 5, size=1000)
        if kind == "softrelu":
            xs = xs[np.abs(xs) >= 1e-4]  # exclude the kink neighborhood
        h = 1e-6
        numeric = (nl.apply(xs + h) - nl.apply(xs - h)) / (2 * h)
        analytic = nl.derivative(xs)
        denom = np.maximum(np.abs(numeric), 1e-3)
        assert np.max(np.abs(analytic - numeric) / denom) < 1e-5


class TestStructure:
    def test_even_symmetry_exact(self, rng):
        nl = soft_abs()
        x = rng.standard_normal(500) * 10
        np.testing.assert_array_equal(nl.apply(x), nl.apply(-x))

    def test_scaling_within_sqrt_eps(self, rng):
        # exact homogeneity holds only at eps=0; at eps=1e-8 the mismatch
        # stays below sqrt(eps) for arguments of magnitude >= 1
        nl = soft_abs()
        xs = rng.uniform(1.0, 100.0, size=300)
        ks = rng.uniform(1.0, 1000.0, size=300)
        gap = np.abs(nl.apply(ks * xs) - ks * nl.apply(xs))
        assert np.max(gap) <= 1e-4


class TestValidation:
    def test_unknown_kind(self):
        with pytest.raises(ValueError, match="unknown nonlinearity"):
            Nonlinearity("relu")

    def test_epsilon_must_be_positive(self):
        with pytest.raises(ValueError, match="epsilon"):
            Nonlinearity("softabs", epsilon=0.0)

    def test_default_epsilon(self):
        assert Nonlinearity("softabs").epsilon == 1e-8
