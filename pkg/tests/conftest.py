"""Shared instance generators for property tests.

The smooth activation only tracks exact scaling while projections stay
well above sqrt(epsilon); generators therefore condition instances on
non-degenerate projections, which is the hypothesis the structural
guarantees carry.  Central-difference checks additionally need projections
away from activation kinks so the oracle's truncation error stays small.
"""

import numpy as np
import pytest

from conefilter import make_rng


def draw_gradient_instance(rng, kind, max_o=5, max_l=6, max_n=8):
    """(W, X) with projections off the activation's stiff zone.

    Keeps |WX| entries >= 1e-3 (curvature of the smooth absolute value
    spikes within sqrt(eps) of zero and the soft rectifier has a kink) and,
    for the soft rectifier, requires each feature row to see at least one
    active sample so the objective is not flat at roundoff scale.
    """
    while True:
        o = int(rng.integers(2, max_o + 1))
        l = int(rng.integers(2, max_l + 1))
        n = int(rng.integers(2, max_n + 1))
        w = rng.standard_normal((l, o))
        x = rng.standard_normal((o, n))
        wx = w @ x
        if np.min(np.abs(wx)) < 1e-3:
            continue
        if kind == "softrelu" and not (wx > 0).any(axis=1).all():
            continue
        return w, x


def draw_conditioned_pair_base(rng, o, l, min_activation=0.05):
    """x1 with entries of magnitude >= 0.1, W with projections bounded away
    from zero relative to sqrt(eps)."""
    x1 = rng.uniform(0.1, 2.0, size=o) * rng.choice([-1.0, 1.0], size=o)
    for _ in range(500):
        w = rng.standard_normal((l, o))
        if np.min(np.abs(w @ x1)) >= min_activation:
            return w, x1
    raise RuntimeError("could not draw a non-degenerate projection")


@pytest.fixture
def rng():
    return make_rng(20240)
