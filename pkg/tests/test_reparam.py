from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shadowlab.errors import NonMonotoneWarp
from shadowlab.reparam import Reparametrization, compose, invert, rep_membership


def random_warp(rng: np.random.Generator, eps: float, n_max: int = 8) -> Reparametrization:
    eps = min(eps, 0.95)
    n = int(rng.integers(2, n_max + 1))
    t = np.cumsum(rng.uniform(0.2, 1.5, n))
    slopes = 1.0 + rng.uniform(-eps, eps, n - 1) * 0.999
    return Reparametrization(t, float(rng.uniform(-2, 2)), slopes)


class TestBasics:
    def test_identity_membership(self):
        h = Reparametrization.identity()
        for eps in (1e-9, 0.1, 3.0):
            assert rep_membership(h, eps)

    def test_constant_slope_cases(self):
        h = Reparametrization.linear(1.3)
        assert rep_membership(h, 0.5)
        assert not rep_membership(h, 0.2)
        assert not rep_membership(Reparametrization.linear(2.0), 0.5)

    def test_non_monotone_rejected(self):
        with pytest.raises(NonMonotoneWarp):
            Reparametrization(np.array([0.0, 1.0, 0.5]), 0.0, np.ones(2))
        with pytest.raises(NonMonotoneWarp):
            Reparametrization(np.array([0.0, 1.0, 2.0]), 0.0, np.array([1.0, -0.1]))
        with pytest.raises(NonMonotoneWarp):
            Reparametrization.from_knots([0.0, 1.0], [1.0, 1.0])

    def test_evaluation_and_extension(self):
        h = Reparametrization(np.array([0.0, 1.0, 3.0]), 1.0, np.array([2.0, 0.5]))
        assert h(0.0) == 1.0
        assert h(1.0) == 3.0
        assert h(3.0) == 4.0
        assert h(-1.0) == pytest.approx(-1.0)   # left extension, slope 2
        assert h(4.0) == pytest.approx(4.5)     # right extension, slope 0.5
        ts = np.linspace(-2, 5, 113)
        assert np.all(np.diff(h(ts)) > 0)

    def test_inverse_roundtrip(self):
        rng = np.random.default_rng(3)
        h = random_warp(rng, 0.4)
        ts = np.linspace(-3, 9, 57)
        assert np.allclose(h.inverse_call(h(ts)), ts, atol=1e-10)
        hinv = invert(h)
        assert np.allclose(hinv(h(ts)), ts, atol=1e-10)


class TestAlgebra:
    def test_compose_identity(self):
        rng = np.random.default_rng(4)
        h = random_warp(rng, 0.3)
        for c in (compose(Reparametrization.identity(), h), compose(h, Reparametrization.identity())):
            ts = np.linspace(-2, 8, 91)
            assert np.allclose(c(ts), h(ts), atol=1e-9)

    def test_compose_slope_product_interval(self):
        h1 = Reparametrization(np.array([0.0, 1.0, 2.0]), 0.0, np.array([0.9, 1.1]))
        h2 = Reparametrization(np.array([0.0, 1.5, 2.5]), 0.0, np.array([1.1, 0.9]))
        lo, hi = compose(h1, h2).slope_range()
        assert 0.81 <= lo and hi <= 1.21 * (1 + 1e-15)

    def test_prop_chain_bound_single(self):
        # three factors in Rep(0.1) compose into Rep(0.4):
        # (1.1)(0.9)^-1(1.1) < 1.4 is the proof's inequality
        rng = np.random.default_rng(5)
        h1, h2, g = (random_warp(rng, 0.1) for _ in range(3))
        chain = compose(h1, compose(invert(h2), g))
        assert rep_membership(chain, 0.4)

    def test_compose_pointwise(self):
        rng = np.random.default_rng(6)
        h1, h2 = random_warp(rng, 0.5), random_warp(rng, 0.5)
        c = compose(h1, h2)
        ts = np.linspace(-4, 12, 201)
        assert np.allclose(c(ts), h1(h2(ts)), atol=1e-9)


class TestSpecInvariants:
    def test_composition_bound_random(self):
        rng = np.random.default_rng(7)
        for _ in range(300):
            e1, e2 = rng.uniform(0.01, 0.6, 2)
            h1, h2 = random_warp(rng, e1), random_warp(rng, e2)
            assert rep_membership(compose(h1, h2), e1 + e2 + e1 * e2)

    def test_inversion_bound_random(self):
        rng = np.random.default_rng(8)
        for _ in range(300):
            e = rng.uniform(0.01, 0.9)
            h = random_warp(rng, e)
            assert rep_membership(invert(h), e / (1 - e))

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 10_000), st.floats(0.01, 0.7))
    def test_membership_matches_chords(self, seed, eps):
        rng = np.random.default_rng(seed)
        h = random_warp(rng, 1.5)
        member = rep_membership(h, eps)
        ts = np.linspace(h.t_knots[0] - 1, h.t_knots[-1] + 1, 40)
        a, b = np.meshgrid(ts, ts)
        keep = a > b
        chords = (h(a[keep]) - h(b[keep])) / (a[keep] - b[keep])
        inside = np.all((chords > 1 - eps + 1e-12) & (chords < 1 + eps - 1e-12))
        if member:
            assert np.all((chords > 1 - eps - 1e-9) & (chords < 1 + eps + 1e-9))
        elif inside:
            # strictly-inside chords with non-membership can only happen when
            # the extreme slope segment was missed by the chord sample; the
            # segment itself must then be on the boundary
            lo, hi = h.slope_range()
            assert lo <= 1 - eps + 1e-9 or hi >= 1 + eps - 1e-9

    def test_from_monotone_samples_repairs_flats(self):
        h = Reparametrization.from_monotone_samples([0.0, 1.0, 2.0, 3.0], [0.0, 1.0, 1.0, 2.0])
        assert np.all(h.slopes > 0)
        assert h(2.0) == pytest.approx(1.0, abs=1e-6)
