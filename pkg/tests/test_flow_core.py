from __future__ import annotations

import math

import numpy as np
import pytest

from shadowlab import Flow, Surface, VectorField, build_transversal
from shadowlab.errors import (
    EscapedDomain,
    FieldSpecError,
    HorizonExceeded,
    NearSingularity,
    SurfaceError,
)

from conftest import sample_points


class TestSurface:
    def test_torus_wrap_distance(self):
        s = Surface.torus()
        d = s.dist(np.array([0.1, 0.0]), np.array([2 * np.pi - 0.1, 0.0]))
        assert d == pytest.approx(0.2, abs=1e-12)

    def test_identity_distance(self):
        for s in (Surface.plane(), Surface.torus()):
            a = np.array([1.3, -0.4])
            assert s.dist(a, s.wrap(a)) == pytest.approx(0.0, abs=1e-12)

    def test_plane_pythagoras(self):
        assert Surface.plane().dist(np.zeros(2), np.array([3.0, 4.0])) == 5.0

    def test_metric_axioms_random(self):
        rng = np.random.default_rng(0)
        for s in (Surface.plane(), Surface.torus(2 * np.pi, 4.0)):
            pts = rng.uniform(-3, 3, size=(60, 2))
            a, b, c = pts[:20], pts[20:40], pts[40:]
            dab, dba = s.dist(a, b), s.dist(b, a)
            assert np.allclose(dab, dba, atol=1e-12)
            assert np.all(s.dist(a, c) <= dab + s.dist(b, c) + 1e-12)
            assert np.all(dab[np.any(s.wrap(a) != s.wrap(b), axis=1)] > 0)

    def test_torus_translation_invariance(self):
        s = Surface.torus()
        rng = np.random.default_rng(1)
        a, b = rng.uniform(0, 2 * np.pi, (2, 30, 2))
        t = rng.uniform(0, 2 * np.pi, 2)
        assert np.allclose(s.dist(a, b), s.dist(a + t, b + t), atol=1e-9)

    def test_invalid_surfaces(self):
        with pytest.raises(SurfaceError):
            Surface.torus(-1.0, 2.0)
        with pytest.raises(SurfaceError):
            Surface.plane_rect(0, 0, 0, 1)


class TestCatalog:
    def test_formulas_against_lambdas(self):
        rng = np.random.default_rng(2)
        pts = rng.uniform(-1.2, 1.2, size=(50, 2))
        x, y = pts[:, 0], pts[:, 1]
        r = np.hypot(x, y)
        closed = {
            "sink": (-x, -y),
            "source": (x, y),
            "saddle": (x, -y),
            "center": (-y, x),
            "monkey": (x**2 - y**2, -2 * x * y),
            "saddle_node": (x**2, -y),
            "limit_cycle": (x * (1 - r) - y, y * (1 - r) + x),
            "semistable_cycle": (x * (1 - r) ** 2 - y, y * (1 - r) ** 2 + x),
            "torus_gradient": (np.sin(x), np.sin(y)),
        }
        for name, (u, v) in closed.items():
            out = VectorField.catalog(name).eval(pts)
            assert np.allclose(out[:, 0], u, atol=1e-12), name
            assert np.allclose(out[:, 1], v, atol=1e-12), name

    def test_custom_field_roundtrip(self):
        spec = {
            "u": [{"coef": 1.0, "py": 1}],
            "v": [{"coef": 1.0, "px": 1}, {"coef": -1.0, "px": 2}, {"coef": 0.02, "py": 1}],
        }
        f = VectorField.from_spec(spec)
        p = np.array([0.5, 0.25])
        assert np.allclose(f.eval(p), [0.25, 0.5 - 0.25 + 0.005])
        again = VectorField.from_spec(f.to_spec())
        assert np.allclose(again.eval(p), f.eval(p))

    def test_unknown_name(self):
        with pytest.raises(FieldSpecError):
            VectorField.catalog("vortex")

    def test_reversed(self):
        f = VectorField.catalog("limit_cycle")
        p = np.array([0.3, 0.8])
        assert np.allclose(f.reversed().eval(p), -f.eval(p))
        assert f.reversed().reversed().name == "limit_cycle"


class TestFlowMap:
    def test_sink_closed_form(self, flows):
        p = flows["sink"].flow_map(math.log(2), (1.0, 0.0))
        assert np.allclose(p, [0.5, 0.0], atol=1e-6)

    def test_identity_at_t0(self, flows):
        x = np.array([0.37, -0.81])
        assert np.array_equal(flows["saddle"].flow_map(0.0, x), x)

    def test_saddle_closed_form(self, flows):
        p = flows["saddle"].flow_map(1.0, (0.0, 1.0))
        assert np.allclose(p, [0.0, math.exp(-1)], atol=1e-6)

    def test_backward_consistency(self, flows):
        f = flows["limit_cycle"]
        x = np.array([0.4, 0.9])
        y = f.flow_map(1.7, x)
        back = f.flow_map(-1.7, y)
        assert f.surface.dist(back, x) < 1e-9

    def test_torus_wrapping(self, flows):
        f = flows["torus_gradient"]
        p = f.flow_map(3.0, (np.pi / 2, 0.0))
        assert 0 <= p[0] < 2 * np.pi and 0 <= p[1] < 2 * np.pi

    def test_escape_signal(self):
        f = Flow(VectorField.catalog("source", Surface.plane(2.0)))
        with pytest.raises(EscapedDomain) as e:
            f.flow_map(5.0, (1.0, 0.0))
        # r(t) = e^t crosses the corner-free bound x=2 at t = ln 2
        assert e.value.exit_time == pytest.approx(math.log(2), abs=0.01)

    def test_horizon_guard(self, flows):
        with pytest.raises(HorizonExceeded):
            flows["sink"].flow_map(1e7, (0.1, 0.1))

    def test_group_property_all_fields(self, flows):
        rng = np.random.default_rng(7)
        for name, flow in flows.items():
            pts = sample_points(name, rng, 100)
            s = rng.uniform(-1, 1, 100)
            t = rng.uniform(-1, 1, 100)
            worst = 0.0
            for i in range(100):
                a = flow.flow_map(s[i] + t[i], pts[i])
                b = flow.flow_map(s[i], flow.flow_map(t[i], pts[i]))
                worst = max(worst, float(flow.surface.dist(a, b)))
            assert worst <= 1e-5, f"{name}: group residual {worst:.2e}"

    def test_rk4_order(self):
        # Linear fields have exact solutions; at coarse steps the error is
        # far from roundoff so the order-4 ratio is clean.
        cases = {
            "sink": lambda t, x: x * math.exp(-t),
            "source": lambda t, x: x * math.exp(t),
            "saddle": lambda t, x: np.array([x[0] * math.exp(t), x[1] * math.exp(-t)]),
            "center": lambda t, x: np.array(
                [x[0] * math.cos(t) - x[1] * math.sin(t),
                 x[0] * math.sin(t) + x[1] * math.cos(t)]),
        }
        x0 = np.array([0.8, 0.6])
        for name, sol in cases.items():
            exact = np.asarray(sol(1.0, x0), dtype=float)
            errs = []
            for h in (0.02, 0.01):
                f = Flow(VectorField.catalog(name), step=h)
                errs.append(np.linalg.norm(f.flow_map(1.0, x0) - exact))
            ratio = errs[0] / errs[1]
            assert 8 <= ratio <= 32, f"{name}: ratio {ratio:.2f}"


class TestTrajectory:
    def test_segment_invariants(self, flows):
        seg = flows["sink"].trajectory((1.0, 0.0), 2.0, rec_dt=0.1)
        assert np.all(np.diff(seg.times) > 0)
        assert np.allclose(seg.points[0], [1.0, 0.0])
        assert np.allclose(seg.points[-1], [math.exp(-2), 0.0], atol=1e-6)

    def test_backward_segment(self, flows):
        seg = flows["sink"].trajectory((0.5, 0.0), -1.0, rec_dt=0.1)
        assert seg.t_begin == -1.0 and seg.t_end == 0.0
        assert np.allclose(seg.points[0], [0.5 * math.e, 0.0], atol=1e-6)
        assert np.allclose(seg.points[-1], [0.5, 0.0])

    def test_interp(self, flows):
        seg = flows["center"].trajectory((1.0, 0.0), np.pi, rec_dt=0.01)
        mid = seg.interp(np.pi / 2)
        assert np.allclose(mid, [0.0, 1.0], atol=1e-4)


class TestTransversal:
    def test_saddle_vertical(self, flows):
        tr = build_transversal(flows["saddle"], (1.0, 0.0), 0.2)
        # field is (1, 0) there, so the segment is vertical
        assert abs(tr.direction[0]) < 1e-12 and abs(abs(tr.direction[1]) - 1) < 1e-12
        assert tr.flow_time_halfwidth > 0

    def test_limit_cycle_radial(self, flows):
        tr = build_transversal(flows["limit_cycle"], (1.0, 0.0), 0.2)
        assert abs(tr.direction[1]) < 1e-12 and abs(abs(tr.direction[0]) - 1) < 1e-12

    def test_near_singularity_refused(self, flows):
        with pytest.raises(NearSingularity):
            build_transversal(flows["sink"], (0.0, 0.0), 0.2)

    def test_coordinates(self, flows):
        tr = build_transversal(flows["limit_cycle"], (1.0, 0.0), 0.2)
        p = tr.point_at(0.07)
        assert tr.coordinate(p) == pytest.approx(0.07, abs=1e-12)
        assert abs(tr.offset(p)) < 1e-12
