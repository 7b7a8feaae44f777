from __future__ import annotations

import math

import numpy as np
import pytest

from shadowlab import Flow, VectorField
from shadowlab.elements import CriticalElement
from shadowlab.errors import ConfigError, GluingError
from shadowlab.pseudo import (
    PERIODIC,
    Pseudotrajectory,
    SampledCurve,
    ShadowingConfig,
    derive_config,
    jump_size,
    make_glued,
    random_pseudotrajectory,
    validate_pseudotrajectory,
)


def exact_orbit_xi(flow, start, n_anchors, T0=1.0):
    ts, recs, _, _ = flow.advance_batch(np.asarray(start, float)[None, :],
                                        (n_anchors - 1) * T0, rec_dt=T0)
    return Pseudotrajectory(flow, T0, 0, recs[:, 0, :])


class TestEvalAndJumps:
    def test_exact_orbit_zero_jump(self, flows):
        xi = exact_orbit_xi(flows["sink"], (1.0, 0.3), 6)
        assert jump_size(xi) <= 1e-12

    def test_eval_matches_flow(self, flows):
        f = flows["limit_cycle"]
        xi = exact_orbit_xi(f, (0.5, 0.0), 5)
        ts = np.linspace(0.0, 4.0, 37)
        direct = np.array([f.flow_map(t, (0.5, 0.0)) for t in ts])
        assert np.max(f.surface.dist(xi.eval(ts), direct)) < 2e-4

    def test_frozen_anchor_jump(self, flows):
        # two points fixed by the torus gradient flow
        f = flows["torus_gradient"]
        p, q = np.array([0.0, 0.0]), np.array([np.pi, np.pi])
        anchors = np.array([p, q, p, q, p])
        xi = Pseudotrajectory(f, 1.0, 0, anchors)
        assert jump_size(xi) == pytest.approx(f.surface.dist(p, q), abs=1e-9)

    def test_random_kick_bound(self, flows):
        rng = np.random.default_rng(11)
        for d in (0.02, 0.1):
            xi = random_pseudotrajectory(flows["sink"], d, 1.0, 12, (1.0, 0.5), rng)
            assert jump_size(xi) < d

    def test_clamped_extension_is_true_orbit(self, flows):
        f = flows["sink"]
        xi = exact_orbit_xi(f, (1.0, 0.0), 3)
        t = 4.5  # beyond the window [0, 2]
        expect = f.flow_map(t, (1.0, 0.0))
        assert f.surface.dist(xi.eval(t), expect) < 2e-4
        back = xi.eval(-1.0)
        assert f.surface.dist(back, f.flow_map(-1.0, (1.0, 0.0))) < 2e-4

    def test_json_roundtrip(self, flows):
        rng = np.random.default_rng(12)
        xi = random_pseudotrajectory(flows["limit_cycle"], 0.05, 1.0, 8, (1.2, 0.0), rng)
        xi2 = Pseudotrajectory.from_json(xi.to_json())
        assert xi2.T0 == xi.T0 and xi2.extension == xi.extension
        assert np.allclose(xi2.anchors, xi.anchors)
        assert xi2.flow.field.name == "limit_cycle"


class TestValidate:
    def test_exact_orbit_valid_everywhere(self, flows):
        xi = exact_orbit_xi(flows["limit_cycle"], (0.4, 0.2), 6)
        rep = validate_pseudotrajectory(xi, 1e-4)
        assert rep.valid and rep.max_violation < 1e-5

    def test_constructed_jump_thresholds(self, flows):
        f = flows["sink"]
        a0 = np.array([1.0, 0.0])
        a1 = f.flow_map(1.0, a0) + np.array([0.05, 0.0])
        a2 = f.flow_map(1.0, a1)
        xi = Pseudotrajectory(f, 1.0, 0, np.array([a0, a1, a2]))
        assert validate_pseudotrajectory(xi, 0.1).valid
        assert not validate_pseudotrajectory(xi, 0.04).valid

    def test_frozen_point_witness_near_one(self, flows):
        f = flows["saddle"]
        x = np.array([1.0, 1.0])
        curve = SampledCurve(np.array([0.0, 3.0]), np.array([x, x]), f)
        rep = validate_pseudotrajectory(curve, 1e-3, horizon=(0.0, 2.0))
        assert not rep.valid
        assert rep.witness_s == pytest.approx(1.0, abs=0.051)

    def test_monotone_in_d(self, flows):
        rng = np.random.default_rng(13)
        xi = random_pseudotrajectory(flows["sink"], 0.05, 1.0, 8, (0.8, -0.2), rng)
        r1 = validate_pseudotrajectory(xi, 0.06)
        r2 = validate_pseudotrajectory(xi, 0.2)
        assert r1.max_violation == r2.max_violation
        assert (not r1.valid) or r2.valid

    def test_pt_d_validates_at_2d(self, flows):
        rng = np.random.default_rng(14)
        cases = {"sink": (0.9, 0.1), "limit_cycle": (1.2, 0.0), "torus_gradient": (2.0, 2.5)}
        for name, start in cases.items():
            for d in (0.01, 0.05):
                xi = random_pseudotrajectory(flows[name], d, 1.0, 10, start, rng)
                rep = validate_pseudotrajectory(xi, 2 * d)
                assert rep.valid, f"{name} d={d}: violation {rep.max_violation:.4f}"


class TestGlued:
    def test_single_segment_is_exact(self, flows):
        xi = make_glued(flows["sink"], [((1.0, 0.0), (0.0, 4.0))], 1.0)
        assert jump_size(xi) <= 1e-12
        assert xi.window == (0.0, 4.0)

    def test_two_arc_sink_glue(self, flows):
        f = flows["sink"]
        d = 0.05
        # first arc sinks into B(d/2, 0) by t=5 (e^-5 ~ 0.007); second arc
        # starts on the far side of the origin inside B(d/4, 0)
        w = np.array([-d / 4, 0.0])
        xi = make_glued(f, [((1.0, 0.0), (0.0, 5.0)), (w, (5.0, 8.0))], 1.0)
        assert jump_size(xi) < d

    def test_periodic_gluing_lemma_pattern(self, flows):
        f = flows["sink"]
        x1 = np.array([1.0, 0.0])
        T_d = 1.5
        start = f.flow_map(-T_d, x1)
        xi = make_glued(f, [(start, (-T_d, T_d))], 0.5, extension=PERIODIC)
        assert xi.extension == PERIODIC
        expect = f.surface.dist(f.flow_map(T_d, x1), f.flow_map(-T_d, x1))
        assert jump_size(xi) == pytest.approx(expect, rel=1e-6)
        # periodicity of evaluation
        assert np.allclose(xi.eval(0.3), xi.eval(0.3 + 2 * T_d), atol=1e-9)

    def test_misaligned_switch_rejected(self, flows):
        with pytest.raises(GluingError):
            make_glued(flows["sink"], [((1.0, 0.0), (0.0, 1.7))], 1.0)

    def test_gap_rejected(self, flows):
        with pytest.raises(GluingError):
            make_glued(flows["sink"],
                       [((1.0, 0.0), (0.0, 2.0)), ((0.5, 0.0), (3.0, 4.0))], 1.0)


class TestConfig:
    def test_torus_gradient_eps0(self, flows):
        els = [CriticalElement.singularity(p) for p in
               [(0.0, 0.0), (0.0, np.pi), (np.pi, 0.0), (np.pi, np.pi)]]
        cfg = derive_config(flows["torus_gradient"], els)
        assert cfg.eps0 == pytest.approx(min(0.79, (1 / 3 - 1e-3) * np.pi))
        assert cfg.eps0 == 0.79
        assert cfg.T0 == 1.0

    def test_single_sink_cap_binds(self, flows):
        cfg = derive_config(flows["sink"], [CriticalElement.singularity((0.0, 0.0))])
        assert cfg.eps0 == 0.79

    def test_limit_cycle_eps0(self, flows):
        th = np.linspace(0, 2 * np.pi, 200, endpoint=False)
        cyc = np.stack([np.cos(th), np.sin(th)], axis=1)
        els = [CriticalElement.singularity((0.0, 0.0)),
               CriticalElement.closed_orbit(cyc, 2 * np.pi)]
        cfg = derive_config(flows["limit_cycle"], els)
        assert cfg.eps0 < 1 / 3
        assert cfg.eps0 == pytest.approx((1 / 3 - 1e-3) * 1.0, rel=1e-3)

    def test_too_close_elements_rejected(self, flows):
        els = [CriticalElement.singularity((0.0, 0.0)),
               CriticalElement.singularity((1e-4, 0.0))]
        with pytest.raises(ConfigError):
            derive_config(flows["sink"], els)

    def test_core_region_membership(self, flows):
        th = np.linspace(0, 2 * np.pi, 200, endpoint=False)
        cyc = np.stack([np.cos(th), np.sin(th)], axis=1)
        els = [CriticalElement.singularity((0.0, 0.0)),
               CriticalElement.closed_orbit(cyc, 2 * np.pi)]
        cfg = derive_config(flows["limit_cycle"], els)
        on_cycle = np.array([[1.0, 0.0]])
        near_origin = np.array([[cfg.eps0 / 4, 0.0]])
        assert cfg.in_core_region(flows["limit_cycle"], on_cycle)[0]
        assert not cfg.in_core_region(flows["limit_cycle"], near_origin)[0]
