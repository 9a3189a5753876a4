import numpy as np
import pytest

from neuronalg import (
    AgentConfig,
    RadialContour,
    StimulationFields,
    agent_speed,
    field_E,
    field_S,
    refine_contour,
    run_agent,
    run_agents,
    stimulate,
)
from neuronalg.agent import LM, RM, SpikingNetwork

from synthetic import make_disk


class TestFieldClosedForms:
    """Constant-image closed forms for sd = 10 (window (2*10+1)^2 = 441)."""

    def test_e_on_empty_mask(self):
        f = StimulationFields(np.zeros((64, 64)), np.zeros((64, 64), dtype=bool), sd=10)
        expect = 3000.0 * 441.0 * (0.1 / 1.1) / (2.0 * 100.0)  # ~601.4
        assert field_E(f, (32, 32)) == pytest.approx(expect, rel=1e-9)

    def test_e_on_full_mask(self):
        f = StimulationFields(np.zeros((64, 64)), np.ones((64, 64), dtype=bool), sd=10)
        expect = 3000.0 * 441.0 * (2.1 / 1.1) / (2.0 * 100.0)  # ~12628.6
        assert field_E(f, (32, 32)) == pytest.approx(expect, rel=1e-9)

    def test_s_on_constant_image(self):
        for value in (0.3, 0.9):
            f = StimulationFields(
                np.full((64, 64), value), np.zeros((64, 64), dtype=bool), sd=10
            )
            # the gray average cancels: 3000 * (3/8) * 441 / 100 = 4961.25
            assert field_S(f, (32, 32)) == pytest.approx(4961.25, rel=1e-9)

    def test_s_on_black_image_is_zero(self):
        f = StimulationFields(np.zeros((64, 64)), np.zeros((64, 64), dtype=bool), sd=10)
        assert field_S(f, (32, 32)) == 0.0

    def test_fields_nonnegative(self):
        rng = np.random.default_rng(0)
        gray = rng.random((32, 32))
        mask = rng.random((32, 32)) > 0.5
        f = StimulationFields(gray, mask, sd=2)
        pts = rng.random((20, 2)) * 31
        assert (f.field_e(pts) >= 0).all()
        assert (f.field_s(pts) >= 0).all()


class TestSpikingNetwork:
    def test_zero_input_zero_output(self):
        net = SpikingNetwork(AgentConfig())
        lm, rm = net.simulate_window((np.zeros(3),) * 4)
        assert (lm == 0).all() and (rm == 0).all()

    def test_mirror_symmetric_inputs_give_zero_speed(self):
        net = SpikingNetwork(AgentConfig())
        for a, b in [(500.0, 800.0), (5000.0, 2000.0), (20000.0, 0.0)]:
            lm, rm = net.simulate_window(
                (np.array([a]), np.array([a]), np.array([b]), np.array([b]))
            )
            assert (lm == rm).all()
            assert agent_speed(lm, rm) == 0.0

    def test_subthreshold_current_never_fires(self):
        # steady-state depolarization I * tau_m / C_m must reach 15 mV
        net = SpikingNetwork(AgentConfig())
        lm, rm = net.simulate_window(
            (np.array([300.0]), np.array([0.0]), np.array([0.0]), np.array([0.0]))
        )
        assert lm[0] == 0 and rm[0] == 0

    def test_refractory_caps_spike_count(self):
        cfg = AgentConfig()
        net = SpikingNetwork(cfg)
        huge = (np.array([1e7]),) * 4
        lm, rm = net.simulate_window(huge)
        cap = cfg.window_ms / (cfg.t_ref_ms + cfg.dt_ms)
        assert lm[0] <= cap and rm[0] <= cap

    def test_deterministic(self):
        net = SpikingNetwork(AgentConfig())
        currents = (np.array([900.0]), np.array([400.0]), np.array([1200.0]), np.array([700.0]))
        assert net.simulate_window(currents) == net.simulate_window(currents)


class TestStimulate:
    def test_sample_offset_clamped_to_lambda_range(self):
        gray, mask = make_disk(size=128, radius=20, center=(64, 64))
        cfg = AgentConfig()
        f = StimulationFields(gray, mask, cfg=cfg, sd=2)
        p0 = np.array([64.0, 64.0])
        pc = np.array([[84.0, 64.0]])
        lo = stimulate(np.array([cfg.lambda_min]), p0, pc, f, cfg)
        hi = stimulate(np.array([cfg.lambda_max]), p0, pc, f, cfg)
        assert all(np.isfinite(c).all() for c in lo + hi)

    def test_speed_law(self):
        assert agent_speed(np.array([2]), np.array([5]))[0] == pytest.approx(0.18)
        assert agent_speed(np.array([5]), np.array([2]))[0] == pytest.approx(-0.18)


class TestAgentEquilibrium:
    def test_disk_boundary_found(self):
        gray, mask = make_disk(size=512, radius=40.0)
        c = RadialContour(center=(256.0, 256.0), radii=np.full(30, 32.0))
        refined, non_converged = refine_contour(c, gray, mask)
        assert not non_converged.any()
        np.testing.assert_allclose(refined.radii, 40.0, atol=2.0)

    def test_single_agent_wrapper(self):
        gray, mask = make_disk(size=512, radius=40.0)
        cfg = AgentConfig()
        f = StimulationFields(gray, mask, cfg=cfg)
        lam, converged = run_agent(
            np.array([256.0, 256.0]), np.array([288.0, 256.0]), f, cfg
        )
        assert converged
        assert abs(lam * 32.0 - 40.0) <= 2.0

    def test_lambda_stays_in_range(self):
        gray, mask = make_disk(size=256, radius=20.0, center=(128, 128))
        cfg = AgentConfig(max_windows=50)
        f = StimulationFields(gray, mask, cfg=cfg)
        c = RadialContour(center=(128.0, 128.0), radii=np.full(30, 16.0))
        res = run_agents(np.array([128.0, 128.0]), c.points(), f, cfg)
        assert (res.lam >= cfg.lambda_min).all()
        assert (res.lam <= cfg.lambda_max).all()

    def test_window_cap_flags_non_convergence(self):
        gray, mask = make_disk(size=512, radius=40.0)
        cfg = AgentConfig(max_windows=1)
        f = StimulationFields(gray, mask, cfg=cfg)
        c = RadialContour(center=(256.0, 256.0), radii=np.full(30, 32.0))
        res = run_agents(np.array([256.0, 256.0]), c.points(), f, cfg)
        assert not res.converged.any()


class TestRefineContour:
    def test_radii_scaled_by_lambda(self):
        gray, mask = make_disk(size=512, radius=40.0)
        c = RadialContour(center=(256.0, 256.0), radii=np.full(30, 32.0))
        refined, _ = refine_contour(c, gray, mask)
        assert refined.center == c.center
        ratios = refined.radii / c.radii
        assert (ratios >= 0.0).all() and (ratios <= 1.5).all()
