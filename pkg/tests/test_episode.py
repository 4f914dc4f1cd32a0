"""Tests for the receding-horizon episode loop."""

import numpy as np
import pytest

from inclusion_mpc.config import RunConfig
from inclusion_mpc.episode import (
    Episode,
    build_selector,
    build_side_info,
    build_trust_region,
    refine_options,
    run_episode,
)
from inclusion_mpc.errors import InconsistentData
from inclusion_mpc.models import DataPoint


def _cfg(**overrides) -> RunConfig:
    data = {
        "environment": "double_integrator",
        "side_info": "known_terms",
        "horizon": 1,
        "steps": 4,
        "seed": 1,
        "trust_region": {"max_iters": 20},
    }
    data.update(overrides)
    return RunConfig.from_dict(data)


class TestBuilders:
    def test_side_info_follows_config(self, dbl):
        cfg = _cfg(inclusion={"jacobian_weight": "row"})
        side = build_side_info(dbl, cfg)
        assert side.jacobian_weight == "row"
        assert side.known_terms is not None
        assert build_side_info(dbl, cfg, tier="lipschitz").known_terms is None

    def test_estimated_lipschitz(self, dbl):
        cfg = _cfg(lipschitz={"source": "estimated", "n_samples": 50})
        side = build_side_info(dbl, cfg)
        assert side.lipschitz_f[0] <= 1.0 + 1e-12

    def test_trust_region_overrides(self, dbl):
        tr = build_trust_region(dbl, _cfg(trust_region={"initial_radius": 0.2, "grow": 3.0}))
        assert tr.radius == 0.2
        assert tr.grow == 3.0
        assert tr.max_radius == 2.0

    def test_selector_vector(self, dbl):
        sel = build_selector(dbl, _cfg(theta=[0.0, 1.0]))
        np.testing.assert_array_equal(sel.theta, [0.0, 1.0])

    def test_refine_options(self):
        opts = refine_options(_cfg(inclusion={"max_sweeps": 3, "max_records": 7}))
        assert (opts.max_sweeps, opts.max_records) == (3, 7)


class TestEpisode:
    def test_exact_model_run(self, dbl):
        result = run_episode(dbl, _cfg())
        log = result.log
        assert len(log) == 4
        assert log.violations == 0
        assert len(result.tube) == 4
        assert len(result.plans) == 4
        assert len(result.dataset) == 4
        assert result.dataset.timestamps == pytest.approx((0.0, 0.1, 0.2, 0.3))
        assert len(log.baseline_costs) == 4
        assert all(s.bound is not None and s.bound > 0 for s in log.steps)
        for s in log.steps:
            assert dbl.control_box.contains_all(np.array(s.u))

    def test_steps_follow_the_plant(self, dbl):
        result = run_episode(dbl, _cfg(steps=2))
        first, second = result.log.steps
        u = np.array(first.u)
        x1 = np.array([1.0 + 0.005 * u[0], 0.1 * u[0]])
        np.testing.assert_allclose(second.x, x1, atol=1e-8)

    def test_deterministic_for_a_seed(self, dbl):
        cfg = _cfg(excitation_probability=0.5, steps=3)
        a = run_episode(dbl, cfg).log
        b = run_episode(dbl, cfg).log
        assert a.csv_rows() == b.csv_rows()

    def test_excitation_replaces_the_plan(self, dbl):
        result = run_episode(dbl, _cfg(excitation_probability=1.0, steps=3))
        assert all(s.excited for s in result.log.steps)
        assert result.log.violations == 0

    def test_central_difference_samples(self, dbl):
        cfg = _cfg(steps=2, inclusion={"derivatives": "central_difference", "fd_padding": 0.01})
        result = run_episode(dbl, cfg)
        assert result.dataset.timestamps == pytest.approx((0.05, 0.15))
        assert result.dataset[0].xdot_pad.tolist() == [0.01, 0.01]
        first, second = result.log.steps
        x0, x1 = np.array(first.x), np.array(second.x)
        np.testing.assert_allclose(result.dataset[0].x, (x0 + x1) / 2.0)
        np.testing.assert_allclose(result.dataset[0].xdot, (x1 - x0) / dbl.dt)

    def test_zero_steps(self, dbl):
        result = run_episode(dbl, _cfg(steps=0))
        assert len(result.log) == 0
        assert result.log.baseline_costs == []

    def test_initial_state_override(self, dbl):
        episode = Episode(dbl, _cfg(initial_state=[0.0, 2.0]))
        np.testing.assert_array_equal(episode.x, [0.0, 2.0])

    def test_dt_override(self, dbl):
        assert Episode(dbl, _cfg(dt=0.05)).dt == 0.05
        assert Episode(dbl, _cfg()).dt == dbl.dt

    def test_warm_start_shifts_the_plan(self, dbl):
        episode = Episode(dbl, _cfg())
        assert episode._warm_start() is None
        episode.step(0)
        warm = episode._warm_start()
        assert warm.shape == (2, 1)
        np.testing.assert_array_equal(warm[0], episode.plan.us[1])
        np.testing.assert_array_equal(warm[1], episode.plan.us[1])


class TestInconsistentSamples:
    BAD = DataPoint(x=[1.0, 0.0], xdot=[1e3, 0.0], u=[0.0])

    def test_raises_by_default(self, dbl):
        episode = Episode(dbl, _cfg())
        with pytest.raises(InconsistentData) as exc:
            episode._learn(self.BAD, 0.0, 0)
        assert exc.value.sample_index == 0
        assert len(episode.data) == 0

    def test_dropped_when_configured(self, dbl):
        episode = Episode(dbl, _cfg(inclusion={"drop_inconsistent": True}))
        before = episode.inclusion
        assert episode._learn(self.BAD, 0.0, 0) is True
        assert len(episode.data) == 0
        assert episode.inclusion is before
