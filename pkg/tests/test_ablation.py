"""Tests for the side-information ablation."""

import numpy as np
import pytest

from inclusion_mpc.ablation import (
    AblationResult,
    check_monotone,
    ordered_tiers,
    probe_set,
    run_ablation,
)
from inclusion_mpc.config import RunConfig
from inclusion_mpc.errors import ConfigError, VerificationFailure


def _cfg(**overrides) -> RunConfig:
    data = {
        "environment": "double_integrator",
        "horizon": 1,
        "steps": 2,
        "seed": 3,
        "trust_region": {"max_iters": 10},
    }
    data.update(overrides)
    return RunConfig.from_dict(data)


def test_ordered_tiers():
    assert ordered_tiers(["constraints", "lipschitz", "constraints"]) == [
        "lipschitz",
        "constraints",
    ]
    assert ordered_tiers(["known_terms"]) == ["known_terms"]


def test_check_monotone():
    widths = {
        "lipschitz": np.array([1.0, 2.0]),
        "known_terms": np.array([0.5, 2.0]),
        "constraints": np.array([0.5, 2.5]),
    }
    assert check_monotone(widths) == ["known_terms->constraints"]


def test_check_monotone_slack():
    widths = {"lipschitz": np.array([1.0]), "known_terms": np.array([1.0005])}
    assert check_monotone(widths) == []
    assert check_monotone(widths, slack=0.0) == ["lipschitz->known_terms"]


def test_require_monotone():
    AblationResult().require_monotone()
    with pytest.raises(VerificationFailure) as exc:
        AblationResult(grew=["lipschitz->known_terms"]).require_monotone()
    assert exc.value.exit_code == 11


def test_probe_set_inside_the_state_box(dbl):
    boxes, controls = probe_set(dbl, seed=0, count=25)
    assert boxes.shape == (25, 2)
    assert controls.shape == (25, 1)
    assert np.all(boxes.lo >= dbl.state_box.lo)
    assert np.all(boxes.hi <= dbl.state_box.hi)
    assert np.all(boxes.width() <= 0.05 * dbl.state_box.width() + 1e-12)
    again, _ = probe_set(dbl, seed=0, count=25)
    np.testing.assert_array_equal(again.lo, boxes.lo)


def test_no_known_tier(dbl):
    with pytest.raises(ConfigError):
        run_ablation(dbl, _cfg(), tiers=["everything"])


def test_run_ablation(dbl):
    result = run_ablation(dbl, _cfg())
    assert [row["tier"] for row in result.rows] == ["lipschitz", "known_terms", "constraints"]
    assert set(result.episodes) == {"lipschitz", "known_terms", "constraints"}
    assert result.grew == []
    widths = [row["probe_width"] for row in result.rows]
    assert widths[0] > widths[1]
    assert all(row["violations"] == 0 for row in result.rows)
    result.require_monotone()
