"""Tests for configuration loading."""

from pathlib import Path

import pytest

from inclusion_mpc.config import RunConfig, Settings, load_config, resolve_output_dir
from inclusion_mpc.errors import ConfigError

CONFIG_DIR = Path(__file__).resolve().parent.parent / "config"


def test_defaults():
    cfg = RunConfig.from_dict({"environment": "pendulum"})
    assert cfg.side_info == "constraints"
    assert cfg.horizon == 2
    assert cfg.dt is None
    assert cfg.theta == 0.5
    assert cfg.trust_region.trust_norm == "inf"
    assert cfg.trust_region.penalty_norm == "one"
    assert cfg.inclusion.derivatives == "exact"
    assert cfg.inclusion.jacobian_weight == "column"
    assert cfg.lipschitz.source == "declared"
    assert cfg.ablation_tiers == ["lipschitz", "known_terms", "constraints"]


def test_from_yaml(write_config):
    cfg = RunConfig.from_yaml(write_config(trust_region={"max_iters": 5}))
    assert cfg.environment == "double_integrator"
    assert cfg.side_info == "known_terms"
    assert cfg.steps == 4
    assert cfg.trust_region.max_iters == 5


@pytest.mark.parametrize("name", sorted(p.name for p in CONFIG_DIR.glob("*.yaml")))
def test_shipped_configs_load(name):
    cfg = RunConfig.from_yaml(CONFIG_DIR / name)
    assert cfg.environment


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        RunConfig.from_yaml(tmp_path / "nope.yaml")


def test_malformed_yaml(tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text("environment: [pendulum\n")
    with pytest.raises(ConfigError, match="malformed"):
        RunConfig.from_yaml(path)


def test_top_level_must_be_mapping(tmp_path):
    path = tmp_path / "list.yaml"
    path.write_text("- pendulum\n")
    with pytest.raises(ConfigError, match="mapping"):
        RunConfig.from_yaml(path)


@pytest.mark.parametrize(
    "data",
    [
        {},
        {"environment": "pendulum", "horizon": -1},
        {"environment": "pendulum", "theta": 1.5},
        {"environment": "pendulum", "theta": [0.5, -0.1]},
        {"environment": "pendulum", "side_info": "everything"},
        {"environment": "pendulum", "colour": "blue"},
        {"environment": "pendulum", "trust_region": {"radius": 1.0}},
        {"environment": "pendulum", "cost": {"state_weights": [1.0, -1.0]}},
        {"environment": "pendulum", "lipschitz": {"safety": 0.5}},
        {"environment": "pendulum", "ablation_tiers": []},
    ],
)
def test_rejected(data):
    with pytest.raises(ConfigError) as exc:
        RunConfig.from_dict(data)
    assert exc.value.exit_code == 1


def test_with_overrides():
    cfg = RunConfig.from_dict({"environment": "pendulum", "seed": 3})
    changed = cfg.with_overrides(seed=9, horizon=None)
    assert changed.seed == 9
    assert changed.horizon == cfg.horizon
    assert cfg.seed == 3
    with pytest.raises(ConfigError):
        cfg.with_overrides(steps=-2)


def test_load_config_search(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    with pytest.raises(ConfigError, match="no configuration"):
        load_config()
    (tmp_path / "config.yaml").write_text("environment: duffing\n")
    assert load_config().environment == "duffing"


def test_settings_from_env(monkeypatch):
    monkeypatch.setenv("IMC_OUTPUT_DIR", "/tmp/imc-runs")
    monkeypatch.setenv("IMC_LOG_LEVEL", "DEBUG")
    settings = Settings()
    assert settings.output_dir == "/tmp/imc-runs"
    assert settings.log_level == "DEBUG"


def test_output_dir_precedence(monkeypatch, tmp_path):
    monkeypatch.setenv("IMC_OUTPUT_DIR", str(tmp_path / "env"))
    bare = RunConfig.from_dict({"environment": "pendulum"})
    assert resolve_output_dir(bare) == tmp_path / "env"
    configured = bare.with_overrides(output_dir=str(tmp_path / "cfg"))
    assert resolve_output_dir(configured) == tmp_path / "cfg"
    assert resolve_output_dir(configured, tmp_path / "cli") == tmp_path / "cli"
