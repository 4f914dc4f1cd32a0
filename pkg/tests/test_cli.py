"""Tests for the imc command line."""

import json

import pytest
from click.testing import CliRunner

from inclusion_mpc import __version__
from inclusion_mpc.cli import main
from inclusion_mpc.errors import EnclosureFailure


@pytest.fixture
def runner():
    return CliRunner()


def test_version(runner):
    result = runner.invoke(main, ["--version"])
    assert result.exit_code == 0
    assert __version__ in result.output


def test_run_writes_artifacts(runner, write_config, tmp_path):
    result = runner.invoke(main, ["run", str(write_config())])
    assert result.exit_code == 0, result.output
    out = tmp_path / "out"
    for name in ("episode.csv", "timing.csv", "summary.json", "tube.json", "dataset.jsonl"):
        assert (out / name).exists(), name
    assert not (out / "plans.jsonl").exists()
    assert json.loads((out / "summary.json").read_text())["steps"] == 4
    assert "total cost" in result.output


def test_run_options(runner, write_config, tmp_path):
    target = tmp_path / "elsewhere"
    result = runner.invoke(
        main, ["-q", "run", str(write_config()), "--out", str(target), "--seed", "9", "--plans"]
    )
    assert result.exit_code == 0, result.output
    assert (target / "plans.jsonl").exists()
    assert json.loads((target / "summary.json").read_text())["seed"] == 9
    assert "total cost" not in result.output


def test_run_missing_config(runner, tmp_path):
    result = runner.invoke(main, ["run", str(tmp_path / "missing.yaml")])
    assert result.exit_code == 1
    assert "not found" in result.output


def test_run_bad_config(runner, write_config):
    result = runner.invoke(main, ["run", str(write_config(horizon=-3))])
    assert result.exit_code == 1


def test_run_unknown_environment(runner, write_config):
    result = runner.invoke(main, ["run", str(write_config(environment="cartpole"))])
    assert result.exit_code == 1
    assert "unknown environment" in result.output


def test_toolkit_errors_map_to_exit_codes(runner, write_config, monkeypatch):
    def fail(*args, **kwargs):
        raise EnclosureFailure("no validated enclosure", step=2)

    monkeypatch.setattr("inclusion_mpc.episode.run_episode", fail)
    result = runner.invoke(main, ["run", str(write_config())])
    assert result.exit_code == 3
    assert "step 2" in result.output


def test_unexpected_errors_exit_9(runner, write_config, monkeypatch):
    def fail(*args, **kwargs):
        raise RuntimeError("boom")

    monkeypatch.setattr("inclusion_mpc.episode.run_episode", fail)
    result = runner.invoke(main, ["run", str(write_config())])
    assert result.exit_code == 9


def test_verify_interval(runner, tmp_path):
    result = runner.invoke(
        main, ["verify", "interval", "--scale", "0.001", "--out", str(tmp_path)]
    )
    assert result.exit_code == 0, result.output
    report = json.loads((tmp_path / "verify-interval.json").read_text())
    assert report["overall_status"] == "PASS"
    assert "[PASS]" in result.output


def test_verify_unknown_suite(runner, tmp_path):
    result = runner.invoke(main, ["verify", "everything", "--out", str(tmp_path)])
    assert result.exit_code == 1


def test_verify_rejects_scale(runner, tmp_path):
    result = runner.invoke(main, ["verify", "interval", "--scale", "0", "--out", str(tmp_path)])
    assert result.exit_code == 1


def test_verify_failure_exits_11(runner, tmp_path, monkeypatch):
    from inclusion_mpc.checks.interval import IntervalCheck
    from inclusion_mpc.models import CheckResult, Status

    def failing(self):
        return [CheckResult(name="interval.stub", status=Status.FAIL, summary="forced")]

    monkeypatch.setattr(IntervalCheck, "run", failing)
    result = runner.invoke(main, ["verify", "interval", "--out", str(tmp_path)])
    assert result.exit_code == 11
    assert "[FAIL]" in result.output


def test_ablate(runner, write_config, tmp_path):
    config = write_config(steps=2, trust_region={"max_iters": 10})
    result = runner.invoke(main, ["ablate", str(config)])
    assert result.exit_code == 0, result.output
    out = tmp_path / "out"
    assert (out / "ablation.csv").exists()
    for tier in ("lipschitz", "known_terms", "constraints"):
        assert (out / f"{tier}-episode.csv").exists()
    assert "probe_width" in result.output


def test_verify_theorem3_runs_the_suboptimality_battery(runner, tmp_path, monkeypatch):
    from inclusion_mpc.checks.suboptimality import SuboptimalityCheck
    from inclusion_mpc.models import CheckResult, Status

    def passing(self):
        return [CheckResult(name="suboptimality.gap", status=Status.PASS, summary="held")]

    monkeypatch.setattr(SuboptimalityCheck, "run", passing)
    result = runner.invoke(
        main, ["verify", "theorem3", "--scale", "0.01", "--out", str(tmp_path)]
    )
    assert result.exit_code == 0, result.output
    assert "Suite theorem3: PASS" in result.output
    report = json.loads((tmp_path / "verify-suboptimality.json").read_text())
    assert report["check_results"][0]["name"] == "suboptimality.gap"
