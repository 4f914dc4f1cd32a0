"""Tests for the verification batteries and the battery runner."""

import json

import numpy as np
import pytest

from inclusion_mpc.artifacts import ArtifactStore
from inclusion_mpc.checks import SUITES, BaseCheck
from inclusion_mpc.checks.contraction import ContractionCheck
from inclusion_mpc.checks.interval import IntervalCheck
from inclusion_mpc.checks.reach import ReachCheck
from inclusion_mpc.checks.scp import ScpCheck
from inclusion_mpc.checks.suboptimality import SuboptimalityCheck
from inclusion_mpc.errors import ConfigError
from inclusion_mpc.harness.environments import double_integrator, pendulum
from inclusion_mpc.models import CheckResult, Status
from inclusion_mpc.runner import BatteryRunner, make_check


class FixedCheck(BaseCheck):
    name = "fixed"

    def __init__(self, outcomes):
        super().__init__(environments=[])
        self.outcomes = outcomes

    def run(self) -> list[CheckResult]:
        return [
            self.result(ok, f"case {i}", prop=f"case{i}") for i, ok in enumerate(self.outcomes)
        ]


class CrashingCheck(BaseCheck):
    name = "crashing"

    def run(self) -> list[CheckResult]:
        raise RuntimeError("solver exploded")


def _assert_passed(results: list[CheckResult]) -> None:
    failed = [f"{r.key}: {r.summary}" for r in results if r.status is not Status.PASS]
    assert not failed, failed


class TestBaseCheck:
    def test_scale_must_be_positive(self):
        with pytest.raises(ValueError):
            CrashingCheck(scale=0.0)

    def test_count_has_a_floor(self):
        check = FixedCheck([])
        check.scale = 0.001
        assert check.count(1000) == 1
        assert check.count(100_000, minimum=50) == 100
        assert check.count(10, minimum=5) == 5

    def test_rng_streams(self):
        check = FixedCheck([])
        a = check.rng(1, "pendulum").random(3)
        b = check.rng(1, "pendulum").random(3)
        c = check.rng(1, "duffing").random(3)
        np.testing.assert_array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_result_names(self):
        check = FixedCheck([])
        assert check.result(True, "ok").name == "fixed"
        failed = check.result(False, "bad", identifier="pendulum", prop="soundness")
        assert failed.name == "fixed.soundness"
        assert failed.status is Status.FAIL

    def test_default_environments(self):
        assert len(IntervalCheck().environments) == 4
        assert [e.name for e in SuboptimalityCheck().environments] == ["pendulum", "duffing"]


class TestRunner:
    def test_suites_registered(self):
        assert set(SUITES) == {"interval", "contraction", "reach", "scp", "suboptimality"}

    def test_unknown_suite(self):
        with pytest.raises(ConfigError, match="unknown suite"):
            make_check("everything")

    def test_theorem3_names_the_suboptimality_battery(self):
        check = make_check("theorem3", scale=0.5, seed=2)
        assert isinstance(check, SuboptimalityCheck)
        assert (check.scale, check.seed) == (0.5, 2)

    def test_overall_status(self):
        assert BatteryRunner(FixedCheck([True, True])).run().overall_status is Status.PASS
        assert BatteryRunner(FixedCheck([True, False])).run().overall_status is Status.FAIL

    def test_crash_becomes_error_row(self):
        result = BatteryRunner(CrashingCheck(environments=[])).run()
        assert result.overall_status is Status.ERROR
        (row,) = result.check_results
        assert row.details["type"] == "RuntimeError"
        assert "solver exploded" in row.summary

    def test_report_saved(self, tmp_path):
        store = ArtifactStore(tmp_path)
        BatteryRunner(FixedCheck([True]), store).run()
        report = json.loads((tmp_path / "verify-fixed.json").read_text())
        assert report["overall_status"] == "PASS"
        assert report["check_results"][0]["name"] == "fixed.case0"


class TestBatteries:
    def test_interval(self):
        results = IntervalCheck(scale=0.001, seed=3).run()
        names = {r.name for r in results}
        assert {"interval.soundness.add", "interval.division_by_zero"} <= names
        _assert_passed(results)

    def test_contraction(self):
        check = ContractionCheck(scale=0.01, seed=1, environments=[double_integrator()])
        _assert_passed(check.run())

    @pytest.mark.slow
    def test_contraction_pendulum(self):
        check = ContractionCheck(scale=0.02, seed=2, environments=[pendulum()])
        _assert_passed(check.run())

    def test_reach(self):
        results = ReachCheck(scale=0.01, seed=1, environments=[pendulum()]).run()
        props = {r.name for r in results}
        assert {"reach.containment", "reach.tightening", "reach.expansive"} <= props
        _assert_passed(results)

    def test_scp(self):
        _assert_passed(ScpCheck(scale=0.1, seed=4).run())

    @pytest.mark.slow
    def test_suboptimality(self):
        _assert_passed(SuboptimalityCheck(scale=0.01, seed=5, environments=[pendulum()]).run())

    def test_suboptimality_fails_without_a_bound(self, monkeypatch):
        monkeypatch.setattr(
            "inclusion_mpc.checks.suboptimality.horizon_bound", lambda *args, **kwargs: None
        )
        check = SuboptimalityCheck(scale=0.01, seed=5, environments=[double_integrator()])
        gaps = [r for r in check.run() if r.name == "suboptimality.gap"]
        assert len(gaps) == 3
        for row in gaps:
            assert row.status is Status.FAIL
            assert row.details["unbounded"] == row.details["trials"] > 0
            assert row.details["held"] == 0

    def test_make_check_passes_scale(self):
        check = make_check("reach", scale=0.5, seed=7)
        assert isinstance(check, ReachCheck)
        assert (check.scale, check.seed) == (0.5, 7)
