"""Tests for data models."""

from datetime import datetime

import numpy as np
import pytest

from inclusion_mpc.errors import DimensionMismatch
from inclusion_mpc.models import (
    BatteryResult,
    CheckResult,
    DataPoint,
    Dataset,
    EpisodeLog,
    Status,
    StepRecord,
)


def _point(x: float, u: float = 0.0) -> DataPoint:
    return DataPoint(x=[x, 0.0], xdot=[0.0, u], u=[u])


def _record(step: int, cost: float, contained: bool = True) -> StepRecord:
    return StepRecord(
        step=step,
        t=0.1 * step,
        x=[1.0, 0.0],
        u=[0.5],
        stage_cost=cost,
        realized_cost=2.0,
        linear_cost=1.5,
        radius=0.5,
        bound=None if step == 0 else 3.0,
        envelope_width=0.25,
        reach_width=0.01,
        contained=contained,
    )


class TestStatus:
    def test_severity_order(self):
        assert Status.PASS.severity < Status.FAIL.severity < Status.ERROR.severity

    def test_is_problem(self):
        assert not Status.PASS.is_problem()
        assert Status.FAIL.is_problem()
        assert Status.ERROR.is_problem()

    def test_str(self):
        assert str(Status.FAIL) == "FAIL"


class TestCheckResult:
    def test_round_trip(self):
        result = CheckResult(
            name="reach.containment",
            status=Status.FAIL,
            summary="2 endpoints outside",
            details={"violations": 2},
            identifier="pendulum",
        )
        assert CheckResult.from_dict(result.to_dict()) == result
        assert result.key == "reach.containment:pendulum"

    def test_key_without_identifier(self):
        assert CheckResult(name="scp", status=Status.PASS, summary="").key == "scp"


class TestBatteryResult:
    def test_overall_is_worst(self):
        now = datetime.now()
        results = [
            CheckResult(name="a", status=Status.PASS, summary=""),
            CheckResult(name="b", status=Status.FAIL, summary=""),
        ]
        battery = BatteryResult(suite="reach", ts_start=now, ts_end=now, check_results=results)
        assert battery.overall_status is Status.FAIL
        data = battery.to_dict()
        assert data["overall_status"] == "FAIL"
        assert len(data["check_results"]) == 2

    def test_empty_is_error(self):
        now = datetime.now()
        battery = BatteryResult(suite="reach", ts_start=now, ts_end=now, check_results=[])
        assert battery.overall_status is Status.ERROR


class TestDataPoint:
    def test_coerces_and_copies(self):
        x = np.array([1.0, 2.0])
        point = DataPoint(x=x, xdot=[0.0, 1.0], u=[3])
        x[0] = 9.0
        assert point.x[0] == 1.0
        assert point.u.dtype == np.float64
        assert (point.n, point.m) == (2, 1)

    def test_dimension_checks(self):
        with pytest.raises(DimensionMismatch):
            DataPoint(x=[1.0, 2.0], xdot=[1.0], u=[0.0])
        with pytest.raises(DimensionMismatch):
            DataPoint(x=[[1.0]], xdot=[[1.0]], u=[0.0])

    def test_padding(self):
        point = DataPoint(x=[0.0, 0.0], xdot=[1.0, -1.0], u=[0.0], xdot_pad=0.5)
        box = point.xdot_interval()
        np.testing.assert_allclose(box.lo, [0.5, -1.5])
        np.testing.assert_allclose(box.hi, [1.5, -0.5])
        assert DataPoint.from_dict(point.to_dict()).xdot_pad.tolist() == [0.5, 0.5]
        with pytest.raises(ValueError):
            DataPoint(x=[0.0], xdot=[0.0], u=[0.0], xdot_pad=-1.0)

    def test_exact_point(self):
        box = _point(1.0, 2.0).xdot_interval()
        np.testing.assert_array_equal(box.lo, box.hi)


class TestDataset:
    def test_append_and_prefix(self):
        data = Dataset()
        assert data.append(_point(0.0), 0.0) == 0
        assert data.append(_point(1.0), 0.5) == 1
        data.append(_point(2.0), 2.0)
        assert len(data) == 3
        head = data.prefix(2)
        assert len(head) == 2
        assert head.timestamps == (0.0, 0.5)
        assert head[1].x[0] == 1.0

    @pytest.mark.parametrize("t", [1.0, 0.5])
    def test_timestamps_strictly_increase(self, t):
        data = Dataset()
        data.append(_point(0.0), 1.0)
        with pytest.raises(ValueError):
            data.append(_point(1.0), t)

    def test_dimensions_fixed_by_first_point(self):
        data = Dataset()
        data.append(_point(0.0), 0.0)
        with pytest.raises(DimensionMismatch):
            data.append(DataPoint(x=[0.0], xdot=[0.0], u=[0.0]), 1.0)

    def test_jsonl_file(self, tmp_path):
        data = Dataset()
        data.append(_point(0.0, 1.0), 0.0)
        data.append(_point(1.0, -1.0), 0.1)
        path = tmp_path / "data.jsonl"
        data.save(path)
        assert len(path.read_text().splitlines()) == 2
        loaded = Dataset.load(path)
        assert loaded.timestamps == data.timestamps
        np.testing.assert_array_equal(loaded[1].xdot, data[1].xdot)
        assert loaded[0].xdot_pad is None


class TestEpisodeLog:
    def _log(self, costs, contained=None) -> EpisodeLog:
        log = EpisodeLog(environment="double_integrator", tier="constraints", seed=0)
        flags = contained or [True] * len(costs)
        log.steps = [_record(i, c, f) for i, (c, f) in enumerate(zip(costs, flags, strict=True))]
        return log

    def test_totals(self):
        log = self._log([4.0, 3.0, 2.0, 1.0, 1.0, 1.0, 1.0, 3.0])
        assert len(log) == 8
        assert log.total_cost == pytest.approx(16.0)
        assert log.final_quarter_cost() == pytest.approx(2.0)
        assert log.mean_envelope_width == pytest.approx(0.25)

    def test_final_quarter_of_short_log(self):
        assert self._log([5.0, 1.0]).final_quarter_cost() == pytest.approx(1.0)
        assert self._log([]).final_quarter_cost() == 0.0

    def test_violations(self):
        log = self._log([1.0, 1.0, 1.0], contained=[True, False, False])
        assert log.violations == 2
        assert log.summary()["violations"] == 2

    def test_csv_layout(self):
        log = self._log([1.0, 2.0])
        header = log.csv_header()
        assert header[:4] == ["t", "x0", "x1", "u0"]
        assert header[4:] == list(EpisodeLog.CSV_COLUMNS[3:])
        rows = log.csv_rows()
        assert len(rows) == 2
        assert all(len(row) == len(header) for row in rows)
        assert rows[0][header.index("bound")] == ""
        assert float(rows[1][header.index("bound")]) == 3.0

    def test_summary_with_baseline_and_oracle(self):
        log = self._log([1.0, 1.0, 1.0, 1.0])
        log.baseline_costs = [2.0, 2.0, 2.0, 6.0]
        log.oracle_cost = 3.5
        summary = log.summary()
        assert summary["baseline_total_cost"] == pytest.approx(12.0)
        assert summary["baseline_final_quarter_cost"] == pytest.approx(6.0)
        assert summary["gap"] == pytest.approx(0.5)
        assert summary["steps"] == 4
