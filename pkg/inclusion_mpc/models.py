"""Data models for inclusion MPC."""

from __future__ import annotations

import json
from collections.abc import Iterator
from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from pathlib import Path
from typing import Any, ClassVar

import numpy as np

from inclusion_mpc.errors import DimensionMismatch
from inclusion_mpc.interval import FloatArray, IntervalArray, IntervalVector


class Status(str, Enum):
    """Check status levels."""

    PASS = "PASS"
    FAIL = "FAIL"
    ERROR = "ERROR"

    def __str__(self) -> str:
        return self.value

    @property
    def severity(self) -> int:
        """Return numeric severity for comparison (higher = worse)."""
        return {"PASS": 0, "FAIL": 1, "ERROR": 2}[self.value]

    def is_problem(self) -> bool:
        """Return True if status indicates a problem."""
        return self is not Status.PASS


@dataclass
class CheckResult:
    """Result from a single battery check."""

    name: str
    status: Status
    summary: str
    details: dict[str, Any] = field(default_factory=dict)
    identifier: str = ""  # e.g. environment name

    def to_dict(self) -> dict[str, Any]:
        """Convert to dictionary for JSON serialization."""
        return {
            "name": self.name,
            "status": str(self.status),
            "summary": self.summary,
            "details": self.details,
            "identifier": self.identifier,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> CheckResult:
        """Create from dictionary."""
        return cls(
            name=data["name"],
            status=Status(data["status"]),
            summary=data["summary"],
            details=data.get("details", {}),
            identifier=data.get("identifier", ""),
        )

    @property
    def key(self) -> str:
        if self.identifier:
            return f"{self.name}:{self.identifier}"
        return self.name


@dataclass
class BatteryResult:
    """Result from running one verification suite."""

    suite: str
    ts_start: datetime
    ts_end: datetime
    check_results: list[CheckResult]
    version: str = "1.0.0"

    @property
    def overall_status(self) -> Status:
        """Worst status over all checks; an empty battery is an error."""
        if not self.check_results:
            return Status.ERROR
        worst = max(self.check_results, key=lambda r: r.status.severity)
        return worst.status

    def to_dict(self) -> dict[str, Any]:
        """Convert to dictionary."""
        return {
            "suite": self.suite,
            "ts_start": self.ts_start.isoformat(),
            "ts_end": self.ts_end.isoformat(),
            "overall_status": str(self.overall_status),
            "check_results": [r.to_dict() for r in self.check_results],
            "version": self.version,
        }


@dataclass(frozen=True, eq=False)
class DataPoint:
    """One observation (x, xdot, u); `xdot_pad` widens xdot to an interval when set."""

    x: FloatArray
    xdot: FloatArray
    u: FloatArray
    xdot_pad: FloatArray | None = None

    def __post_init__(self) -> None:
        for name in ("x", "xdot", "u"):
            object.__setattr__(self, name, np.array(getattr(self, name), dtype=np.float64))
        if self.x.ndim != 1 or self.xdot.shape != self.x.shape or self.u.ndim != 1:
            raise DimensionMismatch("x and xdot must be vectors of the same length")
        if self.xdot_pad is not None:
            pad = np.broadcast_to(np.asarray(self.xdot_pad, dtype=np.float64), self.x.shape)
            if np.any(pad < 0):
                raise ValueError("derivative padding must be nonnegative")
            object.__setattr__(self, "xdot_pad", pad.copy())

    @property
    def n(self) -> int:
        return int(self.x.shape[0])

    @property
    def m(self) -> int:
        return int(self.u.shape[0])

    def xdot_interval(self) -> IntervalVector:
        if self.xdot_pad is None:
            out = IntervalArray.point(self.xdot)
        else:
            out = IntervalArray.point(self.xdot) + IntervalArray(-self.xdot_pad, self.xdot_pad)
        assert isinstance(out, IntervalVector)
        return out

    def to_dict(self) -> dict[str, Any]:
        data: dict[str, Any] = {
            "x": self.x.tolist(),
            "xdot": self.xdot.tolist(),
            "u": self.u.tolist(),
        }
        if self.xdot_pad is not None:
            data["xdot_pad"] = self.xdot_pad.tolist()
        return data

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> DataPoint:
        return cls(
            x=np.asarray(data["x"], dtype=np.float64),
            xdot=np.asarray(data["xdot"], dtype=np.float64),
            u=np.asarray(data["u"], dtype=np.float64),
            xdot_pad=None if data.get("xdot_pad") is None else np.asarray(data["xdot_pad"]),
        )


class Dataset:
    """Append-only sequence of observations with strictly increasing timestamps."""

    def __init__(self) -> None:
        self._points: list[DataPoint] = []
        self._times: list[float] = []

    def __len__(self) -> int:
        return len(self._points)

    def __iter__(self) -> Iterator[DataPoint]:
        return iter(self._points)

    def __getitem__(self, index: int) -> DataPoint:
        return self._points[index]

    @property
    def points(self) -> tuple[DataPoint, ...]:
        return tuple(self._points)

    @property
    def timestamps(self) -> tuple[float, ...]:
        return tuple(self._times)

    def append(self, point: DataPoint, t: float) -> int:
        """Add a point; returns its index."""
        if self._times and not t > self._times[-1]:
            raise ValueError(f"timestamp {t} does not follow {self._times[-1]}")
        if self._points and (point.n, point.m) != (self._points[0].n, self._points[0].m):
            raise DimensionMismatch("data point dimensions differ from the dataset")
        self._points.append(point)
        self._times.append(float(t))
        return len(self._points) - 1

    def prefix(self, count: int) -> Dataset:
        out = Dataset()
        for point, t in zip(self._points[:count], self._times[:count], strict=True):
            out.append(point, t)
        return out

    def to_jsonl(self) -> str:
        lines = [
            json.dumps({"t": t, **point.to_dict()})
            for point, t in zip(self._points, self._times, strict=True)
        ]
        return "".join(f"{line}\n" for line in lines)

    @classmethod
    def from_jsonl(cls, text: str) -> Dataset:
        out = cls()
        for line in text.splitlines():
            if not line.strip():
                continue
            row = json.loads(line)
            out.append(DataPoint.from_dict(row), row["t"])
        return out

    def save(self, path: Path) -> None:
        path.write_text(self.to_jsonl())

    @classmethod
    def load(cls, path: Path) -> Dataset:
        return cls.from_jsonl(path.read_text())


@dataclass
class StepRecord:
    """One episode step."""

    step: int
    t: float
    x: list[float]
    u: list[float]
    stage_cost: float
    realized_cost: float
    linear_cost: float
    radius: float
    bound: float | None
    envelope_width: float
    reach_width: float
    ms: float = 0.0
    excited: bool = False
    dropped: bool = False
    contained: bool = True


@dataclass
class EpisodeLog:
    """Per-step records plus summary of one episode."""

    environment: str
    tier: str
    seed: int
    steps: list[StepRecord] = field(default_factory=list)
    oracle_cost: float | None = None
    baseline_costs: list[float] = field(default_factory=list)  # zero-control stage costs

    CSV_COLUMNS: ClassVar[tuple[str, ...]] = (
        "t",
        "x",
        "u",
        "J",
        "L",
        "r",
        "bound",
        "envelope_width",
        "reach_width",
        "stage_cost",
    )

    def __len__(self) -> int:
        return len(self.steps)

    @property
    def total_cost(self) -> float:
        return float(sum(s.stage_cost for s in self.steps))

    @property
    def violations(self) -> int:
        """Steps whose realized next state fell outside the predicted reachable box."""
        return sum(1 for s in self.steps if not s.contained)

    @property
    def mean_envelope_width(self) -> float:
        finite = [s.envelope_width for s in self.steps if np.isfinite(s.envelope_width)]
        return float(np.mean(finite)) if finite else float("nan")

    @property
    def median_ms(self) -> float:
        return float(np.median([s.ms for s in self.steps])) if self.steps else 0.0

    def final_quarter_cost(self) -> float:
        if not self.steps:
            return 0.0
        tail = self.steps[len(self.steps) - max(1, len(self.steps) // 4) :]
        return float(np.mean([s.stage_cost for s in tail]))

    def baseline_final_quarter_cost(self) -> float | None:
        if not self.baseline_costs:
            return None
        costs = self.baseline_costs
        return float(np.mean(costs[len(costs) - max(1, len(costs) // 4) :]))

    def csv_header(self) -> list[str]:
        if not self.steps:
            return list(self.CSV_COLUMNS)
        n, m = len(self.steps[0].x), len(self.steps[0].u)
        return (
            ["t"]
            + [f"x{i}" for i in range(n)]
            + [f"u{i}" for i in range(m)]
            + list(self.CSV_COLUMNS[3:])
        )

    def csv_rows(self) -> list[list[str]]:
        rows = []
        for s in self.steps:
            values: list[float | None] = [s.t, *s.x, *s.u]
            values += [
                s.realized_cost,
                s.linear_cost,
                s.radius,
                s.bound,
                s.envelope_width,
                s.reach_width,
                s.stage_cost,
            ]
            rows.append(["" if v is None else repr(float(v)) for v in values])
        return rows

    def summary(self) -> dict[str, Any]:
        gap = None if self.oracle_cost is None else abs(self.oracle_cost - self.total_cost)
        baseline = float(sum(self.baseline_costs)) if self.baseline_costs else None
        return {
            "environment": self.environment,
            "tier": self.tier,
            "seed": self.seed,
            "steps": len(self.steps),
            "total_cost": self.total_cost,
            "final_quarter_cost": self.final_quarter_cost(),
            "mean_envelope_width": self.mean_envelope_width,
            "violations": self.violations,
            "dropped_samples": sum(1 for s in self.steps if s.dropped),
            "oracle_cost": self.oracle_cost,
            "gap": gap,
            "baseline_total_cost": baseline,
            "baseline_final_quarter_cost": self.baseline_final_quarter_cost(),
            "median_ms": self.median_ms,
        }

