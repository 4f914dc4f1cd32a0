"""Reachability battery: validated steps against the integrated truth."""

from __future__ import annotations

import itertools
import logging

import numpy as np

from inclusion_mpc.checks.base import BaseCheck
from inclusion_mpc.errors import EnclosureFailure
from inclusion_mpc.harness.environments import Environment, linear_growth
from inclusion_mpc.harness.oracles import integrate_flow
from inclusion_mpc.inclusion.differential import DiffInclusion
from inclusion_mpc.interval import FloatArray, IntervalArray, IntervalVector
from inclusion_mpc.models import CheckResult
from inclusion_mpc.reach import reach_over_controls, reach_step

logger = logging.getLogger(__name__)

CONTAINMENT_SLACK = 1e-9
MAX_DT = 0.05
MAX_HALF_WIDTH = 0.05
INTERIOR = 0.6
DT_LADDER = (0.04, 0.02, 0.01)


def _vector(lo: FloatArray, hi: FloatArray) -> IntervalVector:
    box = IntervalArray(lo, hi).reshape(-1)
    assert isinstance(box, IntervalVector)
    return box


def _random_box(env: Environment, rng: np.random.Generator) -> IntervalVector:
    """Small box with its center in the inner part of the state box."""
    mid = env.state_box.mid()
    half = INTERIOR * env.state_box.width() / 2.0
    center = mid + rng.uniform(-1.0, 1.0, size=env.n) * half
    radius = rng.uniform(0.0, MAX_HALF_WIDTH, size=env.n)
    return _vector(center - radius, center + radius)


def _start_points(box: IntervalVector, rng: np.random.Generator, extra: int = 2) -> FloatArray:
    corners = np.array(list(itertools.product(*zip(box.lo, box.hi, strict=True))))
    inside = box.lo + rng.uniform(0.0, 1.0, size=(extra, box.shape[0])) * box.width()
    return np.vstack([corners, np.minimum(inside, box.hi)])


class ReachCheck(BaseCheck):
    """One-step containment, tightening with data, dt-consistency and growth."""

    name = "reach"

    def run(self) -> list[CheckResult]:
        results: list[CheckResult] = []
        for env in self.environments:
            data = env.sample_dataset(self.count(50, minimum=5), self.rng(20, env.name))
            di = DiffInclusion.from_data(env.side_info("constraints"), data)
            results.append(self._containment(env, di))
            early = DiffInclusion.from_data(env.side_info("constraints"), data.prefix(5))
            results.append(self._tightening(env, early, di))
            results.append(self._dt_consistency(env, di))
        results.append(self._expansive())
        return results

    def _containment(self, env: Environment, di: DiffInclusion) -> CheckResult:
        rng = self.rng(21, env.name)
        trials = self.count(1000, minimum=10)
        violations: list[dict[str, object]] = []
        failures = 0
        endpoints = 0
        for trial in range(trials):
            r = _random_box(env, rng)
            u = env.sample_controls(1, rng)[0]
            dt = float(rng.uniform(0.001, MAX_DT))
            try:
                out = reach_step(di, r, u, dt, step=trial)
            except EnclosureFailure:
                failures += 1
                continue
            box = out.r_next.inflate(0.0, CONTAINMENT_SLACK)
            for x0 in _start_points(r, rng):
                x1 = integrate_flow(env.xdot, x0, u, dt)
                if not env.state_box.contains_all(x1):
                    continue
                endpoints += 1
                if not box.contains_all(x1):
                    violations.append({"trial": trial, "x0": x0.tolist(), "dt": dt})
        if violations:
            logger.error(f"{env.name}: {len(violations)} oracle endpoints outside reach boxes")
        return self.result(
            not violations,
            f"{env.name}: {len(violations)} of {endpoints} oracle endpoints outside "
            f"({failures} steps without an enclosure)",
            {
                "trials": trials,
                "endpoints": endpoints,
                "enclosure_failures": failures,
                "violations": violations[:10],
            },
            identifier=env.name,
            prop="containment",
        )

    def _tightening(
        self, env: Environment, early: DiffInclusion, late: DiffInclusion
    ) -> CheckResult:
        """More data shrinks reach boxes on aggregate.

        Picard inflation makes single boxes non-nesting, so the comparison is on total width.
        """
        rng = self.rng(22, env.name)
        trials = self.count(100, minimum=5)
        early_width = late_width = 0.0
        compared = 0
        for trial in range(trials):
            r = _random_box(env, rng)
            u = env.sample_controls(1, rng)[0]
            dt = float(rng.uniform(0.001, MAX_DT))
            try:
                a = reach_step(early, r, u, dt, step=trial).r_next
                b = reach_step(late, r, u, dt, step=trial).r_next
            except EnclosureFailure:
                continue
            early_width += float(np.sum(a.width()))
            late_width += float(np.sum(b.width()))
            compared += 1
        ok = late_width <= early_width * (1.0 + 1e-9) + 1e-12
        return self.result(
            ok,
            f"{env.name}: total reach width {early_width:.6g} with 5 samples, "
            f"{late_width:.6g} with all",
            {"compared": compared, "early_width": early_width, "late_width": late_width},
            identifier=env.name,
            prop="tightening",
        )

    def _dt_consistency(self, env: Environment, di: DiffInclusion) -> CheckResult:
        """Width growth wd(R') - wd(R) halves (at first order) when dt halves."""
        rng = self.rng(23, env.name)
        trials = self.count(20, minimum=3)
        ratios: list[float] = []
        for trial in range(trials):
            r = _random_box(env, rng)
            u = env.sample_controls(1, rng)[0]
            try:
                growth = [
                    float(np.sum(reach_step(di, r, u, dt, step=trial).r_next.width() - r.width()))
                    for dt in DT_LADDER
                ]
            except EnclosureFailure:
                continue
            for coarse, fine in itertools.pairwise(growth):
                if coarse > 1e-12:
                    ratios.append(fine / coarse)
        median = float(np.median(ratios)) if ratios else 0.0
        return self.result(
            median <= 0.6,
            f"{env.name}: median growth ratio {median:.3f} per halving of dt",
            {"ratios": len(ratios), "median_ratio": median},
            identifier=env.name,
            prop="dt_consistency",
        )

    def _expansive(self) -> CheckResult:
        env = linear_growth()
        rng = self.rng(24)
        data = env.sample_dataset(self.count(20, minimum=5), rng)
        di = DiffInclusion.from_data(env.side_info(), data)
        r = _vector(np.array([0.5]), np.array([0.6]))
        boxes = reach_over_controls(di, r, env.control_box, env.dt, steps=5)
        widths = [float(box.width()[0]) for box in boxes]
        ok = all(b >= a - 1e-12 for a, b in itertools.pairwise([float(r.width()[0]), *widths]))
        return self.result(
            ok,
            "widths over the control box grow for xdot = x + u: "
            + ", ".join(f"{w:.4g}" for w in widths),
            {"widths": widths},
            identifier=env.name,
            prop="expansive",
        )
