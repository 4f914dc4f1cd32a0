"""Suboptimality-bound battery.

For a state x_j and a data-driven inclusion, the planner's predicted horizon cost C_j and
the true optimum C*_j must satisfy |C*_j - C_j| <= Lc (|wd R_last| + 2 sum |wd R_q|), with
R_q the boxes reachable from x_j under any admissible control. The bound must also
shrink as data accumulates.
"""

from __future__ import annotations

import itertools
import logging
from collections.abc import Sequence

import numpy as np

from inclusion_mpc.checks.base import BaseCheck
from inclusion_mpc.errors import EnclosureFailure
from inclusion_mpc.harness.environments import Environment, duffing, pendulum
from inclusion_mpc.harness.oracles import optimal_oracle
from inclusion_mpc.inclusion.differential import DiffInclusion
from inclusion_mpc.interval import FloatArray, IntervalArray, IntervalVector
from inclusion_mpc.models import CheckResult, Dataset
from inclusion_mpc.reach import reach_over_controls, suboptimality_bound
from inclusion_mpc.scp import CostModel, ScpIterate, Selector, TrustRegionState, scp_solve

logger = logging.getLogger(__name__)

HORIZONS = (1, 2, 3)
DATA_SIZES = (5, 10, 20, 50)
SPREAD = 0.3
INTERIOR = 0.5
# reach boxes from different data need not nest box by box
BOUND_REL_TOL = 1e-2


def _point(x: FloatArray) -> IntervalVector:
    box = IntervalArray.point(x)
    assert isinstance(box, IntervalVector)
    return box


def planned_cost(plan: ScpIterate, cm: CostModel) -> float:
    """Sum of stage costs along the planned (selected) trajectory."""
    states = np.vstack([plan.x0, plan.xs])
    return float(
        sum(cm.c(states[q], plan.us[q], states[q + 1]) for q in range(plan.us.shape[0]))
    )


def horizon_bound(
    env: Environment, di: DiffInclusion, cm: CostModel, x_j: FloatArray, horizon: int, dt: float
) -> float | None:
    try:
        boxes = reach_over_controls(di, _point(x_j), env.control_box, dt, horizon)
    except EnclosureFailure as e:
        logger.debug(f"{env.name}: no bound from {x_j.tolist()}: {e.detail}")
        return None
    return suboptimality_bound([box.width() for box in boxes], cm.lc)


class SuboptimalityCheck(BaseCheck):
    """Measured gaps against the reachability bound on pendulum and Duffing."""

    name = "suboptimality"

    def __init__(
        self,
        scale: float = 1.0,
        seed: int = 0,
        environments: Sequence[Environment] | None = None,
    ):
        super().__init__(scale, seed, environments or [pendulum(), duffing()])

    def run(self) -> list[CheckResult]:
        results: list[CheckResult] = []
        per_group = self.count(100 // (len(self.environments) * len(HORIZONS)) + 1)
        for env in self.environments:
            for horizon in HORIZONS:
                results.append(self._gap(env, horizon, per_group))
            results.append(self._data_monotonicity(env))
        return results

    def _start(self, env: Environment, rng: np.random.Generator) -> FloatArray:
        half = INTERIOR * env.state_box.width() / 2.0
        return env.state_box.mid() + rng.uniform(-1.0, 1.0, size=env.n) * half

    def _data(self, env: Environment, x_j: FloatArray, rng: np.random.Generator) -> Dataset:
        return env.sample_dataset(max(DATA_SIZES), rng, near=x_j, spread=SPREAD)

    def _gap(self, env: Environment, horizon: int, trials: int) -> CheckResult:
        rng = self.rng(40, env.name, horizon)
        cm = env.task_cost()
        sel = Selector.uniform(env.n, 0.5)
        tr = TrustRegionState.for_controls(env.control_box)
        held = 0
        unbounded = 0
        failures: list[dict[str, float]] = []
        for trial in range(trials):
            x_j = self._start(env, rng)
            di = DiffInclusion.from_data(env.side_info("constraints"), self._data(env, x_j, rng))
            bound = horizon_bound(env, di, cm, x_j, horizon, env.dt)
            if bound is None:
                unbounded += 1
                logger.error(f"{env.name} N={horizon}: no validated bound for trial {trial}")
                continue
            plan = scp_solve(x_j, di, cm, sel, tr, horizon, env.dt)
            predicted = planned_cost(plan, cm)
            oracle = optimal_oracle(env, cm, x_j, horizon, env.dt)
            gap = abs(oracle.cost - predicted)
            if gap <= bound + oracle.tolerance:
                held += 1
            else:
                failures.append({"trial": trial, "gap": gap, "bound": bound})
                logger.error(f"{env.name} N={horizon}: gap {gap:.6g} exceeds bound {bound:.6g}")
        # a trial without a bound counts against the battery
        return self.result(
            not failures and unbounded == 0 and trials > 0,
            f"{env.name} N={horizon}: bound held in {held}/{trials} trials"
            + (f" ({unbounded} without a bound)" if unbounded else ""),
            {"trials": trials, "held": held, "unbounded": unbounded, "failures": failures},
            identifier=f"{env.name}/N={horizon}",
            prop="gap",
        )

    def _data_monotonicity(self, env: Environment) -> CheckResult:
        rng = self.rng(41, env.name)
        cm = env.task_cost()
        trials = self.count(10, minimum=2)
        horizon = HORIZONS[-1]
        violations: list[dict[str, object]] = []
        series: list[list[float | None]] = []
        for trial in range(trials):
            x_j = self._start(env, rng)
            data = self._data(env, x_j, rng)
            bounds = [
                horizon_bound(
                    env,
                    DiffInclusion.from_data(env.side_info("constraints"), data.prefix(size)),
                    cm,
                    x_j,
                    horizon,
                    env.dt,
                )
                for size in DATA_SIZES
            ]
            series.append(bounds)
            known = [b for b in bounds if b is not None]
            if any(b > a * (1 + BOUND_REL_TOL) for a, b in itertools.pairwise(known)):
                violations.append({"trial": trial, "bounds": bounds})
        return self.result(
            not violations,
            f"{env.name}: bound non-increasing over data sizes {list(DATA_SIZES)} in "
            f"{trials - len(violations)}/{trials} trials",
            {"series": series, "violations": violations},
            identifier=env.name,
            prop="data_monotonicity",
        )
