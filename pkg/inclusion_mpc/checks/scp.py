"""SCP battery: the planner against the true-dynamics optimum where the model is exact.

The double integrator with its known terms has point enclosures, so the planned
trajectory is the true one and the planner must reach the oracle's optimum.
"""

from __future__ import annotations

import itertools
import logging

import numpy as np

from inclusion_mpc.checks.base import BaseCheck
from inclusion_mpc.harness.environments import double_integrator
from inclusion_mpc.harness.oracles import ode_oracle, optimal_oracle, trajectory_cost
from inclusion_mpc.inclusion.differential import DiffInclusion
from inclusion_mpc.models import CheckResult
from inclusion_mpc.scp import Selector, TrustRegionState, scp_solve

logger = logging.getLogger(__name__)

COST_TOL = 1e-4
HORIZON = 2
START_BOX = 1.5


class ScpCheck(BaseCheck):
    """Planner cost against the grid-and-polish oracle on random initial states."""

    name = "scp"

    def run(self) -> list[CheckResult]:
        env = double_integrator()
        di = DiffInclusion.seeded(env.side_info("constraints"))
        cm = env.task_cost()
        sel = Selector.uniform(env.n, 0.5)
        tr = TrustRegionState.for_controls(env.control_box, min_radius=1e-7, max_iters=200)
        rng = self.rng(30)
        trials = self.count(20, minimum=2)

        gaps: list[float] = []
        misses: list[dict[str, float]] = []
        unordered: list[int] = []
        for trial in range(trials):
            x0 = rng.uniform(-START_BOX, START_BOX, size=env.n)
            plan = scp_solve(x0, di, cm, sel, tr, HORIZON, env.dt)
            states = ode_oracle(env, x0, plan.us, env.dt)
            cost = trajectory_cost(cm, states, plan.us)
            oracle = optimal_oracle(env, cm, x0, HORIZON, env.dt)
            gap = cost - oracle.cost
            gaps.append(gap)
            if abs(gap) > COST_TOL + oracle.tolerance:
                misses.append({"trial": trial, "planner": cost, "oracle": oracle.cost})
            if any(b > a * (1 + 1e-12) + 1e-12 for a, b in itertools.pairwise(plan.history)):
                unordered.append(trial)
            logger.debug(f"Trial {trial}: planner {cost:.8g}, oracle {oracle.cost:.8g}")

        return [
            self.result(
                not misses,
                f"{len(misses)} of {trials} plans differ from the oracle by more than "
                f"{COST_TOL:g} (largest gap {max(gaps, key=abs):.3g})",
                {"trials": trials, "gaps": gaps, "misses": misses},
                identifier=env.name,
                prop="oracle_gap",
            ),
            self.result(
                not unordered,
                f"accepted realized costs non-increasing in {trials - len(unordered)} of "
                f"{trials} solves",
                {"violations": unordered},
                identifier=env.name,
                prop="monotone_acceptance",
            ),
        ]
