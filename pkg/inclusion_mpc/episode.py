"""Episode driver - the receding-horizon loop.

Each step observes the state, plans over the horizon with `scp_solve`, applies the first
control (or an excitation sample), lets the true plant evolve, records the derivative
sample and tightens the inclusion with it.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field, replace

import numpy as np

from inclusion_mpc.config import RunConfig
from inclusion_mpc.errors import EnclosureFailure, InconsistentData
from inclusion_mpc.harness.costs import QuadraticCost
from inclusion_mpc.harness.environments import Environment, Tier
from inclusion_mpc.harness.lipschitz import estimate_lipschitz
from inclusion_mpc.harness.oracles import integrate_flow, rollout_zero_control
from inclusion_mpc.inclusion.differential import DiffInclusion
from inclusion_mpc.inclusion.refine import RefineOptions
from inclusion_mpc.inclusion.side import SideInfo
from inclusion_mpc.interval import FloatArray, IntervalArray, IntervalVector
from inclusion_mpc.lp.simplex import LpSolver
from inclusion_mpc.models import DataPoint, Dataset, EpisodeLog, StepRecord
from inclusion_mpc.reach import reach_over_controls, reach_step, suboptimality_bound
from inclusion_mpc.scp import ScpIterate, Selector, TrustRegionState, scp_solve

logger = logging.getLogger(__name__)

CONTAINMENT_SLACK = 1e-9


def build_side_info(env: Environment, cfg: RunConfig, tier: Tier | None = None) -> SideInfo:
    tier = tier or cfg.side_info
    if cfg.lipschitz.source == "estimated":
        side = estimate_lipschitz(
            env, cfg.lipschitz.n_samples, cfg.lipschitz.safety, seed=cfg.seed, tier=tier
        )
    else:
        side = env.side_info(tier)
    return replace(side, jacobian_weight=cfg.inclusion.jacobian_weight)


def build_cost(env: Environment, cfg: RunConfig) -> QuadraticCost:
    return env.task_cost(cfg.cost.state_weights, cfg.cost.control_weight, cfg.cost.target)


def build_trust_region(env: Environment, cfg: RunConfig) -> TrustRegionState:
    tr = cfg.trust_region
    return TrustRegionState.for_controls(
        env.control_box,
        radius=tr.initial_radius,
        min_radius=tr.min_radius,
        max_radius=tr.max_radius,
        rho_accept=tr.rho_accept,
        rho_good=tr.rho_good,
        shrink=tr.shrink,
        grow=tr.grow,
        penalty=tr.penalty,
        max_iters=tr.max_iters,
        trust_norm=tr.trust_norm,
        penalty_norm=tr.penalty_norm,
    )


def build_selector(env: Environment, cfg: RunConfig) -> Selector:
    if isinstance(cfg.theta, list):
        return Selector(np.asarray(cfg.theta, dtype=np.float64))
    return Selector.uniform(env.n, cfg.theta)


def refine_options(cfg: RunConfig) -> RefineOptions:
    inc = cfg.inclusion
    return RefineOptions(
        max_sweeps=inc.max_sweeps,
        sweep_tol=inc.sweep_tol,
        strict_sweeps=inc.strict_sweeps,
        max_records=inc.max_records,
    )


def _point(x: FloatArray) -> IntervalVector:
    box = IntervalArray.point(x)
    assert isinstance(box, IntervalVector)
    return box


@dataclass
class EpisodeResult:
    log: EpisodeLog
    tube: list[IntervalVector] = field(default_factory=list)
    dataset: Dataset = field(default_factory=Dataset)
    inclusion: DiffInclusion | None = None
    plans: list[ScpIterate] = field(default_factory=list)


class Episode:
    """State of one running episode."""

    def __init__(
        self,
        env: Environment,
        cfg: RunConfig,
        tier: Tier | None = None,
        solver: LpSolver | None = None,
    ):
        self.env = env
        self.cfg = cfg
        self.tier: Tier = tier or cfg.side_info
        self.dt = cfg.dt or env.dt
        self.rng = np.random.default_rng(cfg.seed)
        self.side = build_side_info(env, cfg, self.tier)
        self.cost = build_cost(env, cfg)
        self.trust = build_trust_region(env, cfg)
        self.selector = build_selector(env, cfg)
        self.options = refine_options(cfg)
        self.solver = solver
        self.inclusion = DiffInclusion.seeded(self.side)
        self.data = Dataset()
        x0 = env.initial_state if cfg.initial_state is None else cfg.initial_state
        self.x = np.asarray(x0, dtype=np.float64)
        self.plan: ScpIterate | None = None
        self.log = EpisodeLog(environment=env.name, tier=self.tier, seed=cfg.seed)
        self.tube: list[IntervalVector] = []
        self.plans: list[ScpIterate] = []

    def _warm_start(self) -> FloatArray | None:
        """Previous plan shifted by one stage, last control repeated."""
        if self.plan is None:
            return None
        us = self.plan.us
        return np.vstack([us[1:], us[-1:]])

    def _bound(self, step: int) -> float | None:
        try:
            boxes = reach_over_controls(
                self.inclusion, _point(self.x), self.env.control_box, self.dt, self.cfg.horizon
            )
        except EnclosureFailure as e:
            logger.debug(f"No suboptimality bound at step {step}: {e.detail}")
            return None
        return suboptimality_bound([box.width() for box in boxes], self.cost.lc)

    def _sample(self, u: FloatArray, x_next: FloatArray, t: float) -> tuple[DataPoint, float]:
        """Derivative sample for the step just taken, with its timestamp."""
        if self.cfg.inclusion.derivatives == "exact":
            return DataPoint(x=self.x, xdot=self.env.xdot(self.x, u), u=u), t
        # central difference over the step, attributed to the chord midpoint
        x_mid = (self.x + x_next) / 2.0
        xdot = (x_next - self.x) / self.dt
        pad = np.full(self.env.n, self.cfg.inclusion.fd_padding)
        return DataPoint(x=x_mid, xdot=xdot, u=u, xdot_pad=pad), t + self.dt / 2.0

    def _learn(self, point: DataPoint, ts: float, step: int) -> bool:
        """Refine with the sample; returns True when it was dropped."""
        try:
            refined = self.inclusion.refined(
                point, self.data, sample_index=len(self.data), options=self.options
            )
        except InconsistentData as e:
            if not self.cfg.inclusion.drop_inconsistent:
                raise
            logger.warning(f"Dropping inconsistent sample at step {step}: {e.detail}")
            return True
        self.data.append(point, ts)
        self.inclusion = refined
        return False

    def step(self, j: int) -> StepRecord:
        started = time.perf_counter()
        t = j * self.dt
        plan = scp_solve(
            self.x,
            self.inclusion,
            self.cost,
            self.selector,
            self.trust,
            self.cfg.horizon,
            self.dt,
            solver=self.solver,
            initial_controls=self._warm_start(),
        )
        u = plan.first_control.copy()
        excited = bool(self.rng.random() < self.cfg.excitation_probability)
        predicted: IntervalVector | None = plan.reach[0].r_next if plan.reach else None
        if excited:
            u = self.rng.uniform(self.env.control_box.lo, self.env.control_box.hi)
            try:
                predicted = reach_step(self.inclusion, _point(self.x), u, self.dt, j).r_next
            except EnclosureFailure as e:
                logger.debug(f"No predicted box for the excitation at step {j}: {e.detail}")
                predicted = None
        bound = self._bound(j)

        x_next = integrate_flow(self.env.xdot, self.x, u, self.dt)
        contained = True
        if predicted is not None:
            self.tube.append(predicted)
            contained = predicted.inflate(0.0, CONTAINMENT_SLACK).contains_all(x_next)
            if not contained:
                logger.error(f"Step {j}: true next state left the predicted reachable box")

        point, ts = self._sample(u, x_next, t)
        dropped = self._learn(point, ts, j)
        stage_cost = self.cost.c(self.x, u, x_next)
        record = StepRecord(
            step=j,
            t=t,
            x=self.x.tolist(),
            u=u.tolist(),
            stage_cost=stage_cost,
            realized_cost=plan.realized_cost,
            linear_cost=plan.linear_cost,
            radius=plan.radius,
            bound=bound,
            envelope_width=self.inclusion.mean_width(),
            reach_width=float(np.mean(predicted.width())) if predicted is not None else 0.0,
            ms=(time.perf_counter() - started) * 1000.0,
            excited=excited,
            dropped=dropped,
            contained=contained,
        )
        logger.info(
            f"Step {j}: u={np.round(u, 4).tolist()} J={plan.realized_cost:.6g} "
            f"r={plan.radius:.3g} stage cost={stage_cost:.6g}"
        )
        self.plan = plan
        self.plans.append(plan)
        self.x = x_next
        return record

    def run(self) -> EpisodeResult:
        logger.info(
            f"Episode on {self.env.name} ({self.tier}): {self.cfg.steps} steps, "
            f"N={self.cfg.horizon}, dt={self.dt:g}"
        )
        start = self.x.copy()
        for j in range(self.cfg.steps):
            self.log.steps.append(self.step(j))
        if self.cfg.steps:
            baseline = rollout_zero_control(self.env, start, self.cfg.steps, self.dt)
            u0 = np.clip(np.zeros(self.env.m), self.env.control_box.lo, self.env.control_box.hi)
            self.log.baseline_costs = [
                self.cost.c(baseline[q], u0, baseline[q + 1]) for q in range(self.cfg.steps)
            ]
        return EpisodeResult(
            log=self.log,
            tube=self.tube,
            dataset=self.data,
            inclusion=self.inclusion,
            plans=self.plans,
        )


def run_episode(
    env: Environment,
    cfg: RunConfig,
    tier: Tier | None = None,
    solver: LpSolver | None = None,
) -> EpisodeResult:
    """Run one closed-loop episode; `tier` overrides the configured side information."""
    return Episode(env, cfg, tier=tier, solver=solver).run()
