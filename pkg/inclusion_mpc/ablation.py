"""Side-information ablation.

The same episode (environment, seed, horizon) runs once per tier. Episode costs and widths
are reported as they come, but closed-loop trajectories differ between tiers, so the
monotonicity claim is checked on one common dataset: every tier's inclusion is built from
the first tier's samples and evaluated over the same probe boxes and controls.
"""

from __future__ import annotations

import itertools
import logging
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from inclusion_mpc.config import RunConfig
from inclusion_mpc.episode import EpisodeResult, build_side_info, refine_options, run_episode
from inclusion_mpc.errors import ConfigError, VerificationFailure
from inclusion_mpc.harness.environments import TIERS, Environment, Tier
from inclusion_mpc.inclusion.differential import DiffInclusion
from inclusion_mpc.interval import FloatArray, IntervalArray
from inclusion_mpc.lp.simplex import LpSolver
from inclusion_mpc.models import Dataset

logger = logging.getLogger(__name__)

PROBES = 100
PROBE_FRACTION = 0.05
WIDTH_TOL = 1e-9
# refinement stops at a sweep tolerance, so tiers can settle a little apart
TIER_SLACK = 1e-3


@dataclass
class AblationResult:
    rows: list[dict[str, Any]] = field(default_factory=list)
    episodes: dict[str, EpisodeResult] = field(default_factory=dict)
    probe_widths: dict[str, FloatArray] = field(default_factory=dict)
    grew: list[str] = field(default_factory=list)

    def require_monotone(self) -> None:
        if self.grew:
            raise VerificationFailure(
                f"enclosure widths grew with more side information ({', '.join(self.grew)})"
            )


def ordered_tiers(tiers: Sequence[str]) -> list[Tier]:
    """Distinct tiers in order of increasing side information."""
    return [t for t in TIERS if t in set(tiers)]


def probe_set(
    env: Environment, seed: int, count: int = PROBES
) -> tuple[IntervalArray, IntervalArray]:
    """Fixed state boxes (Q, n) and point controls (Q, m) for width comparisons."""
    rng = np.random.default_rng([seed, 7])
    centers = env.sample_states(count, rng)
    half = PROBE_FRACTION * env.state_box.width() / 2.0
    lo = np.maximum(centers - half, env.state_box.lo)
    hi = np.minimum(centers + half, env.state_box.hi)
    return IntervalArray(lo, hi), IntervalArray.point(env.sample_controls(count, rng))


def probe_widths(
    env: Environment, cfg: RunConfig, tier: Tier, data: Dataset, seed: int
) -> FloatArray:
    """Widths of h(A, u) over the common probes, shape (Q, n)."""
    di = DiffInclusion.from_data(build_side_info(env, cfg, tier), data, refine_options(cfg))
    boxes, controls = probe_set(env, seed)
    return di.eval_batch(boxes, controls).width()


def check_monotone(
    widths: dict[str, FloatArray], tol: float = WIDTH_TOL, slack: float = TIER_SLACK
) -> list[str]:
    """Tier pairs (in the given order) where some probe width grew."""
    names = list(widths)
    return [
        f"{a}->{b}"
        for a, b in itertools.pairwise(names)
        if np.any(widths[b] > widths[a] * (1.0 + slack) + tol)
    ]


def run_ablation(
    env: Environment,
    cfg: RunConfig,
    tiers: Sequence[str] | None = None,
    solver: LpSolver | None = None,
) -> AblationResult:
    """Run every tier and compare probe widths; see `AblationResult.require_monotone`."""
    order = ordered_tiers(tiers or cfg.ablation_tiers)
    if not order:
        raise ConfigError("ablation needs at least one known side-information tier")
    result = AblationResult()
    for tier in order:
        logger.info(f"Ablation: {env.name} with {tier} side information")
        result.episodes[tier] = run_episode(env, cfg, tier=tier, solver=solver)

    common = result.episodes[order[0]].dataset
    for tier in order:
        result.probe_widths[tier] = probe_widths(env, cfg, tier, common, cfg.seed)
        log = result.episodes[tier].log
        result.rows.append(
            {
                "tier": tier,
                "total_cost": log.total_cost,
                "final_quarter_cost": log.final_quarter_cost(),
                "mean_envelope_width": log.mean_envelope_width,
                "probe_width": float(np.mean(result.probe_widths[tier])),
                "violations": log.violations,
                "dropped_samples": sum(1 for s in log.steps if s.dropped),
            }
        )

    result.grew = check_monotone(result.probe_widths)
    if result.grew:
        logger.error(f"Ablation widths not monotone: {result.grew}")
    return result
