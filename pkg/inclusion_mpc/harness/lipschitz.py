"""Lipschitz bounds estimated from sampled truth.

The estimate is the largest pairwise slope |f_k(a) - f_k(b)| / ||a - b||_w over a cloud
of samples drawn before control starts, scaled by a safety factor. It under-estimates
the true constant when the cloud misses the steepest region, which is why the declared
analytic bounds stay the default.
"""

from __future__ import annotations

import logging
from dataclasses import replace

import numpy as np

from inclusion_mpc.harness.environments import Environment, Tier
from inclusion_mpc.inclusion.side import SideInfo
from inclusion_mpc.interval import FloatArray

logger = logging.getLogger(__name__)

FLOOR = 1e-12
CHUNK = 256


def pairwise_slopes(
    points: FloatArray, values: FloatArray, weights: FloatArray
) -> FloatArray:
    """Largest slope of every value component over all sample pairs.

    `points` is (S, n), `values` is (S, ...); returns the trailing shape of `values`.
    """
    count = points.shape[0]
    flat = values.reshape(count, -1)
    best = np.zeros(flat.shape[1])
    for start in range(0, count, CHUNK):
        a = points[start : start + CHUNK]
        fa = flat[start : start + CHUNK]
        dist = np.sqrt(np.sum((weights * (a[:, None, :] - points[None, :, :])) ** 2, axis=-1))
        diff = np.abs(fa[:, None, :] - flat[None, :, :])
        with np.errstate(divide="ignore", invalid="ignore"):
            slope = np.where(dist[..., None] > 0, diff / dist[..., None], 0.0)
        best = np.maximum(best, slope.max(axis=(0, 1)))
    return best.reshape(values.shape[1:])


def estimate_lipschitz(
    env: Environment,
    n_samples: int = 1000,
    safety: float = 1.0,
    seed: int = 0,
    tier: Tier = "lipschitz",
) -> SideInfo:
    """Side information of `tier` with f and g_p bounds replaced by sampled estimates."""
    if n_samples < 2:
        raise ValueError("Lipschitz estimation needs at least two samples")
    if safety < 1.0:
        raise ValueError("safety factor must be at least 1")
    rng = np.random.default_rng(seed)
    points = env.sample_states(n_samples, rng)
    weights = env.norm_weights
    lip_f = np.maximum(pairwise_slopes(points, env.f(points), weights) * safety, FLOOR)
    if env.d:
        lip_g = np.maximum(pairwise_slopes(points, env.g(points), weights) * safety, FLOOR)
    else:
        lip_g = np.zeros((0, env.n))
    logger.info(
        f"Estimated Lipschitz bounds for {env.name} from {n_samples} samples: "
        f"f={np.round(lip_f, 4).tolist()}, g={np.round(lip_g, 4).tolist()}"
    )
    return replace(env.side_info(tier), lipschitz_f=lip_f, lipschitz_g=lip_g)
