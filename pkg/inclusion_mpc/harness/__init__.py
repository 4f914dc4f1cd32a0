"""Ground-truth environments, task costs, Lipschitz estimation and reference oracles."""

from inclusion_mpc.harness.costs import QuadraticCost
from inclusion_mpc.harness.environments import (
    REGISTRY,
    TIERS,
    Environment,
    Tier,
    builtin_environments,
    get_environment,
)
from inclusion_mpc.harness.lipschitz import estimate_lipschitz
from inclusion_mpc.harness.oracles import (
    OracleResult,
    ode_oracle,
    optimal_oracle,
    rk4_rollout,
    rollout_zero_control,
)

__all__ = [
    "REGISTRY",
    "TIERS",
    "Environment",
    "OracleResult",
    "QuadraticCost",
    "Tier",
    "builtin_environments",
    "estimate_lipschitz",
    "get_environment",
    "ode_oracle",
    "optimal_oracle",
    "rk4_rollout",
    "rollout_zero_control",
]
