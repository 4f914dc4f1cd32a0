"""Verification batteries, one per suite."""

from inclusion_mpc.checks.base import BaseCheck
from inclusion_mpc.checks.contraction import ContractionCheck
from inclusion_mpc.checks.interval import IntervalCheck
from inclusion_mpc.checks.reach import ReachCheck
from inclusion_mpc.checks.scp import ScpCheck
from inclusion_mpc.checks.suboptimality import SuboptimalityCheck

SUITES: dict[str, type[BaseCheck]] = {
    "interval": IntervalCheck,
    "contraction": ContractionCheck,
    "reach": ReachCheck,
    "scp": ScpCheck,
    "suboptimality": SuboptimalityCheck,
}

# alternate suite names accepted by the CLI
SUITE_ALIASES: dict[str, str] = {"theorem3": "suboptimality"}

__all__ = [
    "SUITES",
    "SUITE_ALIASES",
    "BaseCheck",
    "ContractionCheck",
    "IntervalCheck",
    "ReachCheck",
    "ScpCheck",
    "SuboptimalityCheck",
]
