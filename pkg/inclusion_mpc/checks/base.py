"""Base class for verification batteries."""

from __future__ import annotations

import zlib
from abc import ABC, abstractmethod
from collections.abc import Sequence
from typing import Any

import numpy as np

from inclusion_mpc.harness.environments import Environment, builtin_environments
from inclusion_mpc.models import CheckResult, Status


class BaseCheck(ABC):
    """Abstract base class for all verification batteries.

    `scale` multiplies every trial count; 1.0 gives the acceptance sizes, unit tests use a
    small fraction of that.
    """

    name: str = "base"

    def __init__(
        self,
        scale: float = 1.0,
        seed: int = 0,
        environments: Sequence[Environment] | None = None,
    ):
        if scale <= 0:
            raise ValueError("scale must be positive")
        self.scale = scale
        self.seed = seed
        self.environments = (
            list(environments) if environments is not None else builtin_environments()
        )

    @abstractmethod
    def run(self) -> list[CheckResult]:
        """
        Execute the battery and return results.

        Returns a list because most batteries produce one result per property and
        environment.
        """
        ...

    def count(self, full: int, minimum: int = 1) -> int:
        """Trial count for this scale."""
        return max(minimum, int(round(full * self.scale)))

    def rng(self, *salt: int | str) -> np.random.Generator:
        """Independent stream per (seed, salt); strings hash with crc32."""
        keys = [zlib.crc32(s.encode()) if isinstance(s, str) else s for s in salt]
        return np.random.default_rng([self.seed, *keys])

    def result(
        self,
        ok: bool,
        summary: str,
        details: dict[str, Any] | None = None,
        identifier: str = "",
        prop: str = "",
    ) -> CheckResult:
        name = f"{self.name}.{prop}" if prop else self.name
        return CheckResult(
            name=name,
            status=Status.PASS if ok else Status.FAIL,
            summary=summary,
            details=details or {},
            identifier=identifier,
        )
