"""Battery runner - executes verification suites and stores their reports."""

from __future__ import annotations

import logging
from collections.abc import Sequence
from datetime import datetime

from inclusion_mpc import __version__
from inclusion_mpc.artifacts import ArtifactStore
from inclusion_mpc.checks import SUITE_ALIASES, SUITES, BaseCheck
from inclusion_mpc.errors import ConfigError
from inclusion_mpc.harness.environments import Environment
from inclusion_mpc.models import BatteryResult, CheckResult, Status

logger = logging.getLogger(__name__)


def make_check(
    suite: str,
    scale: float = 1.0,
    seed: int = 0,
    environments: Sequence[Environment] | None = None,
) -> BaseCheck:
    try:
        cls = SUITES[SUITE_ALIASES.get(suite, suite)]
    except KeyError:
        known = ", ".join([*SUITES, *SUITE_ALIASES])
        raise ConfigError(f"unknown suite '{suite}' (known: {known})") from None
    return cls(scale=scale, seed=seed, environments=environments)


class BatteryRunner:
    """Runs one suite, turns crashes into ERROR rows and saves the report."""

    def __init__(self, check: BaseCheck, store: ArtifactStore | None = None):
        self.check = check
        self.store = store

    @classmethod
    def for_suite(
        cls,
        suite: str,
        scale: float = 1.0,
        seed: int = 0,
        store: ArtifactStore | None = None,
    ) -> BatteryRunner:
        return cls(make_check(suite, scale, seed), store)

    def run(self) -> BatteryResult:
        ts_start = datetime.now()
        results: list[CheckResult] = []
        try:
            results.extend(self.check.run())
        except Exception as e:
            logger.exception(f"Battery {self.check.name} failed: {e}")
            results.append(
                CheckResult(
                    name=self.check.name,
                    status=Status.ERROR,
                    summary=f"Battery failed: {e}",
                    details={"error": str(e), "type": type(e).__name__},
                )
            )
        result = BatteryResult(
            suite=self.check.name,
            ts_start=ts_start,
            ts_end=datetime.now(),
            check_results=results,
            version=__version__,
        )
        failed = [r for r in results if r.status.is_problem()]
        logger.info(
            f"Battery {self.check.name}: {len(results) - len(failed)}/{len(results)} passed"
        )
        self._save(result)
        return result

    def _save(self, result: BatteryResult) -> None:
        if self.store is None:
            return
        try:
            path = self.store.save_battery(result)
            logger.debug(f"Saved battery report to {path}")
        except OSError as e:
            logger.error(f"Failed to save battery report: {e}")
