"""Interval arithmetic battery: fuzzed soundness and inclusion monotonicity."""

from __future__ import annotations

import itertools
import logging
from collections.abc import Callable

import numpy as np

from inclusion_mpc.checks.base import BaseCheck
from inclusion_mpc.errors import DivisionByZeroInterval
from inclusion_mpc.interval import (
    FloatArray,
    Interval,
    IntervalArray,
    arith,
    monomial_ext,
    weighted_norm_ext,
)
from inclusion_mpc.models import CheckResult

logger = logging.getLogger(__name__)

Binary = Callable[[IntervalArray, IntervalArray], IntervalArray]
Unary = Callable[[IntervalArray], IntervalArray]


def _random_intervals(
    rng: np.random.Generator, count: int, low: float = -10.0, high: float = 10.0
) -> IntervalArray:
    ends = np.sort(rng.uniform(low, high, size=(2, count)), axis=0)
    return IntervalArray(ends[0], ends[1])


def _points_in(rng: np.random.Generator, box: IntervalArray, per: int) -> FloatArray:
    t = rng.uniform(0.0, 1.0, size=(per, *box.shape))
    t[0], t[-1] = 0.0, 1.0
    return np.clip(box.lo + t * (box.hi - box.lo), box.lo, box.hi)


def _positive(rng: np.random.Generator, count: int) -> IntervalArray:
    ends = np.sort(rng.uniform(0.1, 10.0, size=(2, count)), axis=0)
    sign = np.where(rng.random(count) < 0.5, -1.0, 1.0)
    lo, hi = ends[0], ends[1]
    return IntervalArray(np.where(sign > 0, lo, -hi), np.where(sign > 0, hi, -lo))


BINARY: dict[str, tuple[Binary, Callable[[FloatArray, FloatArray], FloatArray]]] = {
    "add": (lambda a, b: a + b, np.add),
    "sub": (lambda a, b: a - b, np.subtract),
    "mul": (lambda a, b: a * b, np.multiply),
    "div": (lambda a, b: a / b, np.divide),
}

UNARY: dict[str, tuple[Unary, Callable[[FloatArray], FloatArray], tuple[float, float]]] = {
    "sq": (lambda a: a.sq(), np.square, (-10.0, 10.0)),
    "pow3": (lambda a: a.pow(3), lambda x: x**3, (-10.0, 10.0)),
    "sqrt": (lambda a: a.sqrt(), np.sqrt, (0.0, 100.0)),
    "exp": (lambda a: a.exp(), np.exp, (-20.0, 20.0)),
    "sin": (lambda a: a.sin(), np.sin, (-20.0, 20.0)),
    "cos": (lambda a: a.cos(), np.cos, (-20.0, 20.0)),
    "abs": (lambda a: a.abs(), np.abs, (-10.0, 10.0)),
}


class IntervalCheck(BaseCheck):
    """Soundness of every operation on random intervals and sample points."""

    name = "interval"

    def run(self) -> list[CheckResult]:
        pairs = self.count(100_000, minimum=50)
        per = 4
        results = [self._binary(op, pairs, per) for op in BINARY]
        results += [self._unary(op, pairs, per) for op in UNARY]
        results.append(self._monotonicity(pairs))
        results.append(self._extensions(self.count(20, minimum=2)))
        results.append(self._division_by_zero())
        return results

    def _binary(self, op: str, count: int, per: int) -> CheckResult:
        rng = self.rng(1, op)
        interval_op, point_op = BINARY[op]
        a = _random_intervals(rng, count)
        b = _positive(rng, count) if op == "div" else _random_intervals(rng, count)
        out = interval_op(a, b)
        pa, pb = _points_in(rng, a, per), _points_in(rng, b, per)
        misses = int(np.sum(~out.contains(point_op(pa, pb))))
        return self.result(
            misses == 0,
            f"{op}: {misses} of {count * per} sample results outside the enclosure",
            {"pairs": count, "samples": count * per, "misses": misses},
            prop=f"soundness.{op}",
        )

    def _unary(self, op: str, count: int, per: int) -> CheckResult:
        rng = self.rng(2, op)
        interval_op, point_op, (low, high) = UNARY[op]
        a = _random_intervals(rng, count, low, high)
        out = interval_op(a)
        with np.errstate(all="ignore"):
            values = point_op(_points_in(rng, a, per))
        misses = int(np.sum(~out.contains(values)))
        return self.result(
            misses == 0,
            f"{op}: {misses} of {count * per} sample results outside the enclosure",
            {"intervals": count, "samples": count * per, "misses": misses},
            prop=f"soundness.{op}",
        )

    def _monotonicity(self, count: int) -> CheckResult:
        rng = self.rng(3)
        a = _random_intervals(rng, count)
        b = _positive(rng, count)
        wide_a = a.inflate(0.0, 0.5)
        wide_b = IntervalArray(
            np.where(b.lo > 0, b.lo * 0.5, b.lo - 0.5), np.where(b.hi < 0, b.hi * 0.5, b.hi + 0.5)
        )
        failures: list[str] = []
        for op, (interval_op, _) in BINARY.items():
            if not interval_op(a, b).subset(interval_op(wide_a, wide_b)):
                failures.append(op)
        for op, (unary_op, _, (low, high)) in UNARY.items():
            base = _random_intervals(rng, count, low, high)
            grown = IntervalArray(
                np.maximum(base.lo - 0.5, low), np.minimum(base.hi + 0.5, high)
            )
            if not unary_op(base).subset(unary_op(grown)):
                failures.append(op)
        return self.result(
            not failures,
            "inclusion monotone for every operation"
            if not failures
            else f"monotonicity fails for {', '.join(failures)}",
            {"intervals": count, "failures": failures},
            prop="monotonicity",
        )

    def _extensions(self, instances: int) -> CheckResult:
        """Weighted norm and monomial extensions against dense grids of their ranges."""
        rng = self.rng(4)
        misses = 0
        grid = 100  # 10^4 points for two coordinates
        for _ in range(instances):
            box = _random_intervals(rng, 2, -3.0, 3.0)
            w = rng.uniform(0.5, 2.0, size=2)
            axes = [np.linspace(box.lo[i], box.hi[i], grid) for i in range(2)]
            pts = np.array(list(itertools.product(*axes)))
            norm = weighted_norm_ext(box, w)
            values = np.sqrt(np.sum((w * pts) ** 2, axis=-1))
            misses += int(np.sum((values < norm.lo) | (values > norm.hi)))
            alpha = tuple(int(k) for k in rng.integers(0, 4, size=2))
            mono = monomial_ext(box, alpha)
            values = np.prod(pts ** np.asarray(alpha), axis=-1)
            misses += int(np.sum((values < mono.lo) | (values > mono.hi)))
        return self.result(
            misses == 0,
            f"norm and monomial extensions: {misses} grid points outside",
            {"instances": instances, "misses": misses},
            prop="extensions",
        )

    def _division_by_zero(self) -> CheckResult:
        try:
            arith(Interval(1.0, 2.0), Interval(0.0, 1.0), "div")
        except DivisionByZeroInterval:
            return self.result(True, "division by [0, 1] rejected", prop="division_by_zero")
        return self.result(False, "division by [0, 1] was accepted", prop="division_by_zero")
