"""Linear programs and their solutions."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field
from enum import Enum
from typing import Literal

import numpy as np

from inclusion_mpc.errors import DimensionMismatch
from inclusion_mpc.interval import FloatArray

Relation = Literal["<=", "="]


class LpStatus(str, Enum):
    """Solver outcome."""

    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True, eq=False)
class LinearConstraint:
    row: FloatArray
    relation: Relation
    rhs: float


@dataclass
class LinearProgram:
    """minimize c'x + offset subject to rows and per-variable bounds."""

    objective: FloatArray
    constraints: list[LinearConstraint] = field(default_factory=list)
    lower: FloatArray | None = None
    upper: FloatArray | None = None
    offset: float = 0.0
    names: list[str] | None = None

    def __post_init__(self) -> None:
        self.objective = np.array(self.objective, dtype=np.float64)
        n = self.n_vars
        lower = np.zeros(n) if self.lower is None else self.lower
        upper = np.full(n, np.inf) if self.upper is None else self.upper
        self.lower = np.array(lower, dtype=np.float64)
        self.upper = np.array(upper, dtype=np.float64)
        if self.lower.shape != (n,) or self.upper.shape != (n,):
            raise DimensionMismatch("bounds must have one entry per variable")
        if not np.all(np.isfinite(self.objective)):
            raise ValueError("objective coefficients must be finite")
        if np.any(np.isnan(self.lower)) or np.any(np.isnan(self.upper)):
            raise ValueError("bounds must not be NaN")
        for constraint in self.constraints:
            self._check_row(constraint.row)

    @property
    def n_vars(self) -> int:
        return int(self.objective.shape[0])

    @property
    def n_rows(self) -> int:
        return len(self.constraints)

    def _check_row(self, row: FloatArray) -> None:
        if row.shape != (self.n_vars,):
            raise DimensionMismatch(
                f"constraint row has shape {row.shape}, expected ({self.n_vars},)"
            )
        if not np.all(np.isfinite(row)):
            raise ValueError("constraint coefficients must be finite")

    def add(self, row: Sequence[float] | FloatArray, relation: Relation, rhs: float) -> None:
        if relation not in ("<=", "="):
            raise ValueError(f"unsupported relation: {relation}")
        arr = np.array(row, dtype=np.float64)
        self._check_row(arr)
        if not np.isfinite(rhs):
            raise ValueError("right-hand sides must be finite")
        self.constraints.append(LinearConstraint(arr, relation, float(rhs)))

    def add_le(self, row: Sequence[float] | FloatArray, rhs: float) -> None:
        self.add(row, "<=", rhs)

    def add_ge(self, row: Sequence[float] | FloatArray, rhs: float) -> None:
        self.add(-np.asarray(row, dtype=np.float64), "<=", -rhs)

    def add_eq(self, row: Sequence[float] | FloatArray, rhs: float) -> None:
        self.add(row, "=", rhs)

    def matrices(self) -> tuple[FloatArray, FloatArray, FloatArray, FloatArray]:
        """(A_ub, b_ub, A_eq, b_eq)."""
        n = self.n_vars
        ub = [c for c in self.constraints if c.relation == "<="]
        eq = [c for c in self.constraints if c.relation == "="]

        def stack(rows: list[LinearConstraint]) -> tuple[FloatArray, FloatArray]:
            if not rows:
                return np.zeros((0, n)), np.zeros(0)
            return np.vstack([c.row for c in rows]), np.array([c.rhs for c in rows])

        a_ub, b_ub = stack(ub)
        a_eq, b_eq = stack(eq)
        return a_ub, b_ub, a_eq, b_eq

    def value(self, x: FloatArray) -> float:
        return float(self.objective @ x + self.offset)

    def max_violation(self, x: FloatArray) -> float:
        """Largest constraint or bound violation at x (0 when feasible)."""
        assert self.lower is not None and self.upper is not None
        worst = float(np.max(np.maximum(self.lower - x, 0.0), initial=0.0))
        worst = max(worst, float(np.max(np.maximum(x - self.upper, 0.0), initial=0.0)))
        for c in self.constraints:
            lhs = float(c.row @ x)
            gap = lhs - c.rhs if c.relation == "<=" else abs(lhs - c.rhs)
            worst = max(worst, gap)
        return worst

    def scale(self) -> float:
        rhs = [abs(c.rhs) for c in self.constraints]
        return 1.0 + (max(rhs) if rhs else 0.0)

    def dump(self) -> str:
        """Plain-text tableau listing."""
        names = self.names or [f"x{i}" for i in range(self.n_vars)]
        width = max([len(n) for n in names] + [10])
        objective = "  ".join(
            f"{c:+.6g}*{n}" for c, n in zip(self.objective, names, strict=True)
        )
        lines = [f"min {objective}"]
        if self.offset:
            lines[0] += f"  {self.offset:+.6g}"
        lines.append("s.t.")
        for i, c in enumerate(self.constraints):
            terms = "  ".join(
                f"{a:+.6g}*{n}" for a, n in zip(c.row, names, strict=True) if a != 0.0
            )
            lines.append(f"  r{i}: {terms or '0'} {c.relation} {c.rhs:.6g}")
        lines.append("bounds")
        assert self.lower is not None and self.upper is not None
        for n, lo, hi in zip(names, self.lower, self.upper, strict=True):
            lines.append(f"  {lo:>12.6g} <= {n:<{width}} <= {hi:.6g}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True, eq=False)
class LpSolution:
    status: LpStatus
    x: FloatArray
    objective_value: float
    iterations: int = 0

    @property
    def optimal(self) -> bool:
        return self.status is LpStatus.OPTIMAL
