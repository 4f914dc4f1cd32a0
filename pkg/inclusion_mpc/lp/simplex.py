"""LP solvers: a dense two-phase tableau simplex and a HiGHS wrapper.

The simplex works on the standard form min c'y, Ay = b, y >= 0. Variable bounds are
removed by shifting (finite lower bound), reflecting (upper bound only) or splitting
(free variable); finite ranges add an upper-bound row. Pricing is Dantzig's rule and
switches to Bland's rule once degenerate pivots exceed 10 * (rows + cols).
"""

from __future__ import annotations

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from inclusion_mpc.errors import NumericalBreakdown
from inclusion_mpc.interval import FloatArray
from inclusion_mpc.lp.program import LinearProgram, LpSolution, LpStatus

logger = logging.getLogger(__name__)

PIVOT_TOL = 1e-12
FEAS_TOL = 1e-8
COST_TOL = 1e-10
ZERO_TOL = 1e-14


class LpSolver(ABC):
    """Narrow solver interface."""

    name: str = "base"

    @abstractmethod
    def solve(self, lp: LinearProgram) -> LpSolution:
        """Solve to optimality or certify infeasibility or unboundedness."""


@dataclass
class _StandardForm:
    a: FloatArray
    b: FloatArray
    c: FloatArray
    shift: FloatArray  # x = shift + transform @ y
    transform: FloatArray
    n_structural: int


def _standard_form(lp: LinearProgram) -> _StandardForm:
    assert lp.lower is not None and lp.upper is not None
    n = lp.n_vars
    columns: list[FloatArray] = []
    shift = np.zeros(n)
    ranges: list[tuple[int, float]] = []
    for j in range(n):
        lo, hi = lp.lower[j], lp.upper[j]
        unit = np.zeros(n)
        unit[j] = 1.0
        if np.isfinite(lo):
            shift[j] = lo
            columns.append(unit)
            if np.isfinite(hi):
                ranges.append((len(columns) - 1, hi - lo))
        elif np.isfinite(hi):
            shift[j] = hi
            columns.append(-unit)
        else:
            columns.append(unit)
            columns.append(-unit)
    transform = np.column_stack(columns) if columns else np.zeros((n, 0))
    n_y = transform.shape[1]

    rows: list[FloatArray] = []
    rhs: list[float] = []
    slack_rows: list[int] = []
    for con in lp.constraints:
        rows.append(con.row @ transform)
        rhs.append(con.rhs - float(con.row @ shift))
        if con.relation == "<=":
            slack_rows.append(len(rows) - 1)
    for col, width in ranges:
        row = np.zeros(n_y)
        row[col] = 1.0
        rows.append(row)
        rhs.append(width)
        slack_rows.append(len(rows) - 1)

    m = len(rows)
    a = np.zeros((m, n_y + len(slack_rows)))
    if m:
        a[:, :n_y] = np.vstack(rows)
    for k, i in enumerate(slack_rows):
        a[i, n_y + k] = 1.0
    b = np.array(rhs, dtype=np.float64)
    c = np.concatenate([lp.objective @ transform, np.zeros(len(slack_rows))])
    return _StandardForm(a=a, b=b, c=c, shift=shift, transform=transform, n_structural=n_y)


class SimplexSolver(LpSolver):
    """Dense two-phase tableau simplex."""

    name = "simplex"

    def __init__(
        self, pivot_tol: float = PIVOT_TOL, feas_tol: float = FEAS_TOL, max_iters: int = 100_000
    ):
        self.pivot_tol = pivot_tol
        self.feas_tol = feas_tol
        self.max_iters = max_iters

    def solve(self, lp: LinearProgram) -> LpSolution:
        assert lp.lower is not None and lp.upper is not None
        n = lp.n_vars
        if np.any(lp.lower > lp.upper):
            return LpSolution(LpStatus.INFEASIBLE, np.full(n, np.nan), float("nan"))

        std = _standard_form(lp)
        a, b = std.a.copy(), std.b.copy()
        negative = b < 0
        a[negative] *= -1.0
        b[negative] *= -1.0
        m, n_cols = a.shape

        # tableau rows: [A | I_art | b]; last row holds reduced costs and -objective
        tableau = np.zeros((m + 1, n_cols + m + 1))
        tableau[:m, :n_cols] = a
        tableau[:m, n_cols : n_cols + m] = np.eye(m)
        tableau[:m, -1] = b
        basis = list(range(n_cols, n_cols + m))
        self._degenerate = 0
        self._bland = False
        self._budget = 10 * (m + n_cols + m)
        self._iterations = 0

        # phase 1: minimize the sum of artificials
        phase1_cost = np.concatenate([np.zeros(n_cols), np.ones(m)])
        self._price(tableau, basis, phase1_cost)
        status = self._iterate(tableau, basis, allowed=n_cols + m)
        if status is LpStatus.UNBOUNDED:
            raise NumericalBreakdown("phase 1 reported an unbounded ray")
        scale = 1.0 + float(np.max(np.abs(b), initial=0.0))
        if -tableau[-1, -1] > self.feas_tol * scale:
            logger.debug(f"Simplex phase 1 ends with infeasibility {-tableau[-1, -1]:.3g}")
            nan = np.full(n, np.nan)
            return LpSolution(LpStatus.INFEASIBLE, nan, float("nan"), self._iterations)

        tableau, basis = self._drive_out_artificials(tableau, basis, n_cols)

        # phase 2: artificial columns stay nonbasic and are never priced in
        phase2_cost = np.concatenate([std.c, np.full(m, 0.0)])
        self._price(tableau, basis, phase2_cost)
        status = self._iterate(tableau, basis, allowed=n_cols)
        if status is LpStatus.UNBOUNDED:
            nan = np.full(n, np.nan)
            return LpSolution(LpStatus.UNBOUNDED, nan, float("-inf"), self._iterations)

        y = np.zeros(n_cols + m)
        for i, var in enumerate(basis):
            y[var] = tableau[i, -1]
        x = std.shift + std.transform @ y[: std.n_structural]
        violation = lp.max_violation(x)
        if violation > self.feas_tol * lp.scale():
            raise NumericalBreakdown(f"optimal point violates constraints by {violation:.3g}")
        cost_scale = 1.0 + float(np.max(np.abs(std.c), initial=0.0))
        if np.any(tableau[-1, :n_cols] < -1e-7 * cost_scale):
            raise NumericalBreakdown("optimality re-check failed: negative reduced cost remains")
        logger.debug(f"Simplex finished after {self._iterations} pivots")
        return LpSolution(LpStatus.OPTIMAL, x, lp.value(x), self._iterations)

    # -- tableau mechanics --------------------------------------------------------

    @staticmethod
    def _price(tableau: FloatArray, basis: list[int], cost: FloatArray) -> None:
        """Reduced costs r = c - c_B' T and objective entry -c_B' b."""
        m = len(basis)
        c_b = cost[basis]
        width = tableau.shape[1] - 1
        tableau[-1, :width] = cost[:width] - c_b @ tableau[:m, :width]
        tableau[-1, -1] = -float(c_b @ tableau[:m, -1])

    def _pivot(self, tableau: FloatArray, basis: list[int], row: int, col: int) -> None:
        value = tableau[row, col]
        if abs(value) < self.pivot_tol:
            raise NumericalBreakdown(f"pivot {value:.3g} below tolerance {self.pivot_tol:g}")
        tableau[row] /= value
        column = tableau[:, col].copy()
        column[row] = 0.0
        tableau -= np.outer(column, tableau[row])
        tableau[np.abs(tableau) < ZERO_TOL] = 0.0
        basis[row] = col
        self._iterations += 1

    def _entering(self, reduced: FloatArray) -> int | None:
        candidates = np.flatnonzero(reduced < -COST_TOL)
        if candidates.size == 0:
            return None
        if self._bland:
            return int(candidates[0])
        return int(candidates[np.argmin(reduced[candidates])])

    def _leaving(self, tableau: FloatArray, basis: list[int], col: int) -> int | None:
        m = len(basis)
        column = tableau[:m, col]
        positive = np.flatnonzero(column > 0.0)
        if positive.size == 0:
            return None
        ratios = tableau[positive, -1] / column[positive]
        best = float(np.min(ratios))
        ties = positive[ratios <= best + 1e-12 * (1.0 + abs(best))]
        if self._bland:
            return int(min(ties, key=lambda i: basis[i]))
        return int(ties[np.argmax(column[ties])])

    def _iterate(self, tableau: FloatArray, basis: list[int], allowed: int) -> LpStatus:
        while True:
            if self._iterations >= self.max_iters:
                raise NumericalBreakdown(f"no convergence within {self.max_iters} pivots")
            col = self._entering(tableau[-1, :allowed])
            if col is None:
                return LpStatus.OPTIMAL
            row = self._leaving(tableau, basis, col)
            if row is None:
                return LpStatus.UNBOUNDED
            if tableau[row, -1] <= ZERO_TOL:
                self._degenerate += 1
                if not self._bland and self._degenerate > self._budget:
                    logger.debug("Switching to Bland's rule after repeated degenerate pivots")
                    self._bland = True
            self._pivot(tableau, basis, row, col)

    def _drive_out_artificials(
        self, tableau: FloatArray, basis: list[int], n_cols: int
    ) -> tuple[FloatArray, list[int]]:
        """Pivot zero-level artificials out of the basis; drop redundant rows."""
        i = 0
        while i < len(basis):
            if basis[i] < n_cols:
                i += 1
                continue
            row = tableau[i, :n_cols]
            candidates = np.flatnonzero(np.abs(row) > 1e-9)
            if candidates.size:
                col = int(candidates[np.argmax(np.abs(row[candidates]))])
                self._pivot(tableau, basis, i, col)
                i += 1
            else:
                tableau = np.delete(tableau, i, axis=0)
                del basis[i]
        return tableau, basis


class HighsSolver(LpSolver):
    """scipy's HiGHS backend behind the same interface."""

    name = "highs"

    def solve(self, lp: LinearProgram) -> LpSolution:
        assert lp.lower is not None and lp.upper is not None
        a_ub, b_ub, a_eq, b_eq = lp.matrices()
        bounds = [
            (None if np.isneginf(lo) else lo, None if np.isposinf(hi) else hi)
            for lo, hi in zip(lp.lower, lp.upper, strict=True)
        ]
        result = linprog(
            lp.objective,
            A_ub=a_ub if a_ub.size else None,
            b_ub=b_ub if b_ub.size else None,
            A_eq=a_eq if a_eq.size else None,
            b_eq=b_eq if b_eq.size else None,
            bounds=bounds,
            method="highs",
        )
        nan = np.full(lp.n_vars, np.nan)
        if result.status == 0:
            x = np.asarray(result.x, dtype=np.float64)
            return LpSolution(LpStatus.OPTIMAL, x, lp.value(x), int(result.nit))
        if result.status == 2:
            return LpSolution(LpStatus.INFEASIBLE, nan, float("nan"))
        if result.status == 3:
            return LpSolution(LpStatus.UNBOUNDED, nan, float("-inf"))
        raise NumericalBreakdown(f"HiGHS failed: {result.message}")


SOLVERS: dict[str, type[LpSolver]] = {
    SimplexSolver.name: SimplexSolver,
    HighsSolver.name: HighsSolver,
}


def get_solver(name: str = "simplex") -> LpSolver:
    try:
        return SOLVERS[name]()
    except KeyError:
        raise ValueError(f"unknown LP solver: {name}") from None


def solve(lp: LinearProgram, solver: LpSolver | None = None) -> LpSolution:
    """Solve with the dense simplex unless another solver is given."""
    return (solver or SimplexSolver()).solve(lp)
