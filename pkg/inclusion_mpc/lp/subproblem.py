"""The linear subproblem solved at every trust-region iteration.

Around the current iterate (xs, us) with stage models x^{q+1} ≈ h0^q + A^q dx^q + B^q du^q,
the subproblem is

    minimize    sum_q [c_q + gx_q.dx^{q} + gu_q.du^q + gn_q.dx^{q+1}] + penalty * sum_q |v^q|
    subject to  dx^{q+1} - A^q dx^q - B^q du^q - v^q = h0^q - xs^{q+1}
                |du| <= radius,  us + du in U,  xs + dx in X

with dx^0 = 0 (the current state is fixed). Norms are handled with epigraph variables so
the whole problem is one LP. The slacks v make it feasible for any iterate inside the
boxes.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass
from typing import Literal

import numpy as np

from inclusion_mpc.errors import DimensionMismatch
from inclusion_mpc.interval import FloatArray, IntervalVector
from inclusion_mpc.lp.program import LinearProgram

Norm = Literal["inf", "one"]


@dataclass(frozen=True, eq=False)
class StageModel:
    """Linearized dynamics and cost of one horizon stage.

    `grad_x` is the cost gradient with respect to the stage's starting state, `grad_next`
    with respect to the state it leads to. The first stage starts at the measured state,
    so its `grad_x` is ignored.
    """

    a: FloatArray
    b: FloatArray
    h0: FloatArray
    cost: float
    grad_x: FloatArray
    grad_u: FloatArray
    grad_next: FloatArray


@dataclass(frozen=True)
class Layout:
    """Column offsets of the variable blocks."""

    n: int
    m: int
    stages: int
    trust_norm: Norm
    penalty_norm: Norm

    @property
    def dx(self) -> int:
        return 0

    @property
    def du(self) -> int:
        return self.n * self.stages

    @property
    def v(self) -> int:
        return self.du + self.m * self.stages

    @property
    def penalty_epigraph(self) -> int:
        return self.v + self.n * self.stages

    @property
    def penalty_width(self) -> int:
        return self.n * self.stages if self.penalty_norm == "one" else self.stages

    @property
    def trust_epigraph(self) -> int:
        return self.penalty_epigraph + self.penalty_width

    @property
    def trust_width(self) -> int:
        return self.m * self.stages if self.trust_norm == "one" else 0

    @property
    def size(self) -> int:
        return self.trust_epigraph + self.trust_width

    def names(self) -> list[str]:
        out = [f"dx{q}_{k}" for q in range(self.stages) for k in range(self.n)]
        out += [f"du{q}_{i}" for q in range(self.stages) for i in range(self.m)]
        out += [f"v{q}_{k}" for q in range(self.stages) for k in range(self.n)]
        if self.penalty_norm == "one":
            out += [f"t{q}_{k}" for q in range(self.stages) for k in range(self.n)]
        else:
            out += [f"s{q}" for q in range(self.stages)]
        if self.trust_norm == "one":
            out += [f"w{q}_{i}" for q in range(self.stages) for i in range(self.m)]
        return out


@dataclass(frozen=True, eq=False)
class Subproblem:
    lp: LinearProgram
    layout: Layout

    def split(self, solution: FloatArray) -> tuple[FloatArray, FloatArray, FloatArray]:
        """(dx, du, v) blocks of an LP solution, each shaped (stages, dim)."""
        lay = self.layout
        dx = solution[lay.dx : lay.du].reshape(lay.stages, lay.n)
        du = solution[lay.du : lay.v].reshape(lay.stages, lay.m)
        v = solution[lay.v : lay.penalty_epigraph].reshape(lay.stages, lay.n)
        return dx, du, v


def build_subproblem(
    xs: FloatArray,
    us: FloatArray,
    stages: Sequence[StageModel],
    radius: float,
    state_box: IntervalVector,
    control_box: IntervalVector,
    penalty: float,
    trust_norm: Norm = "inf",
    penalty_norm: Norm = "one",
) -> Subproblem:
    """Assemble the LP for one trust-region iteration.

    `xs` holds the predicted states x^{j+1..j+N+1} as rows and `us` the controls
    u^{j..j+N}; `stages` has one model per row.
    """
    xs = np.asarray(xs, dtype=np.float64)
    us = np.asarray(us, dtype=np.float64)
    if xs.ndim != 2 or us.ndim != 2 or xs.shape[0] != us.shape[0]:
        raise DimensionMismatch(f"states {xs.shape} and controls {us.shape} disagree")
    count, n = xs.shape
    m = us.shape[1]
    if len(stages) != count:
        raise DimensionMismatch(f"{len(stages)} stage models for {count} stages")
    if state_box.shape != (n,) or control_box.shape != (m,):
        raise DimensionMismatch("domain boxes do not match the state and control dimensions")
    for stage in stages:
        if np.shape(stage.a) != (n, n) or np.shape(stage.b) != (n, m):
            raise DimensionMismatch("stage matrices have the wrong shape")
    if radius < 0 or penalty < 0:
        raise ValueError("trust radius and penalty must be nonnegative")
    if trust_norm not in ("inf", "one") or penalty_norm not in ("inf", "one"):
        raise ValueError("norms must be 'inf' or 'one'")

    lay = Layout(n=n, m=m, stages=count, trust_norm=trust_norm, penalty_norm=penalty_norm)
    size = lay.size
    c = np.zeros(size)
    lower = np.full(size, -np.inf)
    upper = np.full(size, np.inf)

    def dx_col(q: int, k: int) -> int:
        return lay.dx + q * n + k

    def du_col(q: int, i: int) -> int:
        return lay.du + q * m + i

    def v_col(q: int, k: int) -> int:
        return lay.v + q * n + k

    offset = 0.0
    for q, stage in enumerate(stages):
        offset += float(stage.cost)
        if q > 0:
            for k in range(n):
                c[dx_col(q - 1, k)] += stage.grad_x[k]
        for i in range(m):
            c[du_col(q, i)] += stage.grad_u[i]
        for k in range(n):
            c[dx_col(q, k)] += stage.grad_next[k]

    lower[lay.dx : lay.du] = (state_box.lo - xs).ravel()
    upper[lay.dx : lay.du] = (state_box.hi - xs).ravel()
    du_lo = (control_box.lo - us).ravel()
    du_hi = (control_box.hi - us).ravel()
    if trust_norm == "inf":
        du_lo = np.maximum(du_lo, -radius)
        du_hi = np.minimum(du_hi, radius)
    # numerically the iterate may sit a hair outside its box
    lower[lay.du : lay.v] = np.minimum(du_lo, 0.0)
    upper[lay.du : lay.v] = np.maximum(du_hi, 0.0)
    lower[lay.dx : lay.du] = np.minimum(lower[lay.dx : lay.du], 0.0)
    upper[lay.dx : lay.du] = np.maximum(upper[lay.dx : lay.du], 0.0)
    c[lay.penalty_epigraph : lay.trust_epigraph] = penalty
    lower[lay.penalty_epigraph :] = 0.0

    lp = LinearProgram(objective=c, lower=lower, upper=upper, offset=offset, names=lay.names())

    # linearized dynamics with slack
    for q, stage in enumerate(stages):
        rhs = np.asarray(stage.h0, dtype=np.float64) - xs[q]
        for k in range(n):
            row = np.zeros(size)
            row[dx_col(q, k)] = 1.0
            if q > 0:
                for col in range(n):
                    row[dx_col(q - 1, col)] -= stage.a[k, col]
            for i in range(m):
                row[du_col(q, i)] -= stage.b[k, i]
            row[v_col(q, k)] = -1.0
            lp.add_eq(row, float(rhs[k]))

    # penalty epigraph
    base = lay.penalty_epigraph
    for q in range(count):
        for k in range(n):
            epi = base + (q * n + k if penalty_norm == "one" else q)
            for sign in (1.0, -1.0):
                row = np.zeros(size)
                row[v_col(q, k)] = sign
                row[epi] = -1.0
                lp.add_le(row, 0.0)

    if trust_norm == "one":
        base = lay.trust_epigraph
        total = np.zeros(size)
        for q in range(count):
            for i in range(m):
                for sign in (1.0, -1.0):
                    row = np.zeros(size)
                    row[du_col(q, i)] = sign
                    row[base + q * m + i] = -1.0
                    lp.add_le(row, 0.0)
                total[base + q * m + i] = 1.0
        lp.add_le(total, radius)
    return Subproblem(lp=lp, layout=lay)
