"""Reference oracles that see the true dynamics.

`ode_oracle` integrates the plant under zero-order-hold controls with an adaptive
Runge-Kutta method at tight tolerance; it is the ground truth for containment checks.
`optimal_oracle` minimizes the N-step cost over the control box by a dense grid followed
by a bounded Nelder-Mead polish; it supplies C*_j for the suboptimality checks.
"""

from __future__ import annotations

import itertools
import logging
import math
from collections.abc import Callable
from dataclasses import dataclass
from typing import Any

import numpy as np
from scipy import integrate, optimize

from inclusion_mpc.errors import DimensionMismatch, OracleError
from inclusion_mpc.harness.environments import Environment
from inclusion_mpc.interval import FloatArray
from inclusion_mpc.scp import CostModel

logger = logging.getLogger(__name__)

ODE_TOL = 1e-10
GRID_POINTS = 41
GRID_CAP = 200_000
MAX_DECISION_DIM = 6
RK4_SUBSTEPS = 20

Rhs = Callable[[FloatArray, FloatArray], FloatArray]


def _controls(controls: Any, steps: int, m: int) -> FloatArray:
    u = np.asarray(controls, dtype=np.float64)
    if u.ndim == 1 and m == 1 and u.shape[0] == steps:
        u = u.reshape(steps, 1)
    if u.shape != (steps, m):
        raise DimensionMismatch(f"control schedule {u.shape} does not match ({steps}, {m})")
    return u


def integrate_flow(rhs: Rhs, x0: FloatArray, u: FloatArray, dt: float) -> FloatArray:
    """State after holding `u` for `dt` (negative dt integrates backwards)."""
    x0 = np.asarray(x0, dtype=np.float64)
    if dt == 0.0:
        return x0.copy()
    sol = integrate.solve_ivp(
        lambda _t, y: rhs(y, u),
        (0.0, dt),
        x0,
        method="RK45",
        rtol=ODE_TOL,
        atol=ODE_TOL,
    )
    if not sol.success:
        raise OracleError(f"ODE integration failed: {sol.message}")
    end = sol.y[:, -1]
    if not np.all(np.isfinite(end)):
        raise OracleError("ODE integration produced a non-finite state")
    return np.asarray(end, dtype=np.float64)


def ode_oracle(
    env: Environment, x0: FloatArray, controls: Any, dt: float, steps: int | None = None
) -> FloatArray:
    """Trajectory of shape (steps + 1, n) under piecewise-constant controls."""
    x = np.asarray(x0, dtype=np.float64)
    if x.shape != (env.n,):
        raise DimensionMismatch(f"initial state {x.shape} does not match n={env.n}")
    raw = np.asarray(controls, dtype=np.float64)
    count = raw.shape[0] if steps is None else steps
    u = _controls(raw, count, env.m)
    states = [x]
    for q in range(count):
        x = integrate_flow(env.xdot, x, u[q], dt)
        states.append(x)
    return np.stack(states)


def rk4_rollout(
    env: Environment,
    x0: FloatArray,
    controls: FloatArray,
    dt: float,
    substeps: int = RK4_SUBSTEPS,
) -> FloatArray:
    """Vectorised fixed-step RK4: x0 (..., n), controls (..., N, m) -> states (..., N+1, n)."""
    x = np.asarray(x0, dtype=np.float64)
    u = np.asarray(controls, dtype=np.float64)
    x = np.broadcast_to(x, (*u.shape[:-2], env.n)).copy()
    h = dt / substeps
    states = [x]
    for q in range(u.shape[-2]):
        uq = u[..., q, :]
        for _ in range(substeps):
            k1 = env.xdot(x, uq)
            k2 = env.xdot(x + 0.5 * h * k1, uq)
            k3 = env.xdot(x + 0.5 * h * k2, uq)
            k4 = env.xdot(x + h * k3, uq)
            x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        states.append(x)
    return np.stack(states, axis=-2)


def rollout_zero_control(env: Environment, x0: FloatArray, steps: int, dt: float) -> FloatArray:
    """Open-loop baseline holding the admissible control closest to zero."""
    u0 = np.clip(np.zeros(env.m), env.control_box.lo, env.control_box.hi)
    return ode_oracle(env, x0, np.tile(u0, (steps, 1)), dt)


def trajectory_cost(cm: CostModel, states: FloatArray, controls: FloatArray) -> float:
    return float(
        sum(cm.c(states[q], controls[q], states[q + 1]) for q in range(controls.shape[0]))
    )


def _batch_cost(cm: CostModel, states: FloatArray, controls: FloatArray) -> FloatArray:
    """Total cost over a batch: states (B, N+1, n), controls (B, N, m) -> (B,)."""
    batch = getattr(cm, "batch", None)
    if batch is not None:
        return np.sum(batch(controls, states[:, 1:, :]), axis=-1)
    return np.array([trajectory_cost(cm, s, u) for s, u in zip(states, controls, strict=True)])


@dataclass(frozen=True)
class OracleResult:
    controls: FloatArray  # (N + 1, m)
    cost: float
    tolerance: float
    grid_points: int
    evaluations: int

    def to_dict(self) -> dict[str, Any]:
        return {
            "controls": self.controls.tolist(),
            "cost": self.cost,
            "tolerance": self.tolerance,
            "grid_points": self.grid_points,
            "evaluations": self.evaluations,
        }


def grid_resolution(dims: int, points: int = GRID_POINTS, cap: int = GRID_CAP) -> int:
    """Points per decision coordinate, reduced so the full grid stays under `cap`."""
    if dims <= 0:
        return 1
    per = points
    while per > 3 and per**dims > cap:
        per -= 2
    return per


def optimal_oracle(
    env: Environment,
    cm: CostModel,
    x_j: FloatArray,
    horizon: int,
    dt: float,
    points: int = GRID_POINTS,
) -> OracleResult:
    """Minimize sum_{q=0..N} c(x^q, u^q, x^{q+1}) over u in U^{N+1} on the true plant."""
    stages = horizon + 1
    dims = env.m * stages
    if horizon < 0:
        raise OracleError("horizon must be nonnegative")
    if dims > MAX_DECISION_DIM:
        raise OracleError(
            f"optimal oracle supports at most {MAX_DECISION_DIM} decision variables, got {dims}"
        )
    x_j = np.asarray(x_j, dtype=np.float64)
    lo = np.tile(env.control_box.lo, stages)
    hi = np.tile(env.control_box.hi, stages)

    per = grid_resolution(dims, points)
    axes = [np.linspace(lo[i], hi[i], per) for i in range(dims)]
    best_cost = math.inf
    best = lo.copy()
    evaluations = 0
    chunk = 4096
    grid = itertools.product(*axes)
    while True:
        block = np.array(list(itertools.islice(grid, chunk)), dtype=np.float64)
        if block.size == 0:
            break
        controls = block.reshape(-1, stages, env.m)
        states = rk4_rollout(env, x_j, controls, dt)
        costs = _batch_cost(cm, states, controls)
        evaluations += block.shape[0]
        i = int(np.argmin(costs))
        if costs[i] < best_cost:
            best_cost, best = float(costs[i]), block[i].copy()

    def objective(z: FloatArray) -> float:
        u = np.clip(z, lo, hi).reshape(1, stages, env.m)
        return float(_batch_cost(cm, rk4_rollout(env, x_j, u, dt), u)[0])

    polish = optimize.minimize(
        objective,
        best,
        method="Nelder-Mead",
        bounds=list(zip(lo, hi, strict=True)),
        options={"xatol": 1e-9, "fatol": 1e-12, "maxiter": 4000 * dims},
    )
    evaluations += int(polish.nfev)
    z = np.clip(polish.x, lo, hi) if polish.fun <= best_cost else best
    controls = z.reshape(stages, env.m)

    exact = trajectory_cost(cm, ode_oracle(env, x_j, controls, dt), controls)
    approx = min(float(polish.fun), best_cost)
    tolerance = abs(exact - approx) + 1e-12 * (1.0 + abs(exact))
    logger.debug(
        f"Optimal oracle on {env.name}: {per}^{dims} grid, cost {exact:.6g}, "
        f"{evaluations} evaluations"
    )
    return OracleResult(
        controls=controls,
        cost=exact,
        tolerance=tolerance,
        grid_points=per,
        evaluations=evaluations,
    )
