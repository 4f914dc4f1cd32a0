"""Receding-horizon control by trust-region sequential linear programming.

Each stage's successor state is a point picked inside the validated reachable box,
h^theta(x, u) = theta * hi + (1 - theta) * lo. The controller linearizes these selections
and the stage cost around the current iterate, solves the LP subproblem, and keeps the
step only when the realized cost J drops by enough of the predicted decrease.
"""

from __future__ import annotations

import logging
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field, replace
from typing import Any, Literal, Protocol

import numpy as np

from inclusion_mpc.errors import DimensionMismatch, EnclosureFailure
from inclusion_mpc.inclusion.differential import DiffInclusion
from inclusion_mpc.interval import (
    FloatArray,
    IntervalArray,
    IntervalVector,
    monomial_grad,
    monomial_value,
)
from inclusion_mpc.lp.simplex import LpSolver, SimplexSolver
from inclusion_mpc.lp.subproblem import Norm, StageModel, build_subproblem
from inclusion_mpc.reach import ReachStep, reach_step

logger = logging.getLogger(__name__)

CONVERGENCE_TOL = 1e-6
FD_STEP = 1e-6

Gradient = tuple[FloatArray, FloatArray, FloatArray]
StageFn = Callable[[FloatArray, FloatArray, FloatArray], float]


class CostModel(Protocol):
    """Stage cost c(x, u, x+) with its gradient and 2-norm Lipschitz constant."""

    @property
    def lc(self) -> float: ...

    def c(self, x: FloatArray, u: FloatArray, x_next: FloatArray) -> float: ...

    def grad(self, x: FloatArray, u: FloatArray, x_next: FloatArray) -> Gradient: ...


def central_difference_gradient(
    fn: StageFn, x: FloatArray, u: FloatArray, x_next: FloatArray
) -> Gradient:
    """Central differences with step 1e-6 * (1 + |z_i|) per coordinate."""
    parts = [np.asarray(a, dtype=np.float64) for a in (x, u, x_next)]
    z = np.concatenate(parts)
    sizes = np.cumsum([p.shape[0] for p in parts])[:-1]
    grad = np.zeros_like(z)
    for i in range(z.shape[0]):
        h = FD_STEP * (1.0 + abs(z[i]))
        up, down = z.copy(), z.copy()
        up[i] += h
        down[i] -= h
        grad[i] = (fn(*np.split(up, sizes)) - fn(*np.split(down, sizes))) / (2.0 * h)
    gx, gu, gn = np.split(grad, sizes)
    return gx, gu, gn


@dataclass(frozen=True, eq=False)
class FunctionCost:
    """A cost given as a plain function, differentiated numerically unless told otherwise."""

    fn: StageFn
    lipschitz: float
    gradient_fn: Callable[[FloatArray, FloatArray, FloatArray], Gradient] | None = None

    @property
    def lc(self) -> float:
        return self.lipschitz

    def c(self, x: FloatArray, u: FloatArray, x_next: FloatArray) -> float:
        return float(self.fn(x, u, x_next))

    def grad(self, x: FloatArray, u: FloatArray, x_next: FloatArray) -> Gradient:
        if self.gradient_fn is not None:
            return self.gradient_fn(x, u, x_next)
        return central_difference_gradient(self.fn, x, u, x_next)


@dataclass(frozen=True, eq=False)
class Selector:
    """Affine selection weights theta in [0, 1]^n."""

    theta: FloatArray

    def __post_init__(self) -> None:
        theta = np.array(self.theta, dtype=np.float64)
        if theta.ndim != 1:
            raise DimensionMismatch("theta must be a vector")
        if np.any(theta < 0) or np.any(theta > 1) or np.any(np.isnan(theta)):
            raise ValueError("theta must lie in [0, 1]")
        object.__setattr__(self, "theta", theta)

    @classmethod
    def uniform(cls, n: int, value: float = 0.5) -> Selector:
        return cls(np.full(n, float(value)))


def select_next_state(sel: Selector, r_next: IntervalArray) -> FloatArray:
    """theta * hi + (1 - theta) * lo, inside r_next."""
    if sel.theta.shape != r_next.shape:
        raise DimensionMismatch(f"theta {sel.theta.shape} does not match box {r_next.shape}")
    return r_next.select(sel.theta)


@dataclass(frozen=True)
class TrustRegionState:
    radius: float
    min_radius: float
    max_radius: float
    rho_accept: float = 0.1
    rho_good: float = 0.7
    shrink: float = 0.5
    grow: float = 2.0
    penalty: float = 1e3
    max_iters: int = 30
    trust_norm: Norm = "inf"
    penalty_norm: Norm = "one"

    def __post_init__(self) -> None:
        if not 0 < self.shrink < 1 < self.grow:
            raise ValueError("trust region factors need 0 < shrink < 1 < grow")
        if not 0 < self.rho_accept < self.rho_good < 1:
            raise ValueError("ratio thresholds need 0 < rho_accept < rho_good < 1")
        if not 0 < self.min_radius <= self.max_radius:
            raise ValueError("radius clamps need 0 < min_radius <= max_radius")
        if not 0 < self.radius <= self.max_radius:
            raise ValueError("radius must be positive and at most max_radius")
        if self.penalty < 0 or self.max_iters < 1:
            raise ValueError("penalty must be nonnegative and max_iters positive")

    @classmethod
    def for_controls(cls, control_box: IntervalVector, **overrides: Any) -> TrustRegionState:
        """Defaults scaled to the control box: r0 = wd(U)/4, r_min = 1e-4 r0, r_max = wd(U)."""
        span = float(np.max(control_box.width(), initial=0.0)) or 1.0
        r0 = 0.5 * span / 2.0
        params: dict[str, Any] = {
            "radius": r0,
            "min_radius": 1e-4 * r0,
            "max_radius": span,
        }
        params.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**params)

    @property
    def exhausted(self) -> bool:
        return self.radius < self.min_radius

    def expanded(self) -> TrustRegionState:
        return replace(self, radius=min(self.radius * self.grow, self.max_radius))

    def contracted(self) -> TrustRegionState:
        # may drop below min_radius; that ends the solve
        return replace(self, radius=self.radius * self.shrink)


@dataclass(frozen=True, eq=False)
class Linearization:
    """Stage dynamics x+ ≈ h0 + a dx + b du around one (x, u)."""

    a: FloatArray
    b: FloatArray
    h0: FloatArray
    reach: ReachStep


def _point_box(x: FloatArray) -> IntervalVector:
    box = IntervalArray.point(x)
    assert isinstance(box, IntervalVector)
    return box


def linearize(
    di: DiffInclusion,
    sel: Selector,
    x_s: FloatArray,
    u_s: FloatArray,
    dt: float,
    order: Literal[1, 2] = 2,
    step: int | None = None,
) -> Linearization:
    """Midpoint selections of the interval gradients of h^theta at (x_s, u_s).

    With M = mid(Jf + sum_p Jg_p u[alpha^p]) over the rough enclosure and
    G = sum_p mid(g_p(x_s)) du[alpha^p]/du, order 1 gives A = I + M dt, B = G dt and order
    2 adds the dt^2/2 terms of the Taylor step.
    """
    x = np.asarray(x_s, dtype=np.float64)
    u = np.asarray(u_s, dtype=np.float64)
    n, m, exps = di.n, di.side.m, di.side.control_exponents
    if x.shape != (n,) or u.shape != (m,):
        raise DimensionMismatch(f"linearization point has shapes {x.shape}, {u.shape}")
    if order not in (1, 2):
        raise ValueError("linearization order must be 1 or 2")

    rs = reach_step(di, _point_box(x), u, dt, step)
    h0 = select_next_state(sel, rs.r_next)

    jac = rs.jf
    g_prime = np.zeros((n, m))
    if exps:
        mu = np.array([monomial_value(u, alpha) for alpha in exps])
        jac = jac + (rs.jg * IntervalArray.point(mu).reshape(len(exps), 1, 1)).sum(axis=0)
        _, enc_g = di.terms(_point_box(x).reshape(1, n))
        g_mid = enc_g[0].mid()
        for p, alpha in enumerate(exps):
            g_prime += np.outer(g_mid[p], monomial_grad(u, alpha))
    big_m = jac.mid()
    eye = np.eye(n)
    if order == 1:
        a = eye + big_m * dt
        b = g_prime * dt
    else:
        a = eye + big_m * dt + (big_m @ big_m) * (dt * dt / 2.0)
        b = (eye * dt + big_m * (dt * dt / 2.0)) @ g_prime
    return Linearization(a=a, b=b, h0=h0, reach=rs)


@dataclass
class ScpIterate:
    """A horizon plan: xs are x^{j+1..j+N+1}, us are u^{j..j+N}, vs the dynamics slacks."""

    x0: FloatArray
    xs: FloatArray
    us: FloatArray
    vs: FloatArray
    linear_cost: float
    realized_cost: float
    radius: float = 0.0
    iterations: int = 0
    accepted: int = 0
    converged: bool = False
    no_progress: bool = False
    history: list[float] = field(default_factory=list)
    reach: list[ReachStep] = field(default_factory=list)

    @property
    def horizon(self) -> int:
        return int(self.us.shape[0]) - 1

    @property
    def first_control(self) -> FloatArray:
        return self.us[0]

    @property
    def predicted_boxes(self) -> list[IntervalVector]:
        return [r.r_next for r in self.reach]

    def to_dict(self) -> dict[str, Any]:
        return {
            "x0": self.x0.tolist(),
            "xs": self.xs.tolist(),
            "us": self.us.tolist(),
            "vs": self.vs.tolist(),
            "L": self.linear_cost,
            "J": self.realized_cost,
            "radius": self.radius,
            "iterations": self.iterations,
            "accepted": self.accepted,
            "converged": self.converged,
            "no_progress": self.no_progress,
            "history": list(self.history),
        }


def _norm(v: FloatArray, kind: Norm) -> float:
    return float(np.sum(np.abs(v))) if kind == "one" else float(np.max(np.abs(v), initial=0.0))


@dataclass(frozen=True, eq=False)
class _Evaluation:
    xs: FloatArray
    us: FloatArray
    lins: tuple[Linearization, ...]
    costs: tuple[float, ...]
    vs: FloatArray
    j: float


def _evaluate(
    di: DiffInclusion,
    cm: CostModel,
    sel: Selector,
    x0: FloatArray,
    xs: FloatArray,
    us: FloatArray,
    dt: float,
    penalty: float,
    penalty_norm: Norm,
    order: Literal[1, 2],
) -> _Evaluation:
    lins: list[Linearization] = []
    costs: list[float] = []
    prev = x0
    for q in range(us.shape[0]):
        lins.append(linearize(di, sel, prev, us[q], dt, order, step=q))
        costs.append(cm.c(prev, us[q], xs[q]))
        prev = xs[q]
    vs = xs - np.array([lin.h0 for lin in lins])
    j = float(sum(costs)) + penalty * sum(_norm(v, penalty_norm) for v in vs)
    return _Evaluation(xs=xs, us=us, lins=tuple(lins), costs=tuple(costs), vs=vs, j=j)


def _rollout(
    di: DiffInclusion,
    cm: CostModel,
    sel: Selector,
    x0: FloatArray,
    us: FloatArray,
    dt: float,
    order: Literal[1, 2],
) -> _Evaluation:
    """Follow the selections from x0 under fixed controls; the slacks are zero."""
    lins: list[Linearization] = []
    costs: list[float] = []
    prev = x0
    for q in range(us.shape[0]):
        lin = linearize(di, sel, prev, us[q], dt, order, step=q)
        lins.append(lin)
        costs.append(cm.c(prev, us[q], lin.h0))
        prev = lin.h0
    xs = np.array([lin.h0 for lin in lins]).reshape(us.shape[0], di.n)
    return _Evaluation(
        xs=xs, us=us, lins=tuple(lins), costs=tuple(costs), vs=np.zeros_like(xs), j=sum(costs)
    )


def realized_cost(
    traj: ScpIterate,
    cm: CostModel,
    di: DiffInclusion,
    sel: Selector,
    penalty: float,
    dt: float,
    penalty_norm: Norm = "one",
    order: Literal[1, 2] = 2,
) -> float:
    """J = sum_q c(x^q, u^q, x^{q+1}) + penalty * sum_q |x^{q+1} - h^theta(x^q, u^q)|.

    h^theta is the selected reach step, which the linearization order does not change.
    """
    return _evaluate(
        di, cm, sel, traj.x0, traj.xs, traj.us, dt, penalty, penalty_norm, order
    ).j


def _stage_models(cm: CostModel, x0: FloatArray, ev: _Evaluation) -> list[StageModel]:
    models = []
    prev = x0
    for q, lin in enumerate(ev.lins):
        gx, gu, gn = cm.grad(prev, ev.us[q], ev.xs[q])
        models.append(
            StageModel(
                a=lin.a,
                b=lin.b,
                h0=lin.h0,
                cost=ev.costs[q],
                grad_x=gx,
                grad_u=gu,
                grad_next=gn,
            )
        )
        prev = ev.xs[q]
    return models


def scp_solve(
    x_j: FloatArray,
    di: DiffInclusion,
    cm: CostModel,
    sel: Selector,
    tr: TrustRegionState,
    horizon: int,
    dt: float,
    solver: LpSolver | None = None,
    order: Literal[1, 2] = 2,
    initial_controls: Sequence[Sequence[float]] | FloatArray | None = None,
) -> ScpIterate:
    """Plan controls u^{j..j+N} from the measured state x_j.

    Starts from constant midpoint controls (or `initial_controls`) and iterates until the
    realized cost settles, the radius falls below its minimum, or max_iters is reached.
    The returned iterate is the last accepted one.
    """
    if horizon < 0:
        raise ValueError("horizon must be nonnegative")
    x0 = np.asarray(x_j, dtype=np.float64)
    n, m = di.n, di.side.m
    if x0.shape != (n,):
        raise DimensionMismatch(f"state has shape {x0.shape}, expected ({n},)")
    if sel.theta.shape != (n,):
        raise DimensionMismatch("selector does not match the state dimension")
    stages = horizon + 1
    x_box, u_box = di.side.state_box, di.side.control_box
    if initial_controls is None:
        us = np.tile(u_box.mid(), (stages, 1))
    else:
        us = np.array(initial_controls, dtype=np.float64).reshape(stages, m)
        us = np.clip(us, u_box.lo, u_box.hi)
    solver = solver or SimplexSolver()

    current = _rollout(di, cm, sel, x0, us, dt, order)
    state = tr
    history = [current.j]
    linear_cost = current.j
    iterations = accepted = 0
    converged = False
    for _ in range(tr.max_iters):
        iterations += 1
        sub = build_subproblem(
            current.xs,
            current.us,
            _stage_models(cm, x0, current),
            state.radius,
            x_box,
            u_box,
            state.penalty,
            trust_norm=state.trust_norm,
            penalty_norm=state.penalty_norm,
        )
        sol = solver.solve(sub.lp)
        if not sol.optimal:
            logger.warning(f"Subproblem reported {sol.status} at radius {state.radius:.3g}")
            state = state.contracted()
            if state.exhausted:
                break
            continue

        predicted = current.j - sol.objective_value
        if predicted <= CONVERGENCE_TOL * (1.0 + abs(current.j)):
            logger.debug(f"SCP converged: predicted decrease {predicted:.3g}")
            linear_cost = sol.objective_value
            converged = True
            break

        dx, du, _ = sub.split(sol.x)
        cand_xs = np.clip(current.xs + dx, x_box.lo, x_box.hi)
        cand_us = np.clip(current.us + du, u_box.lo, u_box.hi)
        try:
            candidate = _evaluate(
                di, cm, sel, x0, cand_xs, cand_us, dt, state.penalty, state.penalty_norm, order
            )
        except EnclosureFailure as e:
            logger.debug(f"SCP reject: candidate has no enclosure ({e.detail})")
            state = state.contracted()
            if state.exhausted:
                break
            continue

        rho = (current.j - candidate.j) / predicted
        if rho >= state.rho_accept:
            change = current.j - candidate.j
            logger.debug(
                f"SCP accept: J {current.j:.6g} -> {candidate.j:.6g}, rho={rho:.3f}, "
                f"r={state.radius:.3g}"
            )
            scale = 1.0 + abs(current.j)
            current = candidate
            accepted += 1
            linear_cost = sol.objective_value
            history.append(candidate.j)
            if rho >= state.rho_good:
                state = state.expanded()
            if abs(change) < CONVERGENCE_TOL * scale:
                converged = True
                break
        else:
            logger.debug(f"SCP reject: rho={rho:.3f}, r={state.radius:.3g}")
            state = state.contracted()
            if state.exhausted:
                break

    no_progress = accepted == 0 and not converged
    if no_progress:
        logger.warning(f"SCP made no progress in {iterations} iterations; keeping the initial plan")
    return ScpIterate(
        x0=x0,
        xs=current.xs,
        us=current.us,
        vs=current.vs,
        linear_cost=linear_cost,
        realized_cost=current.j,
        radius=state.radius,
        iterations=iterations,
        accepted=accepted,
        converged=converged,
        no_progress=no_progress,
        history=history,
        reach=[lin.reach for lin in current.lins],
    )
