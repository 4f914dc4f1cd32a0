"""Builtin ground-truth environments.

Every environment is control-polynomial, xdot = f(x) + sum_p g_p(x) u[alpha^p], and carries
the side information a user would declare for it: analytic Lipschitz bounds, a global
bound M, known ranges, a known-terms factorization and algebraic constraints. The truth
is only used to simulate the plant and to audit that side information.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from inclusion_mpc.errors import ConfigError, DimensionMismatch
from inclusion_mpc.harness.costs import QuadraticCost
from inclusion_mpc.inclusion import constraints as cs
from inclusion_mpc.inclusion.constraints import ConstraintSpec
from inclusion_mpc.inclusion.side import KnownFactor, KnownTermsSpec, SideInfo
from inclusion_mpc.interval import (
    FloatArray,
    IntervalArray,
    IntervalVector,
    stack_components,
)
from inclusion_mpc.models import DataPoint, Dataset

logger = logging.getLogger(__name__)

Tier = Literal["lipschitz", "known_terms", "constraints"]
TIERS: tuple[Tier, ...] = ("lipschitz", "known_terms", "constraints")

VectorField = Callable[[FloatArray], FloatArray]


def _box(pairs: Sequence[tuple[float, float]]) -> IntervalVector:
    return IntervalVector.from_pairs(pairs)


def _batch(boxes: IntervalArray) -> tuple[int, ...]:
    return tuple(boxes.shape[:-1])


def _zeros(*shape: int) -> IntervalArray:
    return IntervalArray.full(shape, 0.0, 0.0)


def _rows(rows: Sequence[IntervalArray], batch: tuple[int, ...]) -> IntervalArray:
    return IntervalArray.stack(list(rows), axis=len(batch))


@dataclass(frozen=True, eq=False)
class Environment:
    """A simulated plant plus its declared side information."""

    name: str
    f: VectorField  # (..., n) -> (..., n)
    g: VectorField  # (..., n) -> (..., d, n)
    control_exponents: tuple[tuple[int, ...], ...]
    state_box: IntervalVector
    control_box: IntervalVector
    dt: float
    initial_state: FloatArray
    lipschitz_f: FloatArray
    lipschitz_g: FloatArray
    global_bound: float
    target: FloatArray
    cost_weights: FloatArray
    control_weight: float = 0.1
    weights: FloatArray | None = None
    f_bounds: IntervalArray | None = None
    g_bounds: IntervalArray | None = None
    known: Callable[[], KnownTermsSpec] | None = None
    constraint_factory: Callable[[], tuple[ConstraintSpec, ...]] = field(default=lambda: ())
    description: str = ""

    @property
    def n(self) -> int:
        return int(self.state_box.shape[0])

    @property
    def m(self) -> int:
        return int(self.control_box.shape[0])

    @property
    def d(self) -> int:
        return len(self.control_exponents)

    @property
    def norm_weights(self) -> FloatArray:
        return np.ones(self.n) if self.weights is None else np.asarray(self.weights, float)

    def monomials(self, u: FloatArray) -> FloatArray:
        """u[alpha^p] over the last axis: (..., m) -> (..., d)."""
        uu = np.asarray(u, dtype=np.float64)
        if not self.control_exponents:
            return np.zeros((*uu.shape[:-1], 0))
        exps = np.asarray(self.control_exponents, dtype=int)  # (d, m)
        return np.prod(uu[..., None, :] ** exps, axis=-1)

    def xdot(self, x: FloatArray, u: FloatArray) -> FloatArray:
        """True derivative, batched over leading axes."""
        xx = np.asarray(x, dtype=np.float64)
        uu = np.asarray(u, dtype=np.float64)
        if xx.shape[-1] != self.n or uu.shape[-1] != self.m:
            raise DimensionMismatch(f"{self.name}: state or control has the wrong dimension")
        out = self.f(xx)
        if self.d:
            mu = self.monomials(uu)
            out = out + np.sum(self.g(xx) * mu[..., :, None], axis=-2)
        return out

    def known_terms(self) -> KnownTermsSpec | None:
        return None if self.known is None else self.known()

    def constraints(self) -> tuple[ConstraintSpec, ...]:
        return self.constraint_factory()

    def side_info(self, tier: Tier = "lipschitz") -> SideInfo:
        """Declared side information for one tier; higher tiers add to lower ones."""
        if tier not in TIERS:
            raise ConfigError(f"unknown side-information tier: {tier}")
        side = SideInfo(
            lipschitz_f=self.lipschitz_f,
            lipschitz_g=self.lipschitz_g,
            weights=self.norm_weights,
            control_exponents=self.control_exponents,
            global_bound=self.global_bound,
            state_box=self.state_box,
            control_box=self.control_box,
            f_bounds=self.f_bounds,
            g_bounds=self.g_bounds,
        )
        if tier in ("known_terms", "constraints"):
            side = side.with_known_terms(self.known_terms())
        if tier == "constraints":
            side = side.with_constraints(self.constraints())
        return side

    def task_cost(
        self,
        state_weights: Sequence[float] | None = None,
        control_weight: float | None = None,
        target: Sequence[float] | None = None,
    ) -> QuadraticCost:
        return QuadraticCost.for_boxes(
            self.state_box,
            self.control_box,
            self.cost_weights if state_weights is None else state_weights,
            self.control_weight if control_weight is None else control_weight,
            self.target if target is None else target,
        )

    def sample_states(self, count: int, rng: np.random.Generator) -> FloatArray:
        return rng.uniform(self.state_box.lo, self.state_box.hi, size=(count, self.n))

    def sample_controls(self, count: int, rng: np.random.Generator) -> FloatArray:
        return rng.uniform(self.control_box.lo, self.control_box.hi, size=(count, self.m))

    def sample_dataset(
        self,
        count: int,
        rng: np.random.Generator,
        near: FloatArray | None = None,
        spread: float | FloatArray = 0.5,
    ) -> Dataset:
        """Exact derivative samples at random states (optionally around `near`)."""
        if near is None:
            states = self.sample_states(count, rng)
        else:
            offsets = rng.uniform(-1.0, 1.0, size=(count, self.n)) * spread
            states = np.clip(np.asarray(near) + offsets, self.state_box.lo, self.state_box.hi)
        controls = self.sample_controls(count, rng)
        xdots = self.xdot(states, controls)
        data = Dataset()
        for i in range(count):
            data.append(DataPoint(x=states[i], xdot=xdots[i], u=controls[i]), float(i))
        return data

    def audit_side_info(self, n_samples: int = 2000, seed: int = 0) -> list[str]:
        """Dense-sampling check of every declared bound; returns the violations found."""
        rng = np.random.default_rng(seed)
        problems: list[str] = []
        a = self.sample_states(n_samples, rng)
        b = self.sample_states(n_samples, rng)
        u = self.sample_controls(n_samples, rng)
        w = self.norm_weights
        dist = np.sqrt(np.sum((w * (a - b)) ** 2, axis=-1))
        dist = np.where(dist > 0, dist, np.inf)
        fa, fb = self.f(a), self.f(b)
        ga, gb = self.g(a), self.g(b)
        tol = 1e-9

        slope_f = np.max(np.abs(fa - fb) / dist[:, None], axis=0)
        for k in np.flatnonzero(slope_f > self.lipschitz_f * (1 + tol) + tol):
            problems.append(f"f_{k} slope {slope_f[k]:.4g} exceeds {self.lipschitz_f[k]:.4g}")
        if self.d:
            slope_g = np.max(np.abs(ga - gb) / dist[:, None, None], axis=0)
            lip_g = np.asarray(self.lipschitz_g, float).reshape(self.d, self.n)
            for p, k in zip(*np.nonzero(slope_g > lip_g * (1 + tol) + tol), strict=True):
                problems.append(
                    f"g_{p},{k} slope {slope_g[p, k]:.4g} exceeds {lip_g[p, k]:.4g}"
                )

        big = self.global_bound
        if np.any(np.abs(fa) > big) or np.any(np.abs(ga) > big):
            problems.append(f"truth exceeds the global bound M={big:g}")
        if self.f_bounds is not None and not self.f_bounds.contains_all(fa):
            problems.append("truth leaves the declared f bounds")
        if self.g_bounds is not None and not self.g_bounds.contains_all(ga):
            problems.append("truth leaves the declared g bounds")

        known = self.known_terms()
        if known is not None:
            problems += self._audit_known_terms(known, a, fa, ga)
        problems += self._audit_constraints(a, u, fa, ga)
        for message in problems:
            logger.warning(f"{self.name}: {message}")
        return problems

    def _audit_known_terms(
        self, known: KnownTermsSpec, x: FloatArray, fx: FloatArray, gx: FloatArray
    ) -> list[str]:
        boxes = IntervalArray.point(x)
        big = self.global_bound
        total_f = _zeros(*fx.shape)
        total_g = _zeros(*gx.shape)
        for factor in known.factors:
            bf = factor.f_bounds
            if bf is None:
                bf = IntervalArray.full((self.n,), -big, big)
            bg = factor.g_bounds
            if bg is None:
                bg = IntervalArray.full((self.d, self.n), -big, big)
            total_f = total_f + factor.f_ext(boxes) * bf
            total_g = total_g + factor.g_ext(boxes) * bg
        out = []
        if not total_f.contains_all(fx):
            out.append("known f factors with declared cofactor ranges miss the truth")
        if not total_g.contains_all(gx):
            out.append("known g factors with declared cofactor ranges miss the truth")
        return out

    def _audit_constraints(
        self, x: FloatArray, u: FloatArray, fx: FloatArray, gx: FloatArray
    ) -> list[str]:
        domains = {
            "x": IntervalArray.point(x),
            "u": IntervalArray.point(u),
            "f": IntervalArray.point(fx),
            "g": IntervalArray.point(gx),
            "xdot": IntervalArray.point(self.xdot(x, u)),
        }
        out = []
        for constraint in self.constraints():
            if not constraint.applies_to(set(domains)):
                continue
            value = constraint.expr.evaluate(domains)
            slack = 1e-9 * (1.0 + np.abs(value.mid()))
            if constraint.relation == "eq":
                ok = np.all((value.lo <= slack) & (value.hi >= -slack))
            else:
                ok = np.all(value.hi >= -slack)
            if not ok:
                out.append(f"constraint {constraint.name} fails on the truth")
        return out


# ---------------------------------------------------------------------------
# Damped pendulum: theta measured from the hanging position, task is to hold it upright
# ---------------------------------------------------------------------------

PENDULUM_GRAVITY = 4.0
PENDULUM_DAMPING = 0.2
PENDULUM_GAIN = 1.0


def _pendulum_f(x: FloatArray) -> FloatArray:
    theta, omega = x[..., 0], x[..., 1]
    return np.stack(
        [omega, -PENDULUM_GRAVITY * np.sin(theta) - PENDULUM_DAMPING * omega], axis=-1
    )


def _pendulum_g(x: FloatArray) -> FloatArray:
    g = np.zeros((*x.shape[:-1], 1, 2))
    g[..., 0, 1] = PENDULUM_GAIN
    return g


def _pendulum_known() -> KnownTermsSpec:
    """f = (omega, sin theta) * (1, -a) + (0, omega) * (., -b); g = (0, 1) * (., gain)."""

    def f0(b: IntervalArray) -> IntervalArray:
        return stack_components([b[..., 1], b[..., 0].sin()], _batch(b))

    def jf0(b: IntervalArray) -> IntervalArray:
        batch = _batch(b)
        return _rows(
            [stack_components([0.0, 1.0], batch), stack_components([b[..., 0].cos(), 0.0], batch)],
            batch,
        )

    def g0(b: IntervalArray) -> IntervalArray:
        batch = _batch(b)
        return stack_components([0.0, 1.0], batch).reshape(*batch, 1, 2)

    def f1(b: IntervalArray) -> IntervalArray:
        return stack_components([0.0, b[..., 1]], _batch(b))

    def jf1(b: IntervalArray) -> IntervalArray:
        batch = _batch(b)
        return _rows(
            [stack_components([0.0, 0.0], batch), stack_components([0.0, 1.0], batch)], batch
        )

    def g_none(b: IntervalArray) -> IntervalArray:
        return _zeros(*_batch(b), 1, 2)

    def jg_none(b: IntervalArray) -> IntervalArray:
        return _zeros(*_batch(b), 1, 2, 2)

    big = 10.0
    return KnownTermsSpec(
        factors=(
            KnownFactor(
                f_ext=f0,
                f_jac=jf0,
                g_ext=g0,
                g_jac=jg_none,
                lipschitz_f=np.zeros(2),
                lipschitz_g=np.zeros((1, 2)),
                f_bounds=IntervalVector.from_pairs([(1.0, 1.0), (-big, 0.0)]),
                g_bounds=IntervalArray([[-big, 0.5]], [[big, 2.0]]),
                label="gravity and actuator",
            ),
            KnownFactor(
                f_ext=f1,
                f_jac=jf1,
                g_ext=g_none,
                g_jac=jg_none,
                lipschitz_f=np.zeros(2),
                lipschitz_g=np.zeros((1, 2)),
                f_bounds=IntervalVector.from_pairs([(-big, big), (-big, 0.0)]),
                label="damping",
            ),
        )
    )


def _pendulum_constraints() -> tuple[ConstraintSpec, ...]:
    return (
        ConstraintSpec.eq(cs.f(0), cs.x(1), label="angle rate is omega"),
        ConstraintSpec.eq(cs.g(0, 0), 0.0, label="torque does not move the angle"),
        ConstraintSpec.geq(cs.g(0, 1), 0.0, label="positive actuator gain"),
    )


def pendulum() -> Environment:
    a, b = PENDULUM_GRAVITY, PENDULUM_DAMPING
    return Environment(
        name="pendulum",
        f=_pendulum_f,
        g=_pendulum_g,
        control_exponents=((1,),),
        state_box=_box([(math.pi - 2.5, math.pi + 2.5), (-6.0, 6.0)]),
        control_box=_box([(-3.0, 3.0)]),
        dt=0.05,
        initial_state=np.array([math.pi - 0.3, 0.0]),
        lipschitz_f=np.array([1.0, math.hypot(a, b)]),
        lipschitz_g=np.zeros((1, 2)),
        global_bound=10.0,
        g_bounds=IntervalArray([[-10.0, 0.5]], [[10.0, 2.0]]),
        target=np.array([math.pi, 0.0]),
        cost_weights=np.array([1.0, 0.1]),
        control_weight=0.01,
        known=_pendulum_known,
        constraint_factory=_pendulum_constraints,
        description="damped pendulum, torque input, swing-up hold at the top",
    )


# ---------------------------------------------------------------------------
# Unicycle: position and heading, speed and turn-rate inputs
# ---------------------------------------------------------------------------


def _unicycle_f(x: FloatArray) -> FloatArray:
    return np.zeros_like(x)


def _unicycle_g(x: FloatArray) -> FloatArray:
    phi = x[..., 2]
    g = np.zeros((*x.shape[:-1], 2, 3))
    g[..., 0, 0] = np.cos(phi)
    g[..., 0, 1] = np.sin(phi)
    g[..., 1, 2] = 1.0
    return g


def _unicycle_known() -> KnownTermsSpec:
    def f_none(b: IntervalArray) -> IntervalArray:
        return _zeros(*_batch(b), 3)

    def jf_none(b: IntervalArray) -> IntervalArray:
        return _zeros(*_batch(b), 3, 3)

    def g0(b: IntervalArray) -> IntervalArray:
        batch = _batch(b)
        phi = b[..., 2]
        return _rows(
            [
                stack_components([phi.cos(), phi.sin(), 0.0], batch),
                stack_components([0.0, 0.0, 1.0], batch),
            ],
            batch,
        )

    def jg0(b: IntervalArray) -> IntervalArray:
        batch = _batch(b)
        phi = b[..., 2]
        zero = stack_components([0.0, 0.0, 0.0], batch)
        speed = _rows(
            [
                stack_components([0.0, 0.0, -phi.sin()], batch),
                stack_components([0.0, 0.0, phi.cos()], batch),
                zero,
            ],
            batch,
        )
        turn = _rows([zero, zero, zero], batch)
        return IntervalArray.stack([speed, turn], axis=len(batch))

    return KnownTermsSpec(
        factors=(
            KnownFactor(
                f_ext=f_none,
                f_jac=jf_none,
                g_ext=g0,
                g_jac=jg0,
                lipschitz_f=np.zeros(3),
                lipschitz_g=np.zeros((2, 3)),
                g_bounds=IntervalArray(np.full((2, 3), 0.5), np.full((2, 3), 2.0)),
                label="heading kinematics",
            ),
        )
    )


def _unicycle_constraints() -> tuple[ConstraintSpec, ...]:
    return (
        ConstraintSpec.eq(cs.f(0), 0.0, label="no drift x"),
        ConstraintSpec.eq(cs.f(1), 0.0, label="no drift y"),
        ConstraintSpec.eq(cs.f(2), 0.0, label="no drift heading"),
        ConstraintSpec.eq(cs.g(0, 2), 0.0, label="speed does not turn"),
        ConstraintSpec.eq(cs.g(1, 0), 0.0, label="turning does not translate x"),
        ConstraintSpec.eq(cs.g(1, 1), 0.0, label="turning does not translate y"),
        ConstraintSpec.eq(cs.g(0, 0) ** 2 + cs.g(0, 1) ** 2, 1.0, label="unit speed gain"),
    )


def unicycle() -> Environment:
    return Environment(
        name="unicycle",
        f=_unicycle_f,
        g=_unicycle_g,
        control_exponents=((1, 0), (0, 1)),
        state_box=_box([(-3.0, 3.0), (-3.0, 3.0), (-math.pi, math.pi)]),
        control_box=_box([(-1.0, 1.0), (-2.0, 2.0)]),
        dt=0.05,
        initial_state=np.array([1.5, 1.0, 0.0]),
        lipschitz_f=np.zeros(3),
        lipschitz_g=np.array([[1.0, 1.0, 0.0], [0.0, 0.0, 0.0]]),
        global_bound=2.0,
        g_bounds=IntervalArray(
            [[-1.0, -1.0, -2.0], [-2.0, -2.0, 0.5]], [[1.0, 1.0, 2.0], [2.0, 2.0, 2.0]]
        ),
        target=np.zeros(3),
        cost_weights=np.array([1.0, 1.0, 0.1]),
        control_weight=0.01,
        known=_unicycle_known,
        constraint_factory=_unicycle_constraints,
        description="unicycle with speed and turn-rate inputs",
    )


# ---------------------------------------------------------------------------
# Controlled Duffing oscillator with a quadratic control monomial
# ---------------------------------------------------------------------------

DUFFING_DELTA = 0.3
DUFFING_ALPHA = -1.0
DUFFING_BETA = 1.0


def _duffing_f(x: FloatArray) -> FloatArray:
    q, p = x[..., 0], x[..., 1]
    return np.stack(
        [p, -DUFFING_DELTA * p - DUFFING_ALPHA * q - DUFFING_BETA * q**3], axis=-1
    )


def _duffing_g(x: FloatArray) -> FloatArray:
    q = x[..., 0]
    g = np.zeros((*x.shape[:-1], 2, 2))
    g[..., 0, 1] = 1.0
    g[..., 1, 1] = 0.2 + 0.1 * np.cos(q)
    return g


def _duffing_known() -> KnownTermsSpec:
    """f_1 = q * (-alpha) + q^3 * (-beta) + p * (-delta); g_1 = 1 * (gain), 1 * (g2(q))."""

    def f_lin(b: IntervalArray) -> IntervalArray:
        return stack_components([b[..., 1], b[..., 0]], _batch(b))

    def jf_lin(b: IntervalArray) -> IntervalArray:
        batch = _batch(b)
        return _rows(
            [stack_components([0.0, 1.0], batch), stack_components([1.0, 0.0], batch)], batch
        )

    def f_cube(b: IntervalArray) -> IntervalArray:
        return stack_components([0.0, b[..., 0].pow(3)], _batch(b))

    def jf_cube(b: IntervalArray) -> IntervalArray:
        batch = _batch(b)
        return _rows(
            [
                stack_components([0.0, 0.0], batch),
                stack_components([b[..., 0].sq() * 3.0, 0.0], batch),
            ],
            batch,
        )

    def f_damp(b: IntervalArray) -> IntervalArray:
        return stack_components([0.0, b[..., 1]], _batch(b))

    def jf_damp(b: IntervalArray) -> IntervalArray:
        batch = _batch(b)
        return _rows(
            [stack_components([0.0, 0.0], batch), stack_components([0.0, 1.0], batch)], batch
        )

    def g_inputs(b: IntervalArray) -> IntervalArray:
        batch = _batch(b)
        return _rows(
            [stack_components([0.0, 1.0], batch), stack_components([0.0, 1.0], batch)], batch
        )

    def g_none(b: IntervalArray) -> IntervalArray:
        return _zeros(*_batch(b), 2, 2)

    def jg_none(b: IntervalArray) -> IntervalArray:
        return _zeros(*_batch(b), 2, 2, 2)

    big = 12.0
    free = (-big, big)
    return KnownTermsSpec(
        factors=(
            KnownFactor(
                f_ext=f_lin,
                f_jac=jf_lin,
                g_ext=g_inputs,
                g_jac=jg_none,
                lipschitz_f=np.zeros(2),
                lipschitz_g=np.array([[0.0, 0.0], [0.0, 0.1]]),
                f_bounds=IntervalVector.from_pairs([(1.0, 1.0), free]),
                g_bounds=IntervalArray([[-big, 0.5], [-big, 0.0]], [[big, 2.0], [big, 1.0]]),
                label="linear terms and inputs",
            ),
            KnownFactor(
                f_ext=f_cube,
                f_jac=jf_cube,
                g_ext=g_none,
                g_jac=jg_none,
                lipschitz_f=np.zeros(2),
                lipschitz_g=np.zeros((2, 2)),
                f_bounds=IntervalVector.from_pairs([free, (-big, 0.0)]),
                label="hardening spring",
            ),
            KnownFactor(
                f_ext=f_damp,
                f_jac=jf_damp,
                g_ext=g_none,
                g_jac=jg_none,
                lipschitz_f=np.zeros(2),
                lipschitz_g=np.zeros((2, 2)),
                f_bounds=IntervalVector.from_pairs([free, (-big, 0.0)]),
                label="damping",
            ),
        )
    )


def _duffing_constraints() -> tuple[ConstraintSpec, ...]:
    return (
        ConstraintSpec.eq(cs.f(0), cs.x(1), label="position rate is momentum"),
        ConstraintSpec.eq(cs.g(0, 0), 0.0, label="force does not move position"),
        ConstraintSpec.eq(cs.g(1, 0), 0.0, label="quadratic input does not move position"),
        ConstraintSpec.geq(cs.g(1, 1), 0.1, label="quadratic input gain at least 0.1"),
    )


def duffing() -> Environment:
    slope = max(abs(-DUFFING_ALPHA - 3.0 * DUFFING_BETA * q * q) for q in (0.0, 2.0))
    return Environment(
        name="duffing",
        f=_duffing_f,
        g=_duffing_g,
        control_exponents=((1,), (2,)),
        state_box=_box([(-2.0, 2.0), (-3.0, 3.0)]),
        control_box=_box([(-1.0, 1.0)]),
        dt=0.05,
        initial_state=np.array([1.0, 0.0]),
        lipschitz_f=np.array([1.0, math.hypot(slope, DUFFING_DELTA)]),
        lipschitz_g=np.array([[0.0, 0.0], [0.0, 0.1]]),
        global_bound=12.0,
        g_bounds=IntervalArray([[-12.0, 0.5], [-12.0, 0.0]], [[12.0, 2.0], [12.0, 1.0]]),
        target=np.zeros(2),
        cost_weights=np.array([1.0, 0.1]),
        control_weight=0.01,
        known=_duffing_known,
        constraint_factory=_duffing_constraints,
        description="double-well Duffing oscillator with inputs u and u^2",
    )


# ---------------------------------------------------------------------------
# Double integrator: linear, fully known under the known-terms tier
# ---------------------------------------------------------------------------


def _double_integrator_f(x: FloatArray) -> FloatArray:
    return np.stack([x[..., 1], np.zeros_like(x[..., 1])], axis=-1)


def _double_integrator_g(x: FloatArray) -> FloatArray:
    g = np.zeros((*x.shape[:-1], 1, 2))
    g[..., 0, 1] = 1.0
    return g


def _double_integrator_known() -> KnownTermsSpec:
    def f0(b: IntervalArray) -> IntervalArray:
        return stack_components([b[..., 1], 0.0], _batch(b))

    def jf0(b: IntervalArray) -> IntervalArray:
        batch = _batch(b)
        return _rows(
            [stack_components([0.0, 1.0], batch), stack_components([0.0, 0.0], batch)], batch
        )

    def g0(b: IntervalArray) -> IntervalArray:
        batch = _batch(b)
        return stack_components([0.0, 1.0], batch).reshape(*batch, 1, 2)

    def jg0(b: IntervalArray) -> IntervalArray:
        return _zeros(*_batch(b), 1, 2, 2)

    return KnownTermsSpec(
        factors=(
            KnownFactor(
                f_ext=f0,
                f_jac=jf0,
                g_ext=g0,
                g_jac=jg0,
                lipschitz_f=np.zeros(2),
                lipschitz_g=np.zeros((1, 2)),
                f_bounds=IntervalVector.from_pairs([(1.0, 1.0), (1.0, 1.0)]),
                g_bounds=IntervalArray([[1.0, 1.0]], [[1.0, 1.0]]),
                label="exact linear model",
            ),
        )
    )


def _double_integrator_constraints() -> tuple[ConstraintSpec, ...]:
    return (
        ConstraintSpec.eq(cs.f(0), cs.x(1), label="position rate is velocity"),
        ConstraintSpec.eq(cs.f(1), 0.0, label="no drift in velocity"),
    )


def double_integrator() -> Environment:
    return Environment(
        name="double_integrator",
        f=_double_integrator_f,
        g=_double_integrator_g,
        control_exponents=((1,),),
        state_box=_box([(-5.0, 5.0), (-5.0, 5.0)]),
        control_box=_box([(-1.0, 1.0)]),
        dt=0.1,
        initial_state=np.array([1.0, 0.0]),
        lipschitz_f=np.array([1.0, 0.0]),
        lipschitz_g=np.zeros((1, 2)),
        global_bound=6.0,
        g_bounds=IntervalArray([[-6.0, 0.5]], [[6.0, 2.0]]),
        target=np.zeros(2),
        cost_weights=np.array([1.0, 1.0]),
        control_weight=0.1,
        known=_double_integrator_known,
        constraint_factory=_double_integrator_constraints,
        description="linear double integrator (exact under known terms)",
    )


def linear_growth(rate: float = 1.0) -> Environment:
    """Scalar xdot = rate * x + u. Not registered; reach checks use it as the expansive case."""
    if rate <= 0:
        raise ValueError("rate must be positive")

    def f(x: FloatArray) -> FloatArray:
        return rate * np.asarray(x, dtype=np.float64)

    def g(x: FloatArray) -> FloatArray:
        return np.ones((*np.shape(x)[:-1], 1, 1))

    return Environment(
        name="linear_growth",
        f=f,
        g=g,
        control_exponents=((1,),),
        state_box=_box([(-3.0, 3.0)]),
        control_box=_box([(-0.5, 0.5)]),
        dt=0.05,
        initial_state=np.array([0.5]),
        lipschitz_f=np.array([rate]),
        lipschitz_g=np.zeros((1, 1)),
        global_bound=max(3.0 * rate, 1.0),
        g_bounds=IntervalArray([[1.0]], [[1.0]]),
        target=np.zeros(1),
        cost_weights=np.ones(1),
        description="scalar unstable linear system",
    )


REGISTRY: dict[str, Callable[[], Environment]] = {
    "pendulum": pendulum,
    "unicycle": unicycle,
    "duffing": duffing,
    "double_integrator": double_integrator,
}


def builtin_environments() -> list[Environment]:
    return [factory() for factory in REGISTRY.values()]


def get_environment(name: str) -> Environment:
    try:
        return REGISTRY[name]()
    except KeyError:
        known = ", ".join(sorted(REGISTRY))
        raise ConfigError(f"unknown environment '{name}' (known: {known})") from None
