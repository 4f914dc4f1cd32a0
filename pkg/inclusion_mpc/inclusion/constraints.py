"""Algebraic side constraints and their HC4-revise contractor.

Constraints are small expression trees over named variables:

    f(k)          unknown drift component f_k at the point or box
    g(p, k)       unknown input-gain component g_{p,k}
    x(i), u(i)    state and control components
    xdot(k)       measured derivative component (records only)
    jf(k, l)      Jacobian entry d f_k / d x_l
    jg(p, k, l)   Jacobian entry d g_{p,k} / d x_l

A constraint is `expr >= 0` or `expr == 0`. Revision evaluates the tree forward over
interval domains, intersects the root with the relation, then propagates the narrowed
value back down to the leaves. All domains carry a leading batch axis so many records are
revised at once.
"""

from __future__ import annotations

import logging
from abc import ABC, abstractmethod
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from typing import Any, Literal

import numpy as np

from inclusion_mpc.errors import EmptyAfterContraction
from inclusion_mpc.interval import IntervalArray

logger = logging.getLogger(__name__)

Relation = Literal["ge", "eq"]
Domains = dict[str, IntervalArray]
View = Mapping[str, IntervalArray]
Cache = dict[int, IntervalArray]

MAX_ROUNDS = 10
ROUND_TOL = 1e-12

# variable families available at each contraction site
SITE_VARIABLES: dict[str, frozenset[str]] = {
    "record": frozenset({"f", "g", "x", "u", "xdot"}),
    "box": frozenset({"f", "g", "x", "u"}),
    "jacobian": frozenset({"f", "g", "x", "u", "jf", "jg"}),
}


def _clean(value: IntervalArray) -> IntervalArray:
    lo = np.where(np.isnan(value.lo), -np.inf, value.lo)
    hi = np.where(np.isnan(value.hi), np.inf, value.hi)
    return IntervalArray._trusted(lo, hi)


def _nonneg(value: IntervalArray) -> IntervalArray:
    return value.intersect(IntervalArray.full(value.shape, 0.0, np.inf))


def _safe_div(num: IntervalArray, den: IntervalArray, fallback: IntervalArray) -> IntervalArray:
    """num / den where 0 is not in den, fallback elsewhere."""
    zero = den.contains(0.0)
    quotient = num / IntervalArray.choose(zero, 1.0, den)
    return IntervalArray.choose(zero, fallback, _clean(quotient))


class Expr(ABC):
    """Node of a constraint expression tree."""

    @abstractmethod
    def forward(self, domains: View, cache: Cache) -> IntervalArray:
        """Interval value of the node, batched over the leading axis."""

    @abstractmethod
    def backward(self, target: IntervalArray, domains: Domains, cache: Cache) -> None:
        """Narrow the leaves so the node value stays inside `target`."""

    @abstractmethod
    def families(self) -> set[str]:
        """Variable families referenced below this node."""

    def evaluate(self, domains: Mapping[str, IntervalArray]) -> IntervalArray:
        return self.forward(domains, {})

    def __add__(self, other: Any) -> Expr:
        return Binary("add", self, _wrap(other))

    def __radd__(self, other: Any) -> Expr:
        return Binary("add", _wrap(other), self)

    def __sub__(self, other: Any) -> Expr:
        return Binary("sub", self, _wrap(other))

    def __rsub__(self, other: Any) -> Expr:
        return Binary("sub", _wrap(other), self)

    def __mul__(self, other: Any) -> Expr:
        return Binary("mul", self, _wrap(other))

    def __rmul__(self, other: Any) -> Expr:
        return Binary("mul", _wrap(other), self)

    def __truediv__(self, other: Any) -> Expr:
        return Binary("div", self, _wrap(other))

    def __rtruediv__(self, other: Any) -> Expr:
        return Binary("div", _wrap(other), self)

    def __neg__(self) -> Expr:
        return Unary("neg", self)

    def __pow__(self, k: int) -> Expr:
        if not isinstance(k, int) or k < 0:
            raise ValueError("only nonnegative integer powers are supported")
        return Power(self, k)


def _wrap(value: Any) -> Expr:
    if isinstance(value, Expr):
        return value
    return Const(float(value))


@dataclass(frozen=True, eq=False)
class Const(Expr):
    value: float

    def forward(self, domains: View, cache: Cache) -> IntervalArray:
        batch = next(iter(domains.values())).shape[0]
        out = IntervalArray.full((batch,), self.value, self.value)
        cache[id(self)] = out
        return out

    def backward(self, target: IntervalArray, domains: Domains, cache: Cache) -> None:
        pass

    def families(self) -> set[str]:
        return set()


@dataclass(frozen=True, eq=False)
class Var(Expr):
    family: str
    index: tuple[int, ...]

    def _key(self) -> tuple[Any, ...]:
        return (slice(None), *self.index)

    def forward(self, domains: View, cache: Cache) -> IntervalArray:
        out: IntervalArray = domains[self.family][self._key()]
        cache[id(self)] = out
        return out

    def backward(self, target: IntervalArray, domains: Domains, cache: Cache) -> None:
        current = domains[self.family][self._key()]
        domains[self.family] = domains[self.family].replace(self._key(), current.intersect(target))

    def families(self) -> set[str]:
        return {self.family}


UnaryOp = Literal["neg", "sqrt", "sin", "cos", "exp", "abs"]


@dataclass(frozen=True, eq=False)
class Unary(Expr):
    op: UnaryOp
    arg: Expr

    def forward(self, domains: View, cache: Cache) -> IntervalArray:
        a = self.arg.forward(domains, cache)
        if self.op == "neg":
            out = -a
        elif self.op == "sqrt":
            out = a.sqrt()
        elif self.op == "sin":
            out = a.sin()
        elif self.op == "cos":
            out = a.cos()
        elif self.op == "exp":
            out = a.exp()
        else:
            out = a.abs()
        cache[id(self)] = out
        return out

    def backward(self, target: IntervalArray, domains: Domains, cache: Cache) -> None:
        a = cache[id(self.arg)]
        if self.op == "neg":
            narrowed = a.intersect(-target)
        elif self.op == "sqrt":
            narrowed = a.intersect(_nonneg(target).sq())
        elif self.op == "exp":
            narrowed = a.intersect(_clean(_nonneg(target).log()))
        elif self.op == "abs":
            r = _nonneg(target)
            narrowed = a.intersect(r).hull(a.intersect(-r))
        else:
            # periodic: no narrowing
            narrowed = a
        self.arg.backward(narrowed, domains, cache)

    def families(self) -> set[str]:
        return self.arg.families()


BinaryOp = Literal["add", "sub", "mul", "div", "min", "max"]


@dataclass(frozen=True, eq=False)
class Binary(Expr):
    op: BinaryOp
    left: Expr
    right: Expr

    def forward(self, domains: View, cache: Cache) -> IntervalArray:
        a = self.left.forward(domains, cache)
        b = self.right.forward(domains, cache)
        if self.op == "add":
            out = a + b
        elif self.op == "sub":
            out = a - b
        elif self.op == "mul":
            out = a * b
        elif self.op == "div":
            out = _safe_div(a, b, IntervalArray.full(a.shape, -np.inf, np.inf))
        elif self.op == "min":
            out = a.minimum(b)
        else:
            out = a.maximum(b)
        out = _clean(out)
        cache[id(self)] = out
        return out

    def backward(self, target: IntervalArray, domains: Domains, cache: Cache) -> None:
        a = cache[id(self.left)]
        b = cache[id(self.right)]
        if self.op == "add":
            a = a.intersect(_clean(target - b))
            b = b.intersect(_clean(target - a))
        elif self.op == "sub":
            a = a.intersect(_clean(target + b))
            b = b.intersect(_clean(a - target))
        elif self.op == "mul":
            a = a.intersect(_safe_div(target, b, a))
            b = b.intersect(_safe_div(target, a, b))
        elif self.op == "div":
            a = a.intersect(_clean(target * b))
            b = b.intersect(_safe_div(a, target, b))
        elif self.op == "min":
            floor = IntervalArray._trusted(target.lo, np.full(target.shape, np.inf))
            a_forced = b.lo > target.hi
            b_forced = a.lo > target.hi
            a = IntervalArray.choose(a_forced, a.intersect(target), a.intersect(floor))
            b = IntervalArray.choose(b_forced, b.intersect(target), b.intersect(floor))
        else:
            ceiling = IntervalArray._trusted(np.full(target.shape, -np.inf), target.hi)
            a_forced = b.hi < target.lo
            b_forced = a.hi < target.lo
            a = IntervalArray.choose(a_forced, a.intersect(target), a.intersect(ceiling))
            b = IntervalArray.choose(b_forced, b.intersect(target), b.intersect(ceiling))
        self.left.backward(a, domains, cache)
        self.right.backward(b, domains, cache)

    def families(self) -> set[str]:
        return self.left.families() | self.right.families()


@dataclass(frozen=True, eq=False)
class Power(Expr):
    arg: Expr
    k: int

    def forward(self, domains: View, cache: Cache) -> IntervalArray:
        out = self.arg.forward(domains, cache).pow(self.k)
        cache[id(self)] = out
        return out

    def backward(self, target: IntervalArray, domains: Domains, cache: Cache) -> None:
        a = cache[id(self.arg)]
        if self.k == 0:
            narrowed = a
        elif self.k % 2 == 0:
            r = target.root(self.k)
            narrowed = a.intersect(r).hull(a.intersect(-r))
        else:
            positive = target.root(self.k)
            negative = -(-target).root(self.k)
            narrowed = a.intersect(positive).hull(a.intersect(negative))
        self.arg.backward(narrowed, domains, cache)

    def families(self) -> set[str]:
        return self.arg.families()


# -- builders -------------------------------------------------------------------


def f(k: int) -> Var:
    return Var("f", (k,))


def g(p: int, k: int) -> Var:
    return Var("g", (p, k))


def x(i: int) -> Var:
    return Var("x", (i,))


def u(i: int) -> Var:
    return Var("u", (i,))


def xdot(k: int) -> Var:
    return Var("xdot", (k,))


def jf(k: int, l: int) -> Var:  # noqa: E741
    return Var("jf", (k, l))


def jg(p: int, k: int, l: int) -> Var:  # noqa: E741
    return Var("jg", (p, k, l))


def const(value: float) -> Const:
    return Const(float(value))


def sqrt(e: Expr) -> Expr:
    return Unary("sqrt", e)


def sin(e: Expr) -> Expr:
    return Unary("sin", e)


def cos(e: Expr) -> Expr:
    return Unary("cos", e)


def exp(e: Expr) -> Expr:
    return Unary("exp", e)


def abs_(e: Expr) -> Expr:
    return Unary("abs", e)


def minimum(a: Expr | float, b: Expr | float) -> Expr:
    return Binary("min", _wrap(a), _wrap(b))


def maximum(a: Expr | float, b: Expr | float) -> Expr:
    return Binary("max", _wrap(a), _wrap(b))


@dataclass(frozen=True, eq=False)
class ConstraintSpec:
    """`expr >= 0` or `expr == 0`."""

    expr: Expr
    relation: Relation = "ge"
    label: str = ""
    tags: frozenset[str] = field(init=False)

    def __post_init__(self) -> None:
        if self.relation not in ("ge", "eq"):
            raise ValueError(f"unknown relation: {self.relation}")
        object.__setattr__(self, "tags", frozenset(self.expr.families()))

    @classmethod
    def geq(cls, lhs: Expr | float, rhs: Expr | float = 0.0, label: str = "") -> ConstraintSpec:
        """lhs >= rhs."""
        return cls(_wrap(lhs) - _wrap(rhs), "ge", label)

    @classmethod
    def eq(cls, lhs: Expr | float, rhs: Expr | float = 0.0, label: str = "") -> ConstraintSpec:
        """lhs == rhs."""
        return cls(_wrap(lhs) - _wrap(rhs), "eq", label)

    def applies_to(self, available: frozenset[str] | set[str]) -> bool:
        return self.tags <= available

    def revise(self, domains: Domains) -> Domains:
        """One HC4-revise pass; returns narrowed copies of the domains."""
        out = dict(domains)
        cache: Cache = {}
        value = self.expr.forward(out, cache)
        upper = 0.0 if self.relation == "eq" else np.inf
        target = value.intersect(IntervalArray.full(value.shape, 0.0, upper))
        if target.any_empty():
            row = int(np.argmax(target.is_empty()))
            raise EmptyAfterContraction(f"constraint {self.name} cannot hold (batch row {row})")
        self.expr.backward(target, out, cache)
        for family, dom in out.items():
            if dom.any_empty():
                rows = np.any(dom.is_empty().reshape(dom.shape[0], -1), axis=1)
                row = int(np.argmax(rows))
                raise EmptyAfterContraction(
                    f"constraint {self.name} empties {family} (batch row {row})"
                )
        return out

    @property
    def name(self) -> str:
        return self.label or f"{self.relation}#{id(self):x}"


def apply_algebraic_contraction(
    enclosures: Mapping[str, IntervalArray],
    constraints: Sequence[ConstraintSpec],
    context: Mapping[str, Any] | None = None,
    site: str = "record",
    batched: bool = False,
) -> dict[str, IntervalArray]:
    """Tighten enclosures of the unknowns with every constraint that applies at `site`.

    `enclosures` holds the contractible families (f, g, jf, jg); `context` holds fixed
    quantities (x, u, xdot) as point arrays or intervals. Constraints run round-robin
    until no width shrinks by more than ROUND_TOL or MAX_ROUNDS is reached. Without
    `batched`, inputs carry no batch axis.
    """
    available = SITE_VARIABLES[site]
    domains: Domains = {}
    for name, value in enclosures.items():
        domains[name] = value if batched else value.reshape(1, *value.shape)
    for name, raw in (context or {}).items():
        value = raw if isinstance(raw, IntervalArray) else IntervalArray.point(raw)
        domains[name] = value if batched else value.reshape(1, *value.shape)

    present = available & set(domains)
    active = [c for c in constraints if c.applies_to(present)]
    if not active:
        return {name: enclosures[name] for name in enclosures}

    for round_no in range(MAX_ROUNDS):
        before = {name: domains[name].width() for name in enclosures}
        for constraint in active:
            domains = constraint.revise(domains)
        shrink = max(
            (
                float(np.max(before[name] - domains[name].width(), initial=0.0))
                for name in enclosures
            ),
            default=0.0,
        )
        if not shrink > ROUND_TOL:
            logger.debug(f"Constraint propagation settled after {round_no + 1} rounds")
            break

    if batched:
        return {name: domains[name] for name in enclosures}
    return {name: domains[name].reshape(*enclosures[name].shape) for name in enclosures}
