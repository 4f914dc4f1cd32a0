"""Side information about the unknown dynamics.

The dynamics are xdot = f(x) + sum_p g_p(x) u[alpha^p]. Side information bounds how
fast f and g_p can vary (Lipschitz bounds under a weighted 2-norm), how large they can
be, which known factors they contain, and which algebraic constraints they obey.
"""

from __future__ import annotations

from collections.abc import Callable, Sequence
from dataclasses import dataclass, replace
from typing import TYPE_CHECKING, Literal

import numpy as np

from inclusion_mpc.errors import DimensionMismatch
from inclusion_mpc.interval import FloatArray, IntervalArray, IntervalVector

if TYPE_CHECKING:
    from inclusion_mpc.inclusion.constraints import ConstraintSpec

JacobianWeight = Literal["column", "row"]
BoxMap = Callable[[IntervalArray], IntervalArray]


def _vector(values: Sequence[float] | FloatArray, name: str) -> FloatArray:
    arr = np.array(values, dtype=np.float64)
    if arr.ndim != 1:
        raise DimensionMismatch(f"{name} must be a vector, got shape {arr.shape}")
    return arr


def _nonneg_finite(arr: FloatArray, name: str) -> None:
    if not np.all(np.isfinite(arr)) or np.any(arr < 0):
        raise ValueError(f"{name} must be finite and nonnegative")


@dataclass(frozen=True, eq=False)
class KnownFactor:
    """One known factor pair of the dynamics

        xdot = sum_s kf^s(x) * f^s(x) + sum_p sum_s kg^s_p(x) * g^s_p(x) * u[alpha^p]

    The known functions are supplied as interval extensions over batched boxes of shape
    (..., n): `f_ext` returns (..., n), `f_jac` returns (..., n, n), `g_ext` returns
    (..., d, n) and `g_jac` returns (..., d, n, n). The unknown cofactors f^s and g^s_p
    get their own Lipschitz bounds and optional known ranges.
    """

    f_ext: BoxMap
    f_jac: BoxMap
    g_ext: BoxMap
    g_jac: BoxMap
    lipschitz_f: FloatArray
    lipschitz_g: FloatArray
    f_bounds: IntervalArray | None = None
    g_bounds: IntervalArray | None = None
    label: str = ""


@dataclass(frozen=True, eq=False)
class KnownTermsSpec:
    """Partial knowledge of the dynamics as a sum of known/unknown factor pairs."""

    factors: tuple[KnownFactor, ...]

    @property
    def size(self) -> int:
        return len(self.factors)


@dataclass(frozen=True, eq=False)
class SideInfo:
    """Everything known about the dynamics besides the data."""

    lipschitz_f: FloatArray
    lipschitz_g: FloatArray
    weights: FloatArray
    control_exponents: tuple[tuple[int, ...], ...]
    global_bound: float
    state_box: IntervalVector
    control_box: IntervalVector
    known_terms: KnownTermsSpec | None = None
    constraints: tuple[ConstraintSpec, ...] = ()
    f_bounds: IntervalArray | None = None
    g_bounds: IntervalArray | None = None
    jacobian_weight: JacobianWeight = "column"

    def __post_init__(self) -> None:
        lip_f = _vector(self.lipschitz_f, "lipschitz_f")
        weights = _vector(self.weights, "weights")
        lip_g = np.array(self.lipschitz_g, dtype=np.float64)
        exps = tuple(tuple(int(a) for a in alpha) for alpha in self.control_exponents)
        object.__setattr__(self, "lipschitz_f", lip_f)
        object.__setattr__(self, "lipschitz_g", lip_g.reshape(len(exps), lip_f.shape[0]))
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "control_exponents", exps)

        n = lip_f.shape[0]
        m = self.control_box.shape[0]
        if weights.shape != (n,) or self.state_box.shape != (n,):
            raise DimensionMismatch("weights and state box must have the state dimension")
        if any(len(alpha) != m for alpha in exps):
            raise DimensionMismatch("every control exponent needs one entry per control input")
        if len(set(exps)) != len(exps):
            raise ValueError("control exponents must be distinct")
        _nonneg_finite(lip_f, "lipschitz_f")
        _nonneg_finite(self.lipschitz_g, "lipschitz_g")
        if np.any(weights <= 0) or not np.all(np.isfinite(weights)):
            raise ValueError("weights must be finite and positive")
        if not (np.isfinite(self.global_bound) and self.global_bound > 0):
            raise ValueError("global bound M must be finite and positive")
        if self.f_bounds is not None and self.f_bounds.shape != (n,):
            raise DimensionMismatch("f_bounds must have the state dimension")
        if self.g_bounds is not None and self.g_bounds.shape != (len(exps), n):
            raise DimensionMismatch("g_bounds must be (d, n)")
        if self.known_terms is not None:
            for factor in self.known_terms.factors:
                if np.shape(factor.lipschitz_f) != (n,) or np.shape(factor.lipschitz_g) != (
                    len(exps),
                    n,
                ):
                    raise DimensionMismatch("known factor Lipschitz bounds have the wrong shape")

    @property
    def n(self) -> int:
        return int(self.lipschitz_f.shape[0])

    @property
    def m(self) -> int:
        return int(self.control_box.shape[0])

    @property
    def d(self) -> int:
        return len(self.control_exponents)

    def with_constraints(self, constraints: Sequence[ConstraintSpec]) -> SideInfo:
        return replace(self, constraints=tuple(constraints))

    def with_known_terms(self, known: KnownTermsSpec | None) -> SideInfo:
        return replace(self, known_terms=known)
