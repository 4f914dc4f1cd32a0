"""Task costs for the builtin environments."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from inclusion_mpc.errors import DimensionMismatch
from inclusion_mpc.interval import FloatArray, IntervalVector


@dataclass(frozen=True, eq=False)
class QuadraticCost:
    """c(x, u, x+) = (x+ - target)' diag(q) (x+ - target) + r * |u|^2.

    `lc` is a Lipschitz constant of c under the 2-norm on X × U × X, taken from the
    largest gradient over the domain boxes.
    """

    state_weights: FloatArray
    control_weight: float
    target: FloatArray
    lc: float

    def __post_init__(self) -> None:
        q = np.array(self.state_weights, dtype=np.float64)
        t = np.array(self.target, dtype=np.float64)
        if q.ndim != 1 or t.shape != q.shape:
            raise DimensionMismatch("state weights and target must be vectors of one length")
        if np.any(q < 0) or self.control_weight < 0 or self.lc < 0:
            raise ValueError("cost weights and Lc must be nonnegative")
        object.__setattr__(self, "state_weights", q)
        object.__setattr__(self, "target", t)

    @classmethod
    def for_boxes(
        cls,
        state_box: IntervalVector,
        control_box: IntervalVector,
        state_weights: Sequence[float] | FloatArray,
        control_weight: float,
        target: Sequence[float] | FloatArray,
    ) -> QuadraticCost:
        q = np.asarray(state_weights, dtype=np.float64)
        t = np.asarray(target, dtype=np.float64)
        reach = np.maximum(np.abs(state_box.lo - t), np.abs(state_box.hi - t))
        u_max = np.maximum(np.abs(control_box.lo), np.abs(control_box.hi))
        grad_x = 2.0 * q * reach
        grad_u = 2.0 * control_weight * u_max
        lc = float(np.sqrt(np.sum(grad_x**2) + np.sum(grad_u**2)))
        return cls(state_weights=q, control_weight=control_weight, target=t, lc=lc)

    def c(self, x: FloatArray, u: FloatArray, x_next: FloatArray) -> float:
        e = np.asarray(x_next, dtype=np.float64) - self.target
        uu = np.asarray(u, dtype=np.float64)
        return float(e @ (self.state_weights * e) + self.control_weight * (uu @ uu))

    def grad(
        self, x: FloatArray, u: FloatArray, x_next: FloatArray
    ) -> tuple[FloatArray, FloatArray, FloatArray]:
        e = np.asarray(x_next, dtype=np.float64) - self.target
        return (
            np.zeros_like(np.asarray(x, dtype=np.float64)),
            2.0 * self.control_weight * np.asarray(u, dtype=np.float64),
            2.0 * self.state_weights * e,
        )

    def batch(self, u: FloatArray, x_next: FloatArray) -> FloatArray:
        """Vectorised stage cost over leading axes."""
        e = x_next - self.target
        return np.sum(self.state_weights * e * e, axis=-1) + self.control_weight * np.sum(
            u * u, axis=-1
        )
