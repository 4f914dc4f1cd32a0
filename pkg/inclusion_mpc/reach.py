"""Validated one-step reachability for the differential inclusion.

A step from the box R under control u over dt first finds a rough enclosure P of every
trajectory on [0, dt] (Picard fixpoint R + [0, dt] h(P, u) ⊆ P), then takes the
second-order Taylor step

    R' = R + h(R, u) dt + (Jf + sum_p Jg_p u[alpha^p]) h(P, u) dt^2 / 2

with the Jacobian enclosures taken over P.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass
from typing import Any

import numpy as np

from inclusion_mpc.errors import EmptyEnvelope, EnclosureFailure
from inclusion_mpc.inclusion.contract import control_monomials
from inclusion_mpc.inclusion.differential import DiffInclusion
from inclusion_mpc.interval import FloatArray, Interval, IntervalArray, IntervalVector

logger = logging.getLogger(__name__)

PICARD_MAX_ITERS = 30
INFLATE_REL = 0.05
INFLATE_ABS = 1e-9
TIGHTEN_MAX_ITERS = 10
TIGHTEN_TOL = 1e-12

Control = IntervalVector | FloatArray


@dataclass(frozen=True, eq=False)
class ReachStep:
    """Result of one validated step."""

    r_next: IntervalVector
    p: IntervalVector
    jf: IntervalArray
    jg: IntervalArray
    dt: float
    beyond_enclosure: bool = False
    clipped: bool = False

    def to_dict(self) -> dict[str, Any]:
        return {
            "r_next": self.r_next.to_dict(),
            "p": self.p.to_dict(),
            "dt": self.dt,
            "beyond_enclosure": self.beyond_enclosure,
            "clipped": self.clipped,
        }


def _as_control(u: Control) -> IntervalVector:
    out = u if isinstance(u, IntervalArray) else IntervalArray.point(u)
    assert isinstance(out, IntervalVector)
    return out


def _vector(value: IntervalArray) -> IntervalVector:
    assert isinstance(value, IntervalVector)
    return value


def _h(
    di: DiffInclusion, box: IntervalVector, u: IntervalVector, step: int | None
) -> IntervalVector:
    try:
        return di.eval(box, u)
    except EmptyEnvelope as e:
        message = f"inclusion is empty over the candidate box: {e.detail}"
        raise EnclosureFailure(message, step) from e


def jacobian_enclosures(
    di: DiffInclusion, p: IntervalVector, u: Control | None = None
) -> tuple[IntervalArray, IntervalArray]:
    """Enclosures of df/dx (n, n) and dg_p/dx (d, n, n) over P.

    The control does not enter the enclosures; it is accepted so callers can pass a step's
    full context.
    """
    del u
    return di.jacobians(p)


def rough_enclosure(
    di: DiffInclusion, r: IntervalVector, u: Control, dt: float, step: int | None = None
) -> IntervalVector:
    """A box P with R + [0, dt] h(P, u) ⊆ P, inside the state box."""
    if dt < 0:
        raise ValueError("dt must be nonnegative")
    if dt == 0:
        return r
    control = _as_control(u)
    state_box = di.side.state_box
    span = IntervalArray.full(di.n, 0.0, dt)

    p = _vector(r + span * _h(di, r, control, step))
    for iteration in range(1, PICARD_MAX_ITERS + 1):
        if not p.subset(state_box):
            raise EnclosureFailure(
                f"rough enclosure leaves the state box after {iteration} iterations", step
            )
        candidate = _vector(r + span * _h(di, p, control, step))
        if candidate.subset(p):
            logger.debug(f"Rough enclosure validated after {iteration} iterations")
            return _tighten(di, r, control, span, candidate, step)
        p = _vector(p.hull(candidate).inflate(INFLATE_REL, INFLATE_ABS))
    raise EnclosureFailure(
        f"rough enclosure did not validate within {PICARD_MAX_ITERS} iterations", step
    )


def _tighten(
    di: DiffInclusion,
    r: IntervalVector,
    u: IntervalVector,
    span: IntervalArray,
    p: IntervalVector,
    step: int | None,
) -> IntervalVector:
    """Contract a validated enclosure with P <- (R + [0, dt] h(P)) ∩ P."""
    for _ in range(TIGHTEN_MAX_ITERS):
        narrowed = _vector((r + span * _h(di, p, u, step)).intersect(p))
        shrink = float(np.max(p.width() - narrowed.width(), initial=0.0))
        p = narrowed
        if shrink <= TIGHTEN_TOL:
            break
    return p


def _second_order_matrix(
    jf: IntervalArray, jg: IntervalArray, mu: IntervalArray
) -> IntervalArray:
    if jg.shape[0] == 0:
        return jf
    d = jg.shape[0]
    return jf + (jg * mu.reshape(d, 1, 1)).sum(axis=0)


def reach_step(
    di: DiffInclusion, r: IntervalVector, u: Control, dt: float, step: int | None = None
) -> ReachStep:
    """Over-approximation of every state reachable from R after dt under control u."""
    control = _as_control(u)
    p = rough_enclosure(di, r, control, dt, step)
    jf, jg = jacobian_enclosures(di, p, control)
    if dt == 0:
        return ReachStep(r_next=r, p=p, jf=jf, jg=jg, dt=dt)

    h_r = _h(di, r, control, step)
    h_p = _h(di, p, control, step)
    mu = control_monomials(control.reshape(1, di.side.m), di.side.control_exponents)[0]
    jac = _second_order_matrix(jf, jg, mu)
    step_dt = Interval.point(dt)
    half_dt2 = step_dt * step_dt * 0.5
    taylor = _vector(r + h_r * step_dt + (jac @ h_p) * half_dt2)

    beyond = not taylor.subset(p)
    if beyond:
        logger.debug("Taylor step extends beyond the rough enclosure; intersecting")
    r_next = _vector(taylor.intersect(p))
    clipped = not r_next.subset(di.side.state_box)
    if clipped:
        logger.warning(f"Reachable box clipped to the state box at step {step}")
        r_next = _vector(r_next.intersect(di.side.state_box))
    if r_next.any_empty():
        raise EnclosureFailure("reachable box left the state box entirely", step)
    return ReachStep(
        r_next=r_next, p=p, jf=jf, jg=jg, dt=dt, beyond_enclosure=beyond, clipped=clipped
    )


def reach_over_controls(
    di: DiffInclusion, r: IntervalVector, controls: IntervalVector, dt: float, steps: int
) -> list[IntervalVector]:
    """Boxes reachable after 1..steps+1 steps under any control sequence in the box."""
    if steps < 0:
        raise ValueError("steps must be nonnegative")
    boxes: list[IntervalVector] = []
    box = r
    for k in range(steps + 1):
        box = reach_step(di, box, controls, dt, step=k).r_next
        boxes.append(box)
    return boxes


def suboptimality_bound(widths: Sequence[Sequence[float] | FloatArray], lc: float) -> float:
    """Lc * (|w_last| + 2 * sum of |w_q| over the earlier steps), 2-norms of width vectors."""
    if lc < 0:
        raise ValueError("Lc must be nonnegative")
    if not widths:
        return 0.0
    norms = [float(np.linalg.norm(np.asarray(w, dtype=np.float64))) for w in widths]
    return float(lc * (norms[-1] + 2.0 * sum(norms[:-1])))


def tube_to_dict(boxes: Sequence[IntervalArray], dt: float | None = None) -> dict[str, Any]:
    """JSON-ready tube: one lo/hi pair per box."""
    return {
        "dt": dt,
        "boxes": [box.to_dict() for box in boxes],
    }
