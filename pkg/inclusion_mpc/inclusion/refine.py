"""Building and tightening envelope sets from data.

`construct` seeds an envelope set and folds `refine` over a dataset. `refine` contracts
the new sample against the current envelope, appends it, then sweeps every stored
record against the whole set until no relative width shrinks by more than the sweep
tolerance.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from inclusion_mpc.errors import (
    EmptyAfterContraction,
    EmptyEnvelope,
    InconsistentData,
    MaxSweepsExceeded,
)
from inclusion_mpc.inclusion.constraints import apply_algebraic_contraction
from inclusion_mpc.inclusion.contract import contract_layers, control_monomials
from inclusion_mpc.inclusion.envelope import (
    EnvelopeModel,
    EnvelopeSet,
    RefineReport,
    SampleContext,
    evaluate,
)
from inclusion_mpc.inclusion.side import SideInfo
from inclusion_mpc.interval import IntervalArray
from inclusion_mpc.models import DataPoint, Dataset

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RefineOptions:
    """Sweep and window settings for refinement."""

    max_sweeps: int = 20
    sweep_tol: float = 1e-6
    strict_sweeps: bool = False
    max_records: int | None = None

    def __post_init__(self) -> None:
        if self.max_sweeps < 1:
            raise ValueError("max_sweeps must be at least 1")
        if self.max_records is not None and self.max_records < 1:
            raise ValueError("max_records must be at least 1")


def construct(
    data: Dataset,
    side: SideInfo,
    model: EnvelopeModel | None = None,
    options: RefineOptions | None = None,
) -> EnvelopeSet:
    """Seed at the midpoint of the state box, then refine with every sample in order."""
    model = model or EnvelopeModel.lipschitz(side)
    env = EnvelopeSet.seeded(model, side.state_box.mid())
    for index, point in enumerate(data):
        env = refine(point, env, data, sample_index=index, options=options)
    return env


def refine(
    dp: DataPoint,
    env: EnvelopeSet,
    data: Dataset,
    sample_index: int | None = None,
    options: RefineOptions | None = None,
) -> EnvelopeSet:
    """Add one sample to the envelope set and tighten all records to a fixpoint.

    `dp` is expected to be in `data` already; its index defaults to the last position.
    Returns a new snapshot; `env` is left untouched.
    """
    options = options or RefineOptions()
    index = len(data) - 1 if sample_index is None else sample_index
    model = env.model
    n = model.n

    box = IntervalArray.point(dp.x).reshape(1, n)
    try:
        enc_f, enc_g = evaluate(env, box)
    except EmptyEnvelope as e:
        raise InconsistentData(str(e.detail), index) from e

    coef_f, coef_g = model.coefficients(box)
    xdot = dp.xdot_interval().reshape(1, n)
    mu = control_monomials(IntervalArray.point(dp.u).reshape(1, dp.m), model.exponents)
    new_f, new_g = contract_layers(xdot, mu, coef_f, coef_g, enc_f, enc_g, [index])
    new_f, new_g = _apply_record_constraints(
        model, new_f, new_g, dp.x[None, :], dp.u[None, :], xdot, [index]
    )

    row = SampleContext(
        xdot=xdot,
        u=dp.u[None, :].copy(),
        mu=mu,
        coef_f=coef_f,
        coef_g=coef_g,
        sample_ids=np.array([index], dtype=np.int64),
    )
    out = env.with_record(dp.x, new_f[0], new_g[0], row)
    if options.max_records is not None and out.data_count > options.max_records:
        out = out.without_oldest()
    return sweep_to_fixpoint(out, options)


def sweep_to_fixpoint(env: EnvelopeSet, options: RefineOptions | None = None) -> EnvelopeSet:
    """Repeat full contraction sweeps over the data records until they stop shrinking."""
    options = options or RefineOptions()
    decrease = 0.0
    for sweep in range(1, options.max_sweeps + 1):
        env, decrease = _sweep(env)
        if decrease < options.sweep_tol:
            logger.debug(f"Refinement settled after {sweep} sweeps")
            env.report = RefineReport(sweeps=sweep, capped=False, last_decrease=decrease)
            return env

    message = (
        f"refinement still shrinking by {decrease:.3g} after {options.max_sweeps} sweeps"
    )
    if options.strict_sweeps:
        raise MaxSweepsExceeded(message)
    logger.warning(message)
    env.report = RefineReport(sweeps=options.max_sweeps, capped=True, last_decrease=decrease)
    return env


def _sweep(env: EnvelopeSet) -> tuple[EnvelopeSet, float]:
    """One Jacobi sweep: every data record contracted against the snapshot at sweep start."""
    ctx = env.context
    if ctx is None:
        return env, 0.0
    model = env.model
    points = env.points[1:]
    try:
        enc_f, enc_g = evaluate(env, IntervalArray.point(points))
    except EmptyEnvelope as e:
        data_records = [i for i in e.record_indices if i > 0]
        culprit = int(ctx.sample_ids[max(data_records) - 1]) if data_records else None
        raise InconsistentData(str(e.detail), culprit) from e

    new_f, new_g = contract_layers(
        ctx.xdot, ctx.mu, ctx.coef_f, ctx.coef_g, enc_f, enc_g, ctx.sample_ids.tolist()
    )
    new_f, new_g = _apply_record_constraints(
        model, new_f, new_g, points, ctx.u, ctx.xdot, ctx.sample_ids.tolist()
    )
    decrease = max(
        _relative_decrease(env.values_f[1:], new_f),
        _relative_decrease(env.values_g[1:], new_g),
    )
    return env.with_data_values(new_f, new_g), decrease


def _relative_decrease(before: IntervalArray, after: IntervalArray) -> float:
    old = before.width()
    new = after.width()
    with np.errstate(all="ignore"):
        rel = np.where(old > 0, (old - new) / old, 0.0)
    rel = np.where(np.isfinite(rel), rel, 0.0)
    return float(np.max(rel, initial=0.0))


def _apply_record_constraints(
    model: EnvelopeModel,
    values_f: IntervalArray,
    values_g: IntervalArray,
    x: np.ndarray,
    u: np.ndarray,
    xdot: IntervalArray,
    sample_ids: list[int],
) -> tuple[IntervalArray, IntervalArray]:
    """Constraints on the totals f, g apply to plain-model records only."""
    if model.kind != "lipschitz" or not model.constraints:
        return values_f, values_g
    b = values_f.shape[0]
    try:
        out = apply_algebraic_contraction(
            {"f": values_f.reshape(b, model.n), "g": values_g.reshape(b, model.d, model.n)},
            model.constraints,
            context={"x": x, "u": u, "xdot": xdot},
            site="record",
            batched=True,
        )
    except EmptyAfterContraction as e:
        culprit = sample_ids[0] if len(sample_ids) == 1 else None
        raise InconsistentData(str(e.detail), culprit) from e
    return (
        out["f"].reshape(b, 1, model.n),
        out["g"].reshape(b, 1, model.d, model.n),
    )
