"""The data-driven differential inclusion xdot ∈ h(x, u).

h(A, u) = F(A) + sum_p G_p(A) * u[alpha^p], where F and G enclose the unknown terms over
the box A. With known terms the inclusion keeps both the plain model and the factored
model and intersects their enclosures; both are sound, so the intersection is too.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence

import numpy as np

from inclusion_mpc.errors import DimensionMismatch, EmptyAfterContraction, EmptyEnvelope
from inclusion_mpc.inclusion.constraints import apply_algebraic_contraction
from inclusion_mpc.inclusion.contract import control_monomials
from inclusion_mpc.inclusion.envelope import EnvelopeModel, EnvelopeSet, evaluate
from inclusion_mpc.inclusion.refine import RefineOptions, refine
from inclusion_mpc.inclusion.side import SideInfo
from inclusion_mpc.interval import IntervalArray, IntervalVector
from inclusion_mpc.models import DataPoint, Dataset

logger = logging.getLogger(__name__)


class DiffInclusion:
    """Snapshot of the inclusion; `refined` returns a new snapshot."""

    def __init__(self, side: SideInfo, envelopes: Sequence[EnvelopeSet]):
        if not envelopes:
            raise ValueError("a differential inclusion needs at least one envelope set")
        self.side = side
        self.envelopes = tuple(envelopes)

    @classmethod
    def seeded(cls, side: SideInfo) -> DiffInclusion:
        """Inclusion before any data: global bounds only."""
        x0 = side.state_box.mid()
        envs = [EnvelopeSet.seeded(EnvelopeModel.lipschitz(side), x0)]
        if side.known_terms is not None:
            envs.append(EnvelopeSet.seeded(EnvelopeModel.factored(side), x0))
        return cls(side, envs)

    @classmethod
    def from_data(
        cls, side: SideInfo, data: Dataset, options: RefineOptions | None = None
    ) -> DiffInclusion:
        di = cls.seeded(side)
        for index, point in enumerate(data):
            di = di.refined(point, data, sample_index=index, options=options)
        return di

    @property
    def envelope(self) -> EnvelopeSet:
        """The plain-model envelope set."""
        return self.envelopes[0]

    @property
    def n(self) -> int:
        return self.side.n

    @property
    def d(self) -> int:
        return self.side.d

    def refined(
        self,
        dp: DataPoint,
        data: Dataset,
        sample_index: int | None = None,
        options: RefineOptions | None = None,
    ) -> DiffInclusion:
        envs = [refine(dp, env, data, sample_index, options) for env in self.envelopes]
        return DiffInclusion(self.side, envs)

    def mean_width(self) -> float:
        return min(env.mean_width() for env in self.envelopes)

    # -- enclosures of the unknown terms --------------------------------------------

    def terms(self, boxes: IntervalArray) -> tuple[IntervalArray, IntervalArray]:
        """Enclosures of f and g over boxes (Q, n): shapes (Q, n) and (Q, d, n)."""
        if boxes.ndim != 2 or boxes.shape[1] != self.n:
            raise DimensionMismatch(f"boxes must be (Q, {self.n}), got {boxes.shape}")
        total_f: IntervalArray | None = None
        total_g: IntervalArray | None = None
        for env in self.envelopes:
            layer_f, layer_g = evaluate(env, boxes)
            coef_f, coef_g = env.model.coefficients(boxes)
            enc_f = (coef_f * layer_f).sum(axis=1)
            enc_g = (coef_g * layer_g).sum(axis=1)
            total_f = enc_f if total_f is None else total_f.intersect(enc_f)
            total_g = enc_g if total_g is None else total_g.intersect(enc_g)
        assert total_f is not None and total_g is not None
        if total_f.any_empty() or total_g.any_empty():
            raise EmptyEnvelope("plain and factored enclosures do not overlap")
        return self._box_constraints(boxes, total_f, total_g)

    def _box_constraints(
        self, boxes: IntervalArray, enc_f: IntervalArray, enc_g: IntervalArray
    ) -> tuple[IntervalArray, IntervalArray]:
        if not self.side.constraints:
            return enc_f, enc_g
        try:
            out = apply_algebraic_contraction(
                {"f": enc_f, "g": enc_g},
                self.side.constraints,
                context={"x": boxes},
                site="box",
                batched=True,
            )
        except EmptyAfterContraction as e:
            raise EmptyEnvelope(f"constraints reject the enclosure: {e.detail}") from e
        return out["f"], out["g"]

    def jacobians(self, box: IntervalVector) -> tuple[IntervalArray, IntervalArray]:
        """Entrywise enclosures of df/dx (n, n) and dg_p/dx (d, n, n) over a box."""
        boxes = box.reshape(1, self.n)
        total_jf: IntervalArray | None = None
        total_jg: IntervalArray | None = None
        for env in self.envelopes:
            model = env.model
            lip_jf, lip_jg = model.lipschitz_jacobians()  # (S, n, n), (S, d, n, n)
            if model.known is None:
                jf = lip_jf[0]
                jg = lip_jg[0]
            else:
                layer_f, layer_g = evaluate(env, boxes)  # (1, S, n), (1, S, d, n)
                coef_f, coef_g = model.coefficients(boxes)
                dcoef_f, dcoef_g = model.coefficient_jacobians(boxes)
                jf = (
                    dcoef_f[0] * layer_f[0].reshape(model.layers, model.n, 1)
                    + coef_f[0].reshape(model.layers, model.n, 1) * lip_jf
                ).sum(axis=0)
                jg = (
                    dcoef_g[0] * layer_g[0].reshape(model.layers, model.d, model.n, 1)
                    + coef_g[0].reshape(model.layers, model.d, model.n, 1) * lip_jg
                ).sum(axis=0)
            total_jf = jf if total_jf is None else total_jf.intersect(jf)
            total_jg = jg if total_jg is None else total_jg.intersect(jg)
        assert total_jf is not None and total_jg is not None
        if total_jf.any_empty() or total_jg.any_empty():
            raise EmptyEnvelope("plain and factored Jacobian enclosures do not overlap")
        return self._jacobian_constraints(boxes, total_jf, total_jg)

    def _jacobian_constraints(
        self, boxes: IntervalArray, jf: IntervalArray, jg: IntervalArray
    ) -> tuple[IntervalArray, IntervalArray]:
        if not any("jf" in c.tags or "jg" in c.tags for c in self.side.constraints):
            return jf, jg
        enc_f, enc_g = self.terms(boxes)
        try:
            out = apply_algebraic_contraction(
                {"jf": jf.reshape(1, *jf.shape), "jg": jg.reshape(1, *jg.shape)},
                self.side.constraints,
                context={"x": boxes, "f": enc_f, "g": enc_g},
                site="jacobian",
                batched=True,
            )
        except EmptyAfterContraction as e:
            raise EmptyEnvelope(f"constraints reject the Jacobian enclosure: {e.detail}") from e
        return out["jf"][0], out["jg"][0]

    # -- the inclusion ----------------------------------------------------------------

    def eval_batch(self, boxes: IntervalArray, controls: IntervalArray) -> IntervalArray:
        """h over boxes (Q, n) and control boxes (Q, m) or (m,)."""
        enc_f, enc_g = self.terms(boxes)
        q = boxes.shape[0]
        u = controls.broadcast_to((q, self.side.m))
        mu = control_monomials(u, self.side.control_exponents)  # (Q, d)
        return enc_f + (enc_g * mu.reshape(q, self.d, 1)).sum(axis=1) if self.d else enc_f

    def eval(self, box: IntervalVector, u: IntervalVector | np.ndarray) -> IntervalVector:
        controls = u if isinstance(u, IntervalArray) else IntervalArray.point(u)
        out = self.eval_batch(box.reshape(1, self.n), controls.reshape(1, self.side.m))[0]
        assert isinstance(out, IntervalVector)
        return out


def inclusion_eval(
    di: DiffInclusion, box: IntervalVector, u: IntervalVector | np.ndarray
) -> IntervalVector:
    """Enclosure of xdot over the state box for every control in u."""
    return di.eval(box, u)
