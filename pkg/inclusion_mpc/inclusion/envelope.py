"""Envelope records and envelope evaluation.

An envelope set stores, for every sampled state x^i, enclosures of the unknown terms at
x^i. Together with the Lipschitz bounds they enclose the unknown terms anywhere:

    f_k(A) ⊆ ⋂_i CF^i_k + [-1, 1] * Lf_k * eta_w(A - x^i)

and likewise for every g_{p,k}. The same machinery serves the plain model (one layer,
unknowns f and g_p) and the known-terms model (one layer per factor pair, unknowns the
cofactors f^s and g^s_p).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import TYPE_CHECKING, Any, Literal

import numpy as np
from numpy.typing import NDArray

from inclusion_mpc.errors import DimensionMismatch, EmptyEnvelope
from inclusion_mpc.inclusion.side import KnownTermsSpec, SideInfo
from inclusion_mpc.interval import (
    FloatArray,
    IntervalArray,
    IntervalMatrix,
    IntervalVector,
    symmetric,
    weighted_norm_ext,
)

if TYPE_CHECKING:
    from inclusion_mpc.inclusion.constraints import ConstraintSpec

logger = logging.getLogger(__name__)

ModelKind = Literal["lipschitz", "known_terms"]


@dataclass(frozen=True, eq=False)
class EnvelopeModel:
    """Parameters shared by all records of one envelope set.

    Shapes use S layers (1 for the plain model, one per factor pair otherwise), n states
    and d control monomials.
    """

    kind: ModelKind
    weights: FloatArray
    exponents: tuple[tuple[int, ...], ...]
    lipschitz_f: FloatArray  # (S, n)
    lipschitz_g: FloatArray  # (S, d, n)
    bound_f: IntervalArray  # (S, n)
    bound_g: IntervalArray  # (S, d, n)
    jacobian_weight: str = "column"
    known: KnownTermsSpec | None = None
    constraints: tuple[ConstraintSpec, ...] = ()

    @classmethod
    def lipschitz(cls, side: SideInfo) -> EnvelopeModel:
        """Plain model: the unknowns are f and g_p themselves."""
        big = side.global_bound
        bound_f = IntervalArray.full((side.n,), -big, big)
        bound_g = IntervalArray.full((side.d, side.n), -big, big)
        if side.f_bounds is not None:
            bound_f = bound_f.intersect(side.f_bounds)
        if side.g_bounds is not None:
            bound_g = bound_g.intersect(side.g_bounds)
        return cls(
            kind="lipschitz",
            weights=side.weights,
            exponents=side.control_exponents,
            lipschitz_f=side.lipschitz_f.reshape(1, side.n),
            lipschitz_g=side.lipschitz_g.reshape(1, side.d, side.n),
            bound_f=bound_f.reshape(1, side.n),
            bound_g=bound_g.reshape(1, side.d, side.n),
            jacobian_weight=side.jacobian_weight,
            constraints=side.constraints,
        )

    @classmethod
    def factored(cls, side: SideInfo) -> EnvelopeModel:
        """Known-terms model: the unknowns are the cofactors of each known factor."""
        if side.known_terms is None:
            raise ValueError("side information declares no known terms")
        factors = side.known_terms.factors
        big = side.global_bound
        bounds_f, bounds_g = [], []
        for factor in factors:
            bf = IntervalArray.full((side.n,), -big, big)
            bg = IntervalArray.full((side.d, side.n), -big, big)
            bounds_f.append(bf if factor.f_bounds is None else factor.f_bounds)
            bounds_g.append(bg if factor.g_bounds is None else factor.g_bounds)
        return cls(
            kind="known_terms",
            weights=side.weights,
            exponents=side.control_exponents,
            lipschitz_f=np.stack([np.asarray(fac.lipschitz_f, float) for fac in factors]),
            lipschitz_g=np.stack(
                [np.asarray(fac.lipschitz_g, float).reshape(side.d, side.n) for fac in factors]
            ),
            bound_f=IntervalArray.stack(bounds_f),
            bound_g=IntervalArray.stack(bounds_g),
            jacobian_weight=side.jacobian_weight,
            known=side.known_terms,
        )

    @property
    def layers(self) -> int:
        return int(self.lipschitz_f.shape[0])

    @property
    def n(self) -> int:
        return int(self.lipschitz_f.shape[1])

    @property
    def d(self) -> int:
        return len(self.exponents)

    def coefficients(self, boxes: IntervalArray) -> tuple[IntervalArray, IntervalArray]:
        """Known multipliers of each layer over boxes (..., n).

        Returns (..., S, n) and (..., S, d, n); identically one for the plain model.
        """
        batch = boxes.shape[:-1]
        if self.known is None:
            return (
                IntervalArray.full((*batch, 1, self.n), 1.0, 1.0),
                IntervalArray.full((*batch, 1, self.d, self.n), 1.0, 1.0),
            )
        cf = IntervalArray.stack([fac.f_ext(boxes) for fac in self.known.factors], axis=len(batch))
        cg = IntervalArray.stack([fac.g_ext(boxes) for fac in self.known.factors], axis=len(batch))
        return cf, cg

    def coefficient_jacobians(self, boxes: IntervalArray) -> tuple[IntervalArray, IntervalArray]:
        """Jacobians of the known multipliers: (..., S, n, n) and (..., S, d, n, n)."""
        batch = boxes.shape[:-1]
        if self.known is None:
            return (
                IntervalArray.full((*batch, 1, self.n, self.n), 0.0, 0.0),
                IntervalArray.full((*batch, 1, self.d, self.n, self.n), 0.0, 0.0),
            )
        jf = IntervalArray.stack([fac.f_jac(boxes) for fac in self.known.factors], axis=len(batch))
        jg = IntervalArray.stack([fac.g_jac(boxes) for fac in self.known.factors], axis=len(batch))
        return jf, jg

    def lipschitz_jacobians(self) -> tuple[IntervalArray, IntervalArray]:
        """Entrywise Jacobian enclosures of the unknowns implied by the Lipschitz bounds.

        |d f_k / d x_l| <= Lf_k * w_l under the weighted norm; the `row` switch uses w_k.
        Shapes (S, n, n) and (S, d, n, n).
        """
        w = self.weights
        if self.jacobian_weight == "row":
            scale = np.broadcast_to(w[:, None], (self.n, self.n))
        else:
            scale = np.broadcast_to(w[None, :], (self.n, self.n))
        rf = (IntervalArray.point(self.lipschitz_f[:, :, None]) * scale).hi
        rg = (IntervalArray.point(self.lipschitz_g[:, :, :, None]) * scale).hi
        return symmetric(rf), symmetric(rg)


@dataclass(frozen=True)
class RefineReport:
    """Outcome of the sweeps that produced an envelope set."""

    sweeps: int
    capped: bool
    last_decrease: float


@dataclass(frozen=True, eq=False)
class EnvelopeRecord:
    """One stored triple (x^i, CF^i, CG^i) for a single layer."""

    x: FloatArray
    cf: IntervalVector
    cg: IntervalMatrix

    def to_dict(self) -> dict[str, Any]:
        return {"x": self.x.tolist(), "cf": self.cf.to_dict(), "cg": self.cg.to_dict()}


@dataclass(frozen=True, eq=False)
class SampleContext:
    """Measurement context of the data records, used by the contraction sweeps.

    Row r belongs to record r + 1 (record 0 is the seed).
    """

    xdot: IntervalArray  # (K, n)
    u: FloatArray  # (K, m)
    mu: IntervalArray  # (K, d)
    coef_f: IntervalArray  # (K, S, n)
    coef_g: IntervalArray  # (K, S, d, n)
    sample_ids: NDArray[np.int64]  # (K,)

    def __len__(self) -> int:
        return int(self.sample_ids.shape[0])

    def extended(self, other: SampleContext) -> SampleContext:
        def cat(a: IntervalArray, b: IntervalArray) -> IntervalArray:
            return IntervalArray._trusted(
                np.concatenate([a.lo, b.lo]), np.concatenate([a.hi, b.hi])
            )

        return SampleContext(
            xdot=cat(self.xdot, other.xdot),
            u=np.concatenate([self.u, other.u]),
            mu=cat(self.mu, other.mu),
            coef_f=cat(self.coef_f, other.coef_f),
            coef_g=cat(self.coef_g, other.coef_g),
            sample_ids=np.concatenate([self.sample_ids, other.sample_ids]),
        )

    def dropped_first(self) -> SampleContext:
        return SampleContext(
            xdot=self.xdot[1:],
            u=self.u[1:],
            mu=self.mu[1:],
            coef_f=self.coef_f[1:],
            coef_g=self.coef_g[1:],
            sample_ids=self.sample_ids[1:],
        )


class EnvelopeSet:
    """Immutable snapshot of the records of one envelope model.

    Record 0 is the seed (midpoint of the state box, global bounds); records 1.. hold the
    data samples in arrival order.
    """

    def __init__(
        self,
        model: EnvelopeModel,
        points: FloatArray,
        values_f: IntervalArray,
        values_g: IntervalArray,
        context: SampleContext | None = None,
    ):
        k = points.shape[0]
        if values_f.shape != (k, model.layers, model.n) or values_g.shape != (
            k,
            model.layers,
            model.d,
            model.n,
        ):
            raise DimensionMismatch("record values do not match the envelope model")
        if context is not None and len(context) != k - 1:
            raise DimensionMismatch("sample context must cover every data record")
        self.model = model
        self.points = np.array(points, dtype=np.float64)
        self.points.setflags(write=False)
        self.values_f = values_f
        self.values_g = values_g
        self.context = context
        self.report: RefineReport | None = None

    @classmethod
    def seeded(cls, model: EnvelopeModel, x0: FloatArray) -> EnvelopeSet:
        point = np.asarray(x0, dtype=np.float64).reshape(1, model.n)
        return cls(
            model,
            point,
            model.bound_f.reshape(1, model.layers, model.n),
            model.bound_g.reshape(1, model.layers, model.d, model.n),
        )

    def __len__(self) -> int:
        return int(self.points.shape[0])

    @property
    def data_count(self) -> int:
        return len(self) - 1

    def record(self, i: int, layer: int = 0) -> EnvelopeRecord:
        return EnvelopeRecord(
            x=self.points[i].copy(),
            cf=self.values_f[i, layer],
            cg=self.values_g[i, layer],
        )

    def records(self, layer: int = 0) -> list[EnvelopeRecord]:
        return [self.record(i, layer) for i in range(len(self))]

    def with_record(
        self, point: FloatArray, f: IntervalArray, g: IntervalArray, row: SampleContext
    ) -> EnvelopeSet:
        points = np.vstack([self.points, np.asarray(point, dtype=np.float64)[None, :]])
        values_f = IntervalArray._trusted(
            np.concatenate([self.values_f.lo, f.lo[None]]),
            np.concatenate([self.values_f.hi, f.hi[None]]),
        )
        values_g = IntervalArray._trusted(
            np.concatenate([self.values_g.lo, g.lo[None]]),
            np.concatenate([self.values_g.hi, g.hi[None]]),
        )
        context = row if self.context is None else self.context.extended(row)
        return EnvelopeSet(self.model, points, values_f, values_g, context)

    def with_data_values(self, f: IntervalArray, g: IntervalArray) -> EnvelopeSet:
        """Replace the values of the data records (all but the seed)."""
        values_f = IntervalArray._trusted(
            np.concatenate([self.values_f.lo[:1], f.lo]),
            np.concatenate([self.values_f.hi[:1], f.hi]),
        )
        values_g = IntervalArray._trusted(
            np.concatenate([self.values_g.lo[:1], g.lo]),
            np.concatenate([self.values_g.hi[:1], g.hi]),
        )
        return EnvelopeSet(self.model, self.points, values_f, values_g, self.context)

    def without_oldest(self) -> EnvelopeSet:
        """Evict the oldest data record; the seed is kept."""
        if self.context is None or self.data_count == 0:
            return self
        keep = np.r_[0, np.arange(2, len(self))]
        context = self.context.dropped_first() if self.data_count > 1 else None
        return EnvelopeSet(
            self.model, self.points[keep], self.values_f[keep], self.values_g[keep], context
        )

    def mean_width(self) -> float:
        """Mean width over the data records' f and g enclosures (seed excluded)."""
        if self.data_count == 0:
            return float("inf")
        widths = np.concatenate(
            [self.values_f[1:].width().ravel(), self.values_g[1:].width().ravel()]
        )
        return float(widths.mean()) if widths.size else 0.0

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": self.model.kind,
            "points": self.points.tolist(),
            "f": self.values_f.to_dict(),
            "g": self.values_g.to_dict(),
            "sample_ids": [] if self.context is None else self.context.sample_ids.tolist(),
        }


def evaluate(env: EnvelopeSet, boxes: IntervalArray) -> tuple[IntervalArray, IntervalArray]:
    """Batched envelope evaluation over boxes of shape (Q, n).

    Returns enclosures of the unknowns of every layer, shapes (Q, S, n) and (Q, S, d, n).
    Raises EmptyEnvelope when the intersection over the records empties.
    """
    model = env.model
    if boxes.ndim != 2 or boxes.shape[1] != model.n:
        raise DimensionMismatch(f"boxes must be (Q, {model.n}), got {boxes.shape}")
    q, k = boxes.shape[0], len(env)
    s, d, n = model.layers, model.d, model.n

    diff = boxes.reshape(q, 1, n) - env.points[None, :, :]
    eta = weighted_norm_ext(diff, model.weights).hi  # (Q, K)
    eta_iv = IntervalArray.point(eta)

    radius_f = (eta_iv.reshape(q, k, 1, 1) * model.lipschitz_f[None, None]).hi
    terms_f = env.values_f.reshape(1, k, s, n) + symmetric(radius_f)
    enc_f = terms_f.meet(axis=1).intersect(model.bound_f)

    radius_g = (eta_iv.reshape(q, k, 1, 1, 1) * model.lipschitz_g[None, None]).hi
    terms_g = env.values_g.reshape(1, k, s, d, n) + symmetric(radius_g)
    enc_g = terms_g.meet(axis=1).intersect(model.bound_g)

    if enc_f.any_empty() or enc_g.any_empty():
        culprits = _empty_culprits(terms_f, enc_f) | _empty_culprits(terms_g, enc_g)
        raise EmptyEnvelope("envelope intersection is empty", sorted(culprits))
    return enc_f, enc_g


def _empty_culprits(terms: IntervalArray, enclosure: IntervalArray) -> set[int]:
    empty = enclosure.is_empty()
    if not np.any(empty):
        return set()
    lo_arg = np.argmax(terms.lo, axis=1)[empty]
    hi_arg = np.argmin(terms.hi, axis=1)[empty]
    return {int(i) for i in np.concatenate([lo_arg, hi_arg])}


def envelope_eval(
    env: EnvelopeSet, box: IntervalVector, layer: int = 0
) -> tuple[IntervalVector, IntervalMatrix]:
    """Enclosures of the unknowns of one layer over a single box.

    For the plain model these are f(A) and g(A) directly.
    """
    enc_f, enc_g = evaluate(env, box.reshape(1, box.shape[0]))
    f_out = enc_f[0, layer]
    g_out = enc_g[0, layer]
    assert isinstance(f_out, IntervalVector) and isinstance(g_out, IntervalMatrix)
    return f_out, g_out
