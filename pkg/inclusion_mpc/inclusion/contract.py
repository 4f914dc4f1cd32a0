"""Forward-backward contraction of envelope enclosures against derivative samples.

A sample (x, xdot, u) states that xdot_k = sum_j c_j * z_j, where z_j runs over the unknown
terms at x (f_k, then g_{1,k}, ..., g_{d,k}; one group per known-factor layer) and c_j are
their known multipliers (1 or the known factor for f, u[alpha^p] times the known factor
for g). One forward pass builds suffix sums of the terms, one backward pass projects the
measured sum onto every term in turn.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence

import numpy as np

from inclusion_mpc.errors import InconsistentData
from inclusion_mpc.inclusion.side import SideInfo
from inclusion_mpc.interval import (
    BoolArray,
    IntervalArray,
    IntervalMatrix,
    IntervalVector,
    monomial_ext,
)
from inclusion_mpc.models import DataPoint

logger = logging.getLogger(__name__)


def control_monomials(u: IntervalArray, exponents: Sequence[Sequence[int]]) -> IntervalArray:
    """Interval values u[alpha^p] stacked along a new last axis: (..., m) -> (..., d)."""
    if not exponents:
        return IntervalArray.full((*u.shape[:-1], 0), 0.0, 0.0)
    return IntervalArray.stack([monomial_ext(u, alpha) for alpha in exponents], axis=-1)


def contract_sum(
    target: IntervalArray,
    coefficients: IntervalArray,
    domains: IntervalArray,
    sample_ids: Sequence[int] | None = None,
) -> IntervalArray:
    """Contract domains z_j under target = sum_j coefficients_j * z_j.

    Shapes: target (B, n), coefficients and domains (B, J, n). Terms whose coefficient
    interval contains zero keep their domain. Raises InconsistentData naming the first
    sample whose constraint has no solution.
    """
    j_count = domains.shape[1]
    terms = [coefficients[:, j] * domains[:, j] for j in range(j_count)]

    rest: list[IntervalArray] = [IntervalArray.full(target.shape, 0.0, 0.0)] * j_count
    for j in range(j_count - 2, -1, -1):
        rest[j] = rest[j + 1] + terms[j + 1]

    total = target.intersect(terms[0] + rest[0]) if j_count else target
    bad: BoolArray = np.any(total.is_empty(), axis=-1)

    out_lo = domains.lo.copy()
    out_hi = domains.hi.copy()
    for j in range(j_count):
        term = (total - rest[j]).intersect(terms[j])
        bad |= np.any(term.is_empty(), axis=-1)
        coef = coefficients[:, j]
        zero = coef.contains(0.0)
        safe_coef = IntervalArray.choose(zero, 1.0, coef)
        projected = domains[:, j].intersect(term / safe_coef)
        contracted = IntervalArray.choose(zero, domains[:, j], projected)
        bad |= np.any(contracted.is_empty(), axis=-1)
        out_lo[:, j] = contracted.lo
        out_hi[:, j] = contracted.hi
        total = (total - term).intersect(rest[j])
        bad |= np.any(total.is_empty(), axis=-1)

    if np.any(bad):
        first = int(np.argmax(bad))
        index = first if sample_ids is None else int(sample_ids[first])
        raise InconsistentData(
            "measurement is inconsistent with the declared side information", index
        )
    return IntervalArray._trusted(out_lo, out_hi)


def contract_layers(
    xdot: IntervalArray,
    mu: IntervalArray,
    coef_f: IntervalArray,
    coef_g: IntervalArray,
    values_f: IntervalArray,
    values_g: IntervalArray,
    sample_ids: Sequence[int] | None = None,
) -> tuple[IntervalArray, IntervalArray]:
    """Batched contraction of layered unknowns.

    xdot (B, n), mu (B, d), coef_f and values_f (B, S, n), coef_g and values_g (B, S, d, n).
    Term order is every f-layer, then for each monomial p its g-layers.
    """
    b, s, d, n = values_g.shape
    g_coef = coef_g * mu.reshape(b, 1, d, 1)
    coefficients = IntervalArray._trusted(
        np.concatenate([coef_f.lo, _monomial_major(g_coef.lo, b, s, d, n)], axis=1),
        np.concatenate([coef_f.hi, _monomial_major(g_coef.hi, b, s, d, n)], axis=1),
    )
    domains = IntervalArray._trusted(
        np.concatenate([values_f.lo, _monomial_major(values_g.lo, b, s, d, n)], axis=1),
        np.concatenate([values_f.hi, _monomial_major(values_g.hi, b, s, d, n)], axis=1),
    )
    out = contract_sum(xdot, coefficients, domains, sample_ids)
    new_f = out[:, :s]
    g_lo = out.lo[:, s:].reshape(b, d, s, n).transpose(0, 2, 1, 3)
    g_hi = out.hi[:, s:].reshape(b, d, s, n).transpose(0, 2, 1, 3)
    return new_f, IntervalArray._trusted(g_lo, g_hi)


def _monomial_major(arr: np.ndarray, b: int, s: int, d: int, n: int) -> np.ndarray:
    return arr.transpose(0, 2, 1, 3).reshape(b, d * s, n)


def contract_datapoint(
    dp: DataPoint,
    f_enc: IntervalVector,
    g_enc: IntervalMatrix,
    side: SideInfo,
    sample_index: int | None = None,
) -> tuple[IntervalVector, IntervalMatrix]:
    """Tightest enclosures of f(dp.x) and g(dp.x) consistent with one sample.

    When u[alpha^p] = 0 the p-th row of `g_enc` comes back unchanged.
    """
    n, d = side.n, side.d
    u = IntervalArray.point(dp.u).reshape(1, side.m)
    mu = control_monomials(u, side.control_exponents)
    ones_f = IntervalArray.full((1, 1, n), 1.0, 1.0)
    ones_g = IntervalArray.full((1, 1, d, n), 1.0, 1.0)
    new_f, new_g = contract_layers(
        dp.xdot_interval().reshape(1, n),
        mu,
        ones_f,
        ones_g,
        f_enc.reshape(1, 1, n),
        g_enc.reshape(1, 1, d, n),
        sample_ids=None if sample_index is None else [sample_index],
    )
    cf = new_f[0, 0]
    cg = new_g[0, 0]
    assert isinstance(cf, IntervalVector) and isinstance(cg, IntervalMatrix)
    return cf, cg
