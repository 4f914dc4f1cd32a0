"""Interval arithmetic with outward rounding.

Scalars are `Interval`; arrays of any shape are `IntervalArray`, with the
`IntervalVector` (1-D) and `IntervalMatrix` (2-D) specialisations used throughout the
package. Endpoints live in numpy arrays so envelope evaluation can run batched.

Every primitive rounds its lower endpoint down and its upper endpoint up. Sums and
products use error-free transforms (TwoSum, Veltkamp/Dekker TwoProduct) to decide the
rounding direction, so results that are exactly representable stay exact; everything
else moves one unit in the last place outward. Transcendental primitives are widened by
two units in the last place to cover libm error.
"""

from __future__ import annotations

import math
from collections.abc import Iterator, Sequence
from dataclasses import dataclass
from typing import Any, Literal

import numpy as np
from numpy.typing import ArrayLike, NDArray

from inclusion_mpc.errors import DimensionMismatch, DivisionByZeroInterval, IntervalError

FloatArray = NDArray[np.float64]
BoolArray = NDArray[np.bool_]
Pair = tuple[FloatArray, FloatArray]

_SPLITTER = 134217729.0  # 2**27 + 1
_TINY = 1e-280
_TWO_PI = 2.0 * math.pi
_TRIG_LIMIT = 1e8

ArithOp = Literal["add", "sub", "mul", "div"]
SetOp = Literal["intersect", "hull", "contains", "subset"]


# ---------------------------------------------------------------------------
# Endpoint kernels on (lo, hi) numpy pairs
# ---------------------------------------------------------------------------


def _f(x: ArrayLike) -> FloatArray:
    return np.asarray(x, dtype=np.float64)


def _down(x: FloatArray) -> FloatArray:
    return np.nextafter(x, -np.inf)


def _up(x: FloatArray) -> FloatArray:
    return np.nextafter(x, np.inf)


def _widen_down(x: FloatArray, ulps: int) -> FloatArray:
    for _ in range(ulps):
        x = _down(x)
    return x


def _widen_up(x: FloatArray, ulps: int) -> FloatArray:
    for _ in range(ulps):
        x = _up(x)
    return x


def _two_sum_err(a: FloatArray, b: FloatArray, s: FloatArray) -> FloatArray:
    bb = s - a
    return (a - (s - bb)) + (b - bb)


def _split(a: FloatArray) -> Pair:
    c = _SPLITTER * a
    high = c - (c - a)
    return high, a - high


def _two_prod_err(a: FloatArray, b: FloatArray, p: FloatArray) -> FloatArray:
    ah, al = _split(a)
    bh, bl = _split(b)
    return ((ah * bh - p) + ah * bl + al * bh) + al * bl


def _directed(value: FloatArray, err: FloatArray, unsure: BoolArray | None = None) -> Pair:
    """Bracket `value + err`, nudging outward wherever the error is unknown."""
    doubt = ~np.isfinite(err)
    if unsure is not None:
        doubt = doubt | unsure
    lo = np.where(doubt | (err < 0), _down(value), value)
    hi = np.where(doubt | (err > 0), _up(value), value)
    return lo, hi


@np.errstate(all="ignore")
def _sum_down(a: FloatArray, b: FloatArray) -> FloatArray:
    s = a + b
    return _directed(s, _two_sum_err(a, b, s))[0]


@np.errstate(all="ignore")
def _sum_up(a: FloatArray, b: FloatArray) -> FloatArray:
    s = a + b
    return _directed(s, _two_sum_err(a, b, s))[1]


@np.errstate(all="ignore")
def _product(a: FloatArray, b: FloatArray) -> Pair:
    p = a * b
    zero = np.isnan(p) & ((a == 0) | (b == 0))
    p = np.where(zero, 0.0, p)
    err = np.where(zero, 0.0, _two_prod_err(a, b, p))
    tiny = (np.abs(p) < _TINY) & (a != 0) & (b != 0)
    return _directed(p, err, tiny)


def _prod_down(a: FloatArray, b: FloatArray) -> FloatArray:
    return _product(a, b)[0]


def _prod_up(a: FloatArray, b: FloatArray) -> FloatArray:
    return _product(a, b)[1]


@np.errstate(all="ignore")
def _quotient(a: FloatArray, b: FloatArray) -> Pair:
    q = a / b
    p = q * b
    exact = (p == a) & (_two_prod_err(q, b, p) == 0) & np.isfinite(q)
    exact &= (np.abs(q) >= _TINY) | (q == 0)
    lo = np.where(exact, q, _down(q))
    hi = np.where(exact, q, _up(q))
    return np.where(np.isnan(lo), -np.inf, lo), np.where(np.isnan(hi), np.inf, hi)


def _add(alo: FloatArray, ahi: FloatArray, blo: FloatArray, bhi: FloatArray) -> Pair:
    return _sum_down(alo, blo), _sum_up(ahi, bhi)


def _sub(alo: FloatArray, ahi: FloatArray, blo: FloatArray, bhi: FloatArray) -> Pair:
    return _sum_down(alo, -bhi), _sum_up(ahi, -blo)


def _mul(alo: FloatArray, ahi: FloatArray, blo: FloatArray, bhi: FloatArray) -> Pair:
    l1, h1 = _product(alo, blo)
    l2, h2 = _product(alo, bhi)
    l3, h3 = _product(ahi, blo)
    l4, h4 = _product(ahi, bhi)
    lo = np.minimum(np.minimum(l1, l2), np.minimum(l3, l4))
    hi = np.maximum(np.maximum(h1, h2), np.maximum(h3, h4))
    return lo, hi


def _div(alo: FloatArray, ahi: FloatArray, blo: FloatArray, bhi: FloatArray) -> Pair:
    if np.any((blo <= 0) & (bhi >= 0)):
        raise DivisionByZeroInterval("divisor interval contains zero")
    l1, h1 = _quotient(alo, blo)
    l2, h2 = _quotient(alo, bhi)
    l3, h3 = _quotient(ahi, blo)
    l4, h4 = _quotient(ahi, bhi)
    lo = np.minimum(np.minimum(l1, l2), np.minimum(l3, l4))
    hi = np.maximum(np.maximum(h1, h2), np.maximum(h3, h4))
    return lo, hi


def _magnitudes(lo: FloatArray, hi: FloatArray) -> Pair:
    """Smallest and largest |x| over [lo, hi]."""
    mig = np.where(lo > 0, lo, np.where(hi < 0, -hi, 0.0))
    mag = np.maximum(np.abs(lo), np.abs(hi))
    return mig, mag


def _sq(lo: FloatArray, hi: FloatArray) -> Pair:
    mig, mag = _magnitudes(lo, hi)
    return _prod_down(mig, mig), _prod_up(mag, mag)


def _pow_nonneg(m: FloatArray, k: int, upward: bool) -> FloatArray:
    step = _prod_up if upward else _prod_down
    out = np.ones_like(m)
    for _ in range(k):
        out = step(out, m)
    return out


def _powi(lo: FloatArray, hi: FloatArray, k: int) -> Pair:
    if k < 0:
        raise IntervalError(f"negative exponent {k} is not supported")
    if k == 0:
        return np.ones_like(lo), np.ones_like(hi)
    if k == 1:
        return lo, hi
    if k % 2 == 0:
        mig, mag = _magnitudes(lo, hi)
        return _pow_nonneg(mig, k, upward=False), _pow_nonneg(mag, k, upward=True)
    # odd powers are monotone
    plo = np.where(lo >= 0, _pow_nonneg(np.abs(lo), k, False), -_pow_nonneg(np.abs(lo), k, True))
    phi = np.where(hi >= 0, _pow_nonneg(np.abs(hi), k, True), -_pow_nonneg(np.abs(hi), k, False))
    return plo, phi


@np.errstate(all="ignore")
def _sqrt(lo: FloatArray, hi: FloatArray) -> Pair:
    empty = hi < 0
    base = np.maximum(lo, 0.0)
    top = np.maximum(hi, 0.0)

    def rooted(v: FloatArray) -> Pair:
        r = np.sqrt(v)
        p = r * r
        exact = (p == v) & (_two_prod_err(r, r, p) == 0) & ((v == 0) | (v >= _TINY))
        return np.where(exact, r, _down(r)), np.where(exact, r, _up(r))

    rlo = np.maximum(rooted(base)[0], 0.0)
    rhi = rooted(top)[1]
    return np.where(empty, np.inf, rlo), np.where(empty, -np.inf, rhi)


@np.errstate(all="ignore")
def _root(lo: FloatArray, hi: FloatArray, k: int) -> Pair:
    """Nonnegative k-th root of [lo, hi] ∩ [0, inf)."""
    if k == 1:
        return np.maximum(lo, 0.0), hi
    if k == 2:
        return _sqrt(lo, hi)
    empty = hi < 0
    rlo = np.maximum(_widen_down(np.power(np.maximum(lo, 0.0), 1.0 / k), 4), 0.0)
    rhi = _widen_up(np.power(np.maximum(hi, 0.0), 1.0 / k), 4)
    return np.where(empty, np.inf, rlo), np.where(empty, -np.inf, rhi)


@np.errstate(all="ignore")
def _exp(lo: FloatArray, hi: FloatArray) -> Pair:
    return np.maximum(_widen_down(np.exp(lo), 2), 0.0), _widen_up(np.exp(hi), 2)


@np.errstate(all="ignore")
def _log(lo: FloatArray, hi: FloatArray) -> Pair:
    empty = hi <= 0
    rlo = _widen_down(np.log(np.maximum(lo, 0.0)), 2)
    rhi = _widen_up(np.log(np.maximum(hi, 0.0)), 2)
    return np.where(empty, np.inf, rlo), np.where(empty, -np.inf, rhi)


def _hits(lo: FloatArray, hi: FloatArray, phase: float) -> BoolArray:
    """True where [lo, hi] may contain phase + 2*k*pi for some integer k."""
    slack = 1e-9
    first = np.ceil((lo - phase) / _TWO_PI - slack)
    last = np.floor((hi - phase) / _TWO_PI + slack)
    return first <= last


@np.errstate(all="ignore")
def _trig(lo: FloatArray, hi: FloatArray, fn: Any, peak: float, trough: float) -> Pair:
    vlo, vhi = fn(lo), fn(hi)
    rlo = _widen_down(np.minimum(vlo, vhi), 2)
    rhi = _widen_up(np.maximum(vlo, vhi), 2)
    wide = ((hi - lo) >= _TWO_PI) | (np.abs(lo) > _TRIG_LIMIT) | (np.abs(hi) > _TRIG_LIMIT)
    rhi = np.where(wide | _hits(lo, hi, peak), 1.0, rhi)
    rlo = np.where(wide | _hits(lo, hi, trough), -1.0, rlo)
    return np.maximum(rlo, -1.0), np.minimum(rhi, 1.0)


def _sin(lo: FloatArray, hi: FloatArray) -> Pair:
    return _trig(lo, hi, np.sin, 0.5 * math.pi, -0.5 * math.pi)


def _cos(lo: FloatArray, hi: FloatArray) -> Pair:
    return _trig(lo, hi, np.cos, 0.0, math.pi)


def _abs(lo: FloatArray, hi: FloatArray) -> Pair:
    return _magnitudes(lo, hi)


def _intersect(alo: FloatArray, ahi: FloatArray, blo: FloatArray, bhi: FloatArray) -> Pair:
    return np.maximum(alo, blo), np.minimum(ahi, bhi)


def _hull(alo: FloatArray, ahi: FloatArray, blo: FloatArray, bhi: FloatArray) -> Pair:
    a_empty = alo > ahi
    b_empty = blo > bhi
    lo = np.where(a_empty, blo, np.where(b_empty, alo, np.minimum(alo, blo)))
    hi = np.where(a_empty, bhi, np.where(b_empty, ahi, np.maximum(ahi, bhi)))
    return lo, hi


def _sum_axis(lo: FloatArray, hi: FloatArray, axis: int) -> Pair:
    lo = np.moveaxis(lo, axis, 0)
    hi = np.moveaxis(hi, axis, 0)
    if lo.shape[0] == 0:
        return np.zeros(lo.shape[1:]), np.zeros(hi.shape[1:])
    acc_lo, acc_hi = lo[0], hi[0]
    for i in range(1, lo.shape[0]):
        acc_lo = _sum_down(acc_lo, lo[i])
        acc_hi = _sum_up(acc_hi, hi[i])
    return acc_lo, acc_hi


# ---------------------------------------------------------------------------
# Scalar intervals
# ---------------------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class Interval:
    """Closed real interval [lo, hi]."""

    lo: float
    hi: float

    def __post_init__(self) -> None:
        lo, hi = float(self.lo), float(self.hi)
        if math.isnan(lo) or math.isnan(hi):
            raise IntervalError("NaN endpoint")
        if lo > hi:
            raise IntervalError(f"lower endpoint {lo} exceeds upper endpoint {hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def empty(cls) -> Interval:
        """The distinguished empty interval."""
        return _EMPTY

    @classmethod
    def point(cls, value: float) -> Interval:
        return cls(value, value)

    @classmethod
    def _raw(cls, lo: Any, hi: Any) -> Interval:
        lo, hi = float(lo), float(hi)
        if lo > hi:
            return _EMPTY
        out = object.__new__(cls)
        object.__setattr__(out, "lo", lo)
        object.__setattr__(out, "hi", hi)
        return out

    @property
    def is_empty(self) -> bool:
        return self.lo > self.hi

    @property
    def width(self) -> float:
        if self.is_empty:
            return 0.0
        return float(_sum_up(_f(self.hi), _f(-self.lo)))

    @property
    def mid(self) -> float:
        return float(_midpoint(_f(self.lo), _f(self.hi)))

    def contains(self, value: float | Interval) -> bool:
        if isinstance(value, Interval):
            return value.is_empty or (self.lo <= value.lo and value.hi <= self.hi)
        return self.lo <= value <= self.hi

    def subset(self, other: Interval) -> bool:
        return other.contains(self)

    def intersect(self, other: Interval) -> Interval:
        return Interval._raw(max(self.lo, other.lo), min(self.hi, other.hi))

    def hull(self, other: Interval) -> Interval:
        lo, hi = _hull(_f(self.lo), _f(self.hi), _f(other.lo), _f(other.hi))
        return Interval._raw(lo, hi)

    def _binary(self, other: Any, kernel: Any, reverse: bool = False) -> Interval:
        if isinstance(other, IntervalArray):
            return NotImplemented  # type: ignore[no-any-return]
        olo, ohi = _as_pair(other)
        a, b = (olo, ohi), (_f(self.lo), _f(self.hi))
        if not reverse:
            a, b = b, a
        lo, hi = kernel(a[0], a[1], b[0], b[1])
        return Interval._raw(lo, hi)

    def __add__(self, other: Any) -> Interval:
        return self._binary(other, _add)

    def __radd__(self, other: Any) -> Interval:
        return self._binary(other, _add, reverse=True)

    def __sub__(self, other: Any) -> Interval:
        return self._binary(other, _sub)

    def __rsub__(self, other: Any) -> Interval:
        return self._binary(other, _sub, reverse=True)

    def __mul__(self, other: Any) -> Interval:
        return self._binary(other, _mul)

    def __rmul__(self, other: Any) -> Interval:
        return self._binary(other, _mul, reverse=True)

    def __truediv__(self, other: Any) -> Interval:
        return self._binary(other, _div)

    def __rtruediv__(self, other: Any) -> Interval:
        return self._binary(other, _div, reverse=True)

    def __neg__(self) -> Interval:
        return Interval._raw(-self.hi, -self.lo)

    def _unary(self, kernel: Any, *args: Any) -> Interval:
        lo, hi = kernel(_f(self.lo), _f(self.hi), *args)
        return Interval._raw(lo, hi)

    def sq(self) -> Interval:
        return self._unary(_sq)

    def sqrt(self) -> Interval:
        return self._unary(_sqrt)

    def pow(self, k: int) -> Interval:
        return self._unary(_powi, k)

    def exp(self) -> Interval:
        return self._unary(_exp)

    def sin(self) -> Interval:
        return self._unary(_sin)

    def cos(self) -> Interval:
        return self._unary(_cos)

    def __repr__(self) -> str:
        if self.is_empty:
            return "Interval.empty()"
        return f"[{self.lo!r}, {self.hi!r}]"


_EMPTY = object.__new__(Interval)
object.__setattr__(_EMPTY, "lo", math.inf)
object.__setattr__(_EMPTY, "hi", -math.inf)


def _midpoint(lo: FloatArray, hi: FloatArray) -> FloatArray:
    with np.errstate(all="ignore"):
        m = 0.5 * lo + 0.5 * hi
    m = np.where(np.isneginf(lo) & np.isposinf(hi), 0.0, m)
    m = np.where(np.isneginf(lo) & np.isfinite(hi), hi, m)
    m = np.where(np.isposinf(hi) & np.isfinite(lo), lo, m)
    return np.clip(m, lo, hi)


def _as_pair(value: Any) -> Pair:
    if isinstance(value, IntervalArray):
        return value.lo, value.hi
    if isinstance(value, Interval):
        return _f(value.lo), _f(value.hi)
    arr = _f(value)
    if np.any(np.isnan(arr)):
        raise IntervalError("NaN operand")
    return arr, arr


# ---------------------------------------------------------------------------
# Interval arrays
# ---------------------------------------------------------------------------


class IntervalArray:
    """Immutable array of intervals with numpy endpoint storage.

    Components may be empty (lo > hi) only as the result of `intersect`; use
    `any_empty()` to detect them.
    """

    __slots__ = ("_lo", "_hi")
    __hash__ = None  # type: ignore[assignment]

    def __init__(self, lo: ArrayLike, hi: ArrayLike | None = None):
        lo_arr = np.array(lo, dtype=np.float64)
        hi_arr = lo_arr.copy() if hi is None else np.array(hi, dtype=np.float64)
        if lo_arr.shape != hi_arr.shape:
            raise DimensionMismatch(f"endpoint shapes differ: {lo_arr.shape} vs {hi_arr.shape}")
        if np.any(np.isnan(lo_arr)) or np.any(np.isnan(hi_arr)):
            raise IntervalError("NaN endpoint")
        if np.any(lo_arr > hi_arr):
            raise IntervalError("lower endpoint exceeds upper endpoint")
        self._check_ndim(lo_arr.ndim)
        self._lo = lo_arr
        self._hi = hi_arr
        self._lo.setflags(write=False)
        self._hi.setflags(write=False)

    def _check_ndim(self, ndim: int) -> None:
        pass

    @classmethod
    def _trusted(cls, lo: FloatArray, hi: FloatArray) -> IntervalArray:
        lo = np.array(lo, dtype=np.float64)
        hi = np.array(hi, dtype=np.float64)
        out_cls: type[IntervalArray] = {1: IntervalVector, 2: IntervalMatrix}.get(
            lo.ndim, IntervalArray
        )
        out = object.__new__(out_cls)
        lo.setflags(write=False)
        hi.setflags(write=False)
        out._lo = lo
        out._hi = hi
        return out

    # -- construction helpers -------------------------------------------------

    @classmethod
    def point(cls, values: ArrayLike) -> IntervalArray:
        arr = _f(values)
        return cls._trusted(arr, arr)

    @classmethod
    def full(cls, shape: int | tuple[int, ...], lo: float, hi: float) -> IntervalArray:
        return cls._trusted(np.full(shape, float(lo)), np.full(shape, float(hi)))

    @classmethod
    def stack(cls, items: Sequence[IntervalArray], axis: int = 0) -> IntervalArray:
        return cls._trusted(
            np.stack([i.lo for i in items], axis=axis), np.stack([i.hi for i in items], axis=axis)
        )

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> IntervalArray:
        return cls(data["lo"], data["hi"])

    def to_dict(self) -> dict[str, Any]:
        return {"lo": self._lo.tolist(), "hi": self._hi.tolist()}

    # -- array protocol ----------------------------------------------------------

    @property
    def lo(self) -> FloatArray:
        return self._lo

    @property
    def hi(self) -> FloatArray:
        return self._hi

    @property
    def shape(self) -> tuple[int, ...]:
        return self._lo.shape

    @property
    def ndim(self) -> int:
        return self._lo.ndim

    def __len__(self) -> int:
        return len(self._lo)

    def __iter__(self) -> Iterator[Any]:
        for i in range(len(self)):
            yield self[i]

    def __getitem__(self, idx: Any) -> Any:
        lo, hi = self._lo[idx], self._hi[idx]
        if np.ndim(lo) == 0:
            return Interval._raw(lo, hi)
        return IntervalArray._trusted(lo, hi)

    def replace(self, idx: Any, value: Interval | IntervalArray) -> IntervalArray:
        """Copy with the entries at `idx` replaced."""
        lo, hi = self._lo.copy(), self._hi.copy()
        vlo, vhi = _as_pair(value)
        lo[idx] = vlo
        hi[idx] = vhi
        return IntervalArray._trusted(lo, hi)

    def reshape(self, *shape: int) -> IntervalArray:
        return IntervalArray._trusted(self._lo.reshape(*shape), self._hi.reshape(*shape))

    def broadcast_to(self, shape: tuple[int, ...]) -> IntervalArray:
        return IntervalArray._trusted(
            np.broadcast_to(self._lo, shape).copy(), np.broadcast_to(self._hi, shape).copy()
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, IntervalArray):
            return NotImplemented
        return (
            self.shape == other.shape
            and bool(np.array_equal(self._lo, other._lo))
            and bool(np.array_equal(self._hi, other._hi))
        )

    def __repr__(self) -> str:
        return f"{type(self).__name__}(lo={self._lo.tolist()}, hi={self._hi.tolist()})"

    # -- arithmetic -------------------------------------------------------------

    def _binary(self, other: Any, kernel: Any, reverse: bool = False) -> IntervalArray:
        olo, ohi = _as_pair(other)
        try:
            np.broadcast_shapes(self.shape, olo.shape)
        except ValueError as e:
            raise DimensionMismatch(f"cannot combine shapes {self.shape} and {olo.shape}") from e
        if reverse:
            lo, hi = kernel(olo, ohi, self._lo, self._hi)
        else:
            lo, hi = kernel(self._lo, self._hi, olo, ohi)
        return IntervalArray._trusted(lo, hi)

    def __add__(self, other: Any) -> IntervalArray:
        return self._binary(other, _add)

    def __radd__(self, other: Any) -> IntervalArray:
        return self._binary(other, _add, reverse=True)

    def __sub__(self, other: Any) -> IntervalArray:
        return self._binary(other, _sub)

    def __rsub__(self, other: Any) -> IntervalArray:
        return self._binary(other, _sub, reverse=True)

    def __mul__(self, other: Any) -> IntervalArray:
        return self._binary(other, _mul)

    def __rmul__(self, other: Any) -> IntervalArray:
        return self._binary(other, _mul, reverse=True)

    def __truediv__(self, other: Any) -> IntervalArray:
        return self._binary(other, _div)

    def __rtruediv__(self, other: Any) -> IntervalArray:
        return self._binary(other, _div, reverse=True)

    def __neg__(self) -> IntervalArray:
        return IntervalArray._trusted(-self._hi, -self._lo)

    def __matmul__(self, other: IntervalArray | FloatArray) -> IntervalArray:
        olo, ohi = _as_pair(other)
        if self.ndim != 2 or olo.ndim not in (1, 2) or self.shape[1] != olo.shape[0]:
            raise DimensionMismatch(f"cannot multiply {self.shape} by {olo.shape}")
        if olo.ndim == 1:
            lo, hi = _mul(self._lo, self._hi, olo[None, :], ohi[None, :])
            return IntervalArray._trusted(*_sum_axis(lo, hi, axis=1))
        lo, hi = _mul(
            self._lo[:, :, None], self._hi[:, :, None], olo[None, :, :], ohi[None, :, :]
        )
        return IntervalArray._trusted(*_sum_axis(lo, hi, axis=1))

    def sum(self, axis: int = 0) -> Any:
        lo, hi = _sum_axis(self._lo, self._hi, axis)
        if np.ndim(lo) == 0:
            return Interval._raw(lo, hi)
        return IntervalArray._trusted(lo, hi)

    def _unary(self, kernel: Any, *args: Any) -> IntervalArray:
        return IntervalArray._trusted(*kernel(self._lo, self._hi, *args))

    def sq(self) -> IntervalArray:
        return self._unary(_sq)

    def sqrt(self) -> IntervalArray:
        return self._unary(_sqrt)

    def pow(self, k: int) -> IntervalArray:
        return self._unary(_powi, k)

    def root(self, k: int) -> IntervalArray:
        """Nonnegative k-th root of the part of each entry at or above zero."""
        return self._unary(_root, k)

    def exp(self) -> IntervalArray:
        return self._unary(_exp)

    def log(self) -> IntervalArray:
        return self._unary(_log)

    def sin(self) -> IntervalArray:
        return self._unary(_sin)

    def cos(self) -> IntervalArray:
        return self._unary(_cos)

    def abs(self) -> IntervalArray:
        return self._unary(_abs)

    def minimum(self, other: Any) -> IntervalArray:
        olo, ohi = _as_pair(other)
        return IntervalArray._trusted(np.minimum(self._lo, olo), np.minimum(self._hi, ohi))

    def maximum(self, other: Any) -> IntervalArray:
        olo, ohi = _as_pair(other)
        return IntervalArray._trusted(np.maximum(self._lo, olo), np.maximum(self._hi, ohi))

    # -- set operations ---------------------------------------------------------

    def intersect(self, other: Any) -> IntervalArray:
        olo, ohi = _as_pair(other)
        return IntervalArray._trusted(*_intersect(self._lo, self._hi, olo, ohi))

    def hull(self, other: Any) -> IntervalArray:
        olo, ohi = _as_pair(other)
        alo, blo = np.broadcast_arrays(self._lo, olo)
        ahi, bhi = np.broadcast_arrays(self._hi, ohi)
        return IntervalArray._trusted(*_hull(alo, ahi, blo, bhi))

    def meet(self, axis: int) -> IntervalArray:
        """Intersection of all entries along `axis`."""
        return IntervalArray._trusted(self._lo.max(axis=axis), self._hi.min(axis=axis))

    @staticmethod
    def choose(mask: ArrayLike, when_true: Any, when_false: Any) -> IntervalArray:
        """Entrywise selection between two interval operands."""
        tlo, thi = _as_pair(when_true)
        flo, fhi = _as_pair(when_false)
        m = np.asarray(mask, dtype=bool)
        return IntervalArray._trusted(np.where(m, tlo, flo), np.where(m, thi, fhi))

    def is_empty(self) -> BoolArray:
        return self._lo > self._hi

    def any_empty(self) -> bool:
        return bool(np.any(self._lo > self._hi))

    def contains(self, points: ArrayLike) -> BoolArray:
        p = _f(points)
        return (self._lo <= p) & (p <= self._hi)

    def contains_all(self, points: ArrayLike) -> bool:
        return bool(np.all(self.contains(points)))

    def subset(self, other: Any) -> bool:
        olo, ohi = _as_pair(other)
        return bool(np.all(self.is_empty() | ((olo <= self._lo) & (self._hi <= ohi))))

    # -- measures -----------------------------------------------------------------

    def width(self) -> FloatArray:
        with np.errstate(all="ignore"):
            w = _sum_up(self._hi, -self._lo)
        return np.where(self.is_empty(), 0.0, np.maximum(w, 0.0))

    def mid(self) -> FloatArray:
        return _midpoint(self._lo, self._hi)

    def select(self, theta: ArrayLike) -> FloatArray:
        """Affine point selection theta*hi + (1-theta)*lo, clipped inside the box."""
        t = _f(theta)
        with np.errstate(all="ignore"):
            p = t * self._hi + (1.0 - t) * self._lo
        return np.clip(p, self._lo, self._hi)

    def inflate(self, rel: float, absolute: float) -> IntervalArray:
        """Widen each component by `rel` of its width plus `absolute` on both sides."""
        pad = rel * self.width() + absolute
        return IntervalArray._trusted(_down(self._lo - pad), _up(self._hi + pad))


class IntervalVector(IntervalArray):
    """One-dimensional interval array."""

    __slots__ = ()

    def _check_ndim(self, ndim: int) -> None:
        if ndim != 1:
            raise DimensionMismatch(f"IntervalVector needs 1 dimension, got {ndim}")

    @classmethod
    def from_pairs(cls, pairs: Sequence[tuple[float, float]]) -> IntervalVector:
        return cls([p[0] for p in pairs], [p[1] for p in pairs])


class IntervalMatrix(IntervalArray):
    """Two-dimensional interval array (row-major)."""

    __slots__ = ()

    def _check_ndim(self, ndim: int) -> None:
        if ndim != 2:
            raise DimensionMismatch(f"IntervalMatrix needs 2 dimensions, got {ndim}")

    @property
    def n_rows(self) -> int:
        return self.shape[0]

    @property
    def n_cols(self) -> int:
        return self.shape[1]


# ---------------------------------------------------------------------------
# Named operations
# ---------------------------------------------------------------------------


def arith(a: Interval, b: Interval, op: ArithOp) -> Interval:
    """Outward-rounded interval arithmetic on scalars."""
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "div":
        return a / b
    raise ValueError(f"unknown arithmetic op: {op}")


def set_ops(a: Interval, b: Interval, op: SetOp) -> Interval | bool:
    """Intersection, hull, containment and subset tests on scalars."""
    if op == "intersect":
        return a.intersect(b)
    if op == "hull":
        return a.hull(b)
    if op == "contains":
        return a.contains(b)
    if op == "subset":
        return a.subset(b)
    raise ValueError(f"unknown set op: {op}")


def width(a: IntervalArray) -> FloatArray:
    return a.width()


def symmetric(radius: ArrayLike) -> IntervalArray:
    """[-r, r] for a nonnegative radius array."""
    r = _f(radius)
    return IntervalArray._trusted(-r, r.copy())


def entire(shape: int | tuple[int, ...]) -> IntervalArray:
    return IntervalArray.full(shape, -np.inf, np.inf)


def stack_components(items: Sequence[Any], batch_shape: tuple[int, ...] = ()) -> IntervalArray:
    """Stack scalars, intervals or interval arrays of one batch shape along a new last axis."""
    los, his = [], []
    for item in items:
        lo, hi = _as_pair(item)
        los.append(np.broadcast_to(lo, batch_shape))
        his.append(np.broadcast_to(hi, batch_shape))
    return IntervalArray._trusted(np.stack(los, axis=-1), np.stack(his, axis=-1))


def weighted_norm_ext(a: IntervalArray, w: ArrayLike) -> Any:
    """Interval extension of the weighted 2-norm over the last axis.

    Returns an `Interval` for a vector argument and an `IntervalArray` of the leading
    shape for batched arguments.
    """
    weights = _f(w)
    if weights.ndim != 1 or a.shape[-1:] != weights.shape:
        raise DimensionMismatch(f"weights {weights.shape} do not match argument {a.shape}")
    lo, hi = _mul(a.lo, a.hi, weights, weights)
    lo, hi = _sq(lo, hi)
    lo, hi = _sum_axis(lo, hi, axis=-1)
    lo, hi = _sqrt(lo, hi)
    if np.ndim(lo) == 0:
        return Interval._raw(lo, hi)
    return IntervalArray._trusted(lo, hi)


def monomial_ext(u: IntervalArray, alpha: Sequence[int]) -> Any:
    """Interval extension of u[alpha] = prod_i u_i**alpha_i over the last axis."""
    exps = list(alpha)
    if u.shape[-1] != len(exps):
        raise DimensionMismatch(f"exponent length {len(exps)} does not match control {u.shape}")
    lo = np.ones(u.shape[:-1])
    hi = np.ones(u.shape[:-1])
    for i, k in enumerate(exps):
        if k == 0:
            continue
        plo, phi = _powi(u.lo[..., i], u.hi[..., i], k)
        lo, hi = _mul(lo, hi, plo, phi)
    if np.ndim(lo) == 0:
        return Interval._raw(lo, hi)
    return IntervalArray._trusted(lo, hi)


def monomial_grad(u: ArrayLike, alpha: Sequence[int]) -> FloatArray:
    """Point gradient of u[alpha] with respect to u."""
    point = _f(u)
    exps = np.asarray(alpha, dtype=int)
    grad = np.zeros_like(point)
    for i, k in enumerate(exps):
        if k == 0:
            continue
        reduced = exps.copy()
        reduced[i] -= 1
        grad[i] = k * float(np.prod(point**reduced))
    return grad


def monomial_value(u: ArrayLike, alpha: Sequence[int]) -> float:
    return float(np.prod(_f(u) ** np.asarray(alpha, dtype=int)))
