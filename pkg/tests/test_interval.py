"""Interval arithmetic: enclosure of sampled point results and edge cases."""

import math

import numpy as np
import pytest

from inclusion_mpc.errors import DimensionMismatch, DivisionByZeroInterval, IntervalError
from inclusion_mpc.interval import (
    Interval,
    IntervalArray,
    IntervalMatrix,
    IntervalVector,
    arith,
    entire,
    monomial_ext,
    monomial_grad,
    monomial_value,
    set_ops,
    symmetric,
    weighted_norm_ext,
)

rng = np.random.default_rng(1234)


def _random_interval() -> Interval:
    a, b = sorted(rng.uniform(-10.0, 10.0, size=2))
    return Interval(a, b)


def _points(i: Interval, count: int = 25) -> np.ndarray:
    return np.concatenate([[i.lo, i.hi], rng.uniform(i.lo, i.hi, size=count)])


@pytest.mark.parametrize("op", ["add", "sub", "mul"])
def test_arith_encloses_point_results(op):
    ops = {"add": np.add, "sub": np.subtract, "mul": np.multiply}
    for _ in range(200):
        a, b = _random_interval(), _random_interval()
        out = arith(a, b, op)
        for x in _points(a, 5):
            for y in _points(b, 5):
                assert out.contains(float(ops[op](x, y)))


def test_division_encloses_point_results():
    for _ in range(200):
        a = _random_interval()
        lo = rng.uniform(0.1, 5.0)
        b = Interval(lo, lo + rng.uniform(0.0, 5.0))
        if rng.uniform() < 0.5:
            b = -b
        out = arith(a, b, "div")
        for x in _points(a, 5):
            for y in _points(b, 5):
                assert out.contains(x / y)


def test_division_by_interval_containing_zero_raises():
    with pytest.raises(DivisionByZeroInterval):
        Interval(1.0, 2.0) / Interval(-1.0, 1.0)
    with pytest.raises(DivisionByZeroInterval):
        Interval(1.0, 2.0) / Interval(0.0, 1.0)


def test_exact_results_stay_tight():
    assert arith(Interval(1.0, 2.0), Interval(3.0, 4.0), "add") == Interval(4.0, 6.0)
    assert arith(Interval(-1.0, 2.0), Interval(3.0, 4.0), "mul") == Interval(-4.0, 8.0)
    assert Interval.point(2.0).sq() == Interval(4.0, 4.0)


def test_inexact_results_round_outward():
    third = Interval(1.0, 1.0) / Interval(3.0, 3.0)
    assert third.lo < third.hi
    assert third.lo <= 1.0 / 3.0 <= third.hi
    tenth = Interval.point(0.1) + Interval.point(0.2)
    assert tenth.lo <= 0.30000000000000004 and tenth.hi >= 0.3


def test_invalid_endpoints():
    with pytest.raises(IntervalError):
        Interval(2.0, 1.0)
    with pytest.raises(IntervalError):
        Interval(math.nan, 1.0)
    with pytest.raises(IntervalError):
        IntervalArray([0.0, 2.0], [1.0, 1.0])


def test_empty_interval():
    e = Interval(0.0, 1.0).intersect(Interval(2.0, 3.0))
    assert e.is_empty
    assert e.width == 0.0
    assert Interval(0.0, 1.0).contains(e)
    assert set_ops(e, Interval(5.0, 6.0), "subset") is True
    assert set_ops(Interval(0.0, 1.0), Interval(2.0, 3.0), "hull") == Interval(0.0, 3.0)


def test_set_ops():
    a, b = Interval(0.0, 2.0), Interval(1.0, 3.0)
    assert set_ops(a, b, "intersect") == Interval(1.0, 2.0)
    assert set_ops(a, Interval(0.5, 1.5), "contains") is True
    assert set_ops(a, b, "subset") is False
    with pytest.raises(ValueError):
        set_ops(a, b, "xor")  # type: ignore[arg-type]


@pytest.mark.parametrize("name", ["sq", "sqrt", "exp", "sin", "cos"])
def test_elementary_functions_enclose(name):
    fns = {"sq": np.square, "sqrt": np.sqrt, "exp": np.exp, "sin": np.sin, "cos": np.cos}
    for _ in range(200):
        i = _random_interval()
        if name == "sqrt":
            i = Interval(abs(i.lo) / 2, abs(i.lo) / 2 + i.width)
        out = getattr(i, name)()
        for x in _points(i):
            assert out.contains(float(fns[name](x)))


def test_sin_cos_extrema():
    assert Interval(0.0, 4.0).sin().hi == 1.0
    assert Interval(-1.0, 7.0).cos().lo == -1.0
    assert Interval(-1.0, 7.0).cos().hi == 1.0


@pytest.mark.parametrize("k", [2, 3, 4])
def test_integer_power(k):
    i = Interval(-2.0, 1.5)
    out = i.pow(k)
    for x in _points(i):
        assert out.contains(x**k)
    if k % 2 == 0:
        assert out.lo == 0.0


def test_array_shapes_and_types():
    v = IntervalArray([0.0, 1.0], [1.0, 2.0])
    assert isinstance(v + v, IntervalVector)
    m = IntervalArray.full((2, 3), -1.0, 1.0)
    assert isinstance(m, IntervalMatrix)
    assert m.n_rows == 2 and m.n_cols == 3
    assert isinstance(v[0], Interval)
    with pytest.raises(DimensionMismatch):
        IntervalVector([[0.0]], [[1.0]])
    with pytest.raises(DimensionMismatch):
        v + IntervalArray.full(3, 0.0, 1.0)


def test_matmul_encloses():
    a = IntervalArray(rng.uniform(-1, 0, size=(3, 2)), rng.uniform(0, 1, size=(3, 2)))
    x = IntervalArray(rng.uniform(-1, 0, size=2), rng.uniform(0, 1, size=2))
    out = a @ x
    for _ in range(100):
        am = a.select(rng.uniform(size=(3, 2)))
        xv = x.select(rng.uniform(size=2))
        assert out.contains_all(am @ xv)


def test_width_mid_inflate():
    v = IntervalArray([0.0, -1.0], [2.0, 1.0])
    assert v.width().tolist() == [2.0, 2.0]
    assert v.mid().tolist() == [1.0, 0.0]
    wide = v.inflate(0.5, 0.1)
    assert v.subset(wide)
    assert np.all(wide.width() >= 4.2 - 1e-12)
    assert entire(2).mid().tolist() == [0.0, 0.0]
    assert symmetric([1.0, 2.0]) == IntervalArray([-1.0, -2.0], [1.0, 2.0])


def test_intersect_reports_empty_components():
    a = IntervalArray([0.0, 0.0], [1.0, 1.0])
    b = IntervalArray([0.5, 2.0], [1.5, 3.0])
    out = a.intersect(b)
    assert out.is_empty().tolist() == [False, True]
    assert out.any_empty()


def test_weighted_norm_encloses():
    box = IntervalArray([-1.0, 0.5], [0.5, 2.0])
    w = np.array([2.0, 0.5])
    norm = weighted_norm_ext(box, w)
    for _ in range(200):
        p = box.select(rng.uniform(size=2))
        assert norm.contains(float(np.linalg.norm(w * p)))
    with pytest.raises(DimensionMismatch):
        weighted_norm_ext(box, [1.0])


def test_monomials():
    u = IntervalArray([-1.0, 0.5], [2.0, 1.0])
    alpha = (2, 1)
    ext = monomial_ext(u, alpha)
    for _ in range(200):
        p = u.select(rng.uniform(size=2))
        assert ext.contains(monomial_value(p, alpha))
    assert monomial_value([3.0, 2.0], alpha) == 18.0
    assert monomial_grad([3.0, 2.0], alpha).tolist() == [12.0, 9.0]
    assert monomial_ext(u, (0, 0)) == Interval(1.0, 1.0)


def test_dict_round_trip():
    v = IntervalArray([0.0, 1.0], [1.0, 2.0])
    assert IntervalArray.from_dict(v.to_dict()) == v
