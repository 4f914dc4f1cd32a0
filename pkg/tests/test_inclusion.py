"""Envelopes, contraction, algebraic constraints and the differential inclusion."""

from dataclasses import replace

import numpy as np
import pytest

from inclusion_mpc.errors import (
    DimensionMismatch,
    EmptyAfterContraction,
    InconsistentData,
)
from inclusion_mpc.harness.environments import TIERS
from inclusion_mpc.inclusion import (
    ConstraintSpec,
    DiffInclusion,
    EnvelopeModel,
    EnvelopeSet,
    RefineOptions,
    SideInfo,
    apply_algebraic_contraction,
    construct,
    contract_datapoint,
    envelope_eval,
    inclusion_eval,
    refine,
)
from inclusion_mpc.inclusion import constraints as cs
from inclusion_mpc.interval import IntervalArray, IntervalMatrix, IntervalVector
from inclusion_mpc.models import DataPoint, Dataset

WIDTH_TOL = 1e-9
TIER_SLACK = 1e-3


def _probes(env, count=40, seed=0):
    rng = np.random.default_rng(seed)
    centers = env.sample_states(count, rng)
    lo = np.maximum(centers - 0.05, env.state_box.lo)
    hi = np.minimum(centers + 0.05, env.state_box.hi)
    return IntervalArray(lo, hi)


def _wide(lo, hi):
    return IntervalVector([lo], [hi]), IntervalMatrix([[lo]], [[hi]])


# -- single-sample contraction ----------------------------------------------------------


def test_contract_unit_control(scalar_side):
    f, g = _wide(-10.0, 10.0)
    dp = DataPoint(x=[0.0], xdot=[3.0], u=[1.0])
    cf, cg = contract_datapoint(dp, f, g, scalar_side)
    assert (cf.lo[0], cf.hi[0]) == pytest.approx((-7.0, 10.0))
    assert (cg.lo[0, 0], cg.hi[0, 0]) == pytest.approx((-7.0, 10.0))


def test_contract_two_monomials():
    side = SideInfo(
        lipschitz_f=[1.0],
        lipschitz_g=[[0.0], [0.0]],
        weights=[1.0],
        control_exponents=((1,), (2,)),
        global_bound=10.0,
        state_box=IntervalVector([-1.0], [1.0]),
        control_box=IntervalVector([-1.0], [1.0]),
    )
    f = IntervalVector([0.0], [1.0])
    g = IntervalMatrix([[0.0], [0.0]], [[3.0], [3.0]])
    dp = DataPoint(x=[0.0], xdot=[2.0], u=[1.0])
    cf, cg = contract_datapoint(dp, f, g, side)
    assert (cf.lo[0], cf.hi[0]) == pytest.approx((0.0, 1.0))
    assert cg.lo[:, 0].tolist() == pytest.approx([0.0, 0.0])
    assert cg.hi[:, 0].tolist() == pytest.approx([2.0, 2.0])


def test_contract_scaled_control(scalar_side):
    f, g = _wide(-10.0, 10.0)
    dp = DataPoint(x=[0.0], xdot=[3.0], u=[2.0])
    cf, cg = contract_datapoint(dp, f, g, scalar_side)
    assert (cf.lo[0], cf.hi[0]) == pytest.approx((-10.0, 10.0))
    assert (cg.lo[0, 0], cg.hi[0, 0]) == pytest.approx((-3.5, 6.5))


def test_contract_zero_control_leaves_g(scalar_side):
    f, g = _wide(-10.0, 10.0)
    dp = DataPoint(x=[0.0], xdot=[3.0], u=[0.0])
    cf, cg = contract_datapoint(dp, f, g, scalar_side)
    assert cf == IntervalVector([3.0], [3.0])
    assert cg == g


def test_contract_padded_derivative(scalar_side):
    f, g = _wide(-10.0, 10.0)
    dp = DataPoint(x=[0.0], xdot=[3.0], u=[0.0], xdot_pad=[0.5])
    cf, _ = contract_datapoint(dp, f, g, scalar_side)
    assert cf.lo[0] <= 2.5 and cf.hi[0] >= 3.5
    assert cf.width()[0] == pytest.approx(1.0)


def test_contract_inconsistent_sample(scalar_side):
    f, g = _wide(0.0, 1.0)
    dp = DataPoint(x=[0.0], xdot=[5.0], u=[1.0])
    with pytest.raises(InconsistentData) as exc:
        contract_datapoint(dp, f, g, scalar_side, sample_index=4)
    assert exc.value.sample_index == 4
    assert exc.value.exit_code == 2


# -- envelopes ------------------------------------------------------------------------


def test_seed_envelope_holds_global_bounds(scalar_side):
    env = EnvelopeSet.seeded(EnvelopeModel.lipschitz(scalar_side), np.zeros(1))
    assert len(env) == 1 and env.data_count == 0
    f, g = envelope_eval(env, IntervalVector([0.5], [0.5]))
    assert f == IntervalVector([-10.0], [10.0])
    assert g == IntervalMatrix([[-10.0]], [[10.0]])


def test_envelope_grows_with_distance(scalar_side):
    data = Dataset()
    data.append(DataPoint(x=[0.0], xdot=[1.0], u=[0.0]), 0.0)
    env = construct(data, scalar_side)
    near, _ = envelope_eval(env, IntervalVector([0.1], [0.1]))
    far, _ = envelope_eval(env, IntervalVector([0.9], [0.9]))
    # f(0) = 1 and Lf = 1
    assert near.contains_all([1.0]) and far.contains_all([1.0])
    assert near.width()[0] == pytest.approx(0.2, abs=1e-9)
    assert far.width()[0] == pytest.approx(1.8, abs=1e-9)


def _two_records(side):
    model = EnvelopeModel.lipschitz(side)
    values_f = IntervalArray(np.array([[[1.0]], [[2.0]]]), np.array([[[1.0]], [[2.0]]]))
    values_g = IntervalArray.full((2, 1, 1, 1), -10.0, 10.0)
    return EnvelopeSet(model, np.array([[0.0], [1.0]]), values_f, values_g)


def test_envelope_intersects_records(scalar_side):
    side = replace(scalar_side, lipschitz_f=[2.0])
    both = _two_records(side)
    f, _ = envelope_eval(both, IntervalVector([0.5], [0.5]))
    assert (f.lo[0], f.hi[0]) == pytest.approx((1.0, 2.0))

    model = EnvelopeModel.lipschitz(side)
    single = EnvelopeSet(model, both.points[:1], both.values_f[:1], both.values_g[:1])
    f, _ = envelope_eval(single, IntervalVector([0.5], [0.5]))
    assert (f.lo[0], f.hi[0]) == pytest.approx((0.0, 2.0))


def _linear_samples(xs, us):
    # f(x) = x / 2 and g(x) = 1
    data = Dataset()
    for i, (x, u) in enumerate(zip(xs, us, strict=True)):
        data.append(DataPoint(x=[x], xdot=[0.5 * x + u], u=[u]), 0.1 * i)
    return data


def _sorted_records(env):
    order = np.argsort(env.points[1:, 0]) + 1
    f, g = env.values_f, env.values_g
    return f.lo[order], f.hi[order], g.lo[order], g.hi[order]


def test_construct_ignores_data_order(scalar_side):
    xs = [-0.8, -0.3, 0.1, 0.4, 0.9]
    us = [1.0, -0.5, 0.7, 0.3, -1.0]
    options = RefineOptions(max_sweeps=200, sweep_tol=1e-10)
    forward = construct(_linear_samples(xs, us), scalar_side, options=options)
    perm = [3, 0, 4, 2, 1]
    shuffled = construct(
        _linear_samples([xs[i] for i in perm], [us[i] for i in perm]),
        scalar_side,
        options=options,
    )
    assert len(forward) == len(shuffled) == 6
    for a, b in zip(_sorted_records(forward), _sorted_records(shuffled), strict=True):
        np.testing.assert_allclose(a, b, atol=1e-6)


def test_refine_with_a_repeated_sample_changes_nothing(scalar_side):
    data = _linear_samples([0.2], [0.5])
    before = construct(data, scalar_side)
    data.append(data[0], 0.1)
    after = refine(data[1], before, data)
    assert after.report is not None and after.report.sweeps == 1
    np.testing.assert_allclose(after.values_f.lo[:2], before.values_f.lo, atol=1e-9)
    np.testing.assert_allclose(after.values_f.hi[:2], before.values_f.hi, atol=1e-9)
    np.testing.assert_allclose(after.values_g.lo[:2], before.values_g.lo, atol=1e-9)
    np.testing.assert_allclose(after.values_g.hi[:2], before.values_g.hi, atol=1e-9)
    np.testing.assert_allclose(after.values_f.lo[2], before.values_f.lo[1], atol=1e-9)
    np.testing.assert_allclose(after.values_f.hi[2], before.values_f.hi[1], atol=1e-9)


def test_refine_returns_new_snapshot(scalar_side):
    data = Dataset()
    data.append(DataPoint(x=[0.2], xdot=[0.5], u=[1.0]), 0.0)
    seed = EnvelopeSet.seeded(EnvelopeModel.lipschitz(scalar_side), np.zeros(1))
    out = refine(data[0], seed, data)
    assert len(seed) == 1
    assert len(out) == 2
    assert out.report is not None and out.report.sweeps >= 1
    assert out.context is not None and out.context.sample_ids.tolist() == [0]


def test_record_window_evicts_oldest(pend, pend_data):
    env = construct(pend_data, pend.side_info(), options=RefineOptions(max_records=5))
    assert env.data_count == 5
    assert env.context is not None
    assert env.context.sample_ids.tolist() == list(range(len(pend_data) - 5, len(pend_data)))


def test_refine_options_validation():
    with pytest.raises(ValueError):
        RefineOptions(max_sweeps=0)
    with pytest.raises(ValueError):
        RefineOptions(max_records=0)


def test_envelope_box_shape_checked(pend, pend_data):
    di = DiffInclusion.from_data(pend.side_info(), pend_data.prefix(3))
    with pytest.raises(DimensionMismatch):
        di.terms(IntervalArray.full((2, 3), 0.0, 1.0))


# -- soundness against the truth -----------------------------------------------------------


@pytest.mark.parametrize("tier", TIERS)
def test_inclusion_contains_truth(pend, pend_data, tier):
    di = DiffInclusion.from_data(pend.side_info(tier), pend_data)
    rng = np.random.default_rng(11)
    xs = pend.sample_states(100, rng)
    us = pend.sample_controls(100, rng)
    boxes = IntervalArray.point(xs)
    enc_f, enc_g = di.terms(boxes)
    assert enc_f.contains_all(pend.f(xs))
    assert enc_g.contains_all(pend.g(xs))
    h = di.eval_batch(boxes, IntervalArray.point(us))
    assert h.contains_all(pend.xdot(xs, us))
    one = inclusion_eval(di, IntervalVector(xs[0], xs[0]), us[0])
    assert one.contains_all(pend.xdot(xs[0], us[0]))


def test_inclusion_over_control_box_contains_truth(pend, pend_data):
    di = DiffInclusion.from_data(pend.side_info("constraints"), pend_data)
    box = IntervalVector([2.9, -0.2], [3.1, 0.2])
    h = di.eval(box, pend.control_box)
    rng = np.random.default_rng(2)
    for _ in range(50):
        x = box.select(rng.uniform(size=2))
        u = pend.sample_controls(1, rng)[0]
        assert h.contains_all(pend.xdot(x, u))


def test_more_data_never_widens(pend, pend_data):
    boxes = _probes(pend)
    di = DiffInclusion.seeded(pend.side_info())
    before_f, before_g = di.terms(boxes)
    for index, point in enumerate(pend_data):
        di = di.refined(point, pend_data, sample_index=index)
        enc_f, enc_g = di.terms(boxes)
        assert np.all(enc_f.width() <= before_f.width() + WIDTH_TOL)
        assert np.all(enc_g.width() <= before_g.width() + WIDTH_TOL)
        before_f, before_g = enc_f, enc_g


def test_more_side_information_never_widens(pend, pend_data):
    boxes = _probes(pend)
    widths = []
    for tier in TIERS:
        di = DiffInclusion.from_data(pend.side_info(tier), pend_data)
        enc_f, enc_g = di.terms(boxes)
        widths.append(np.concatenate([enc_f.width().ravel(), enc_g.width().ravel()]))
    # tiers may stop sweeping at slightly different points
    for wide, narrow in zip(widths, widths[1:], strict=False):
        assert np.all(narrow <= wide * (1 + TIER_SLACK) + WIDTH_TOL)


def test_known_terms_are_exact_for_linear_model(dbl):
    di = DiffInclusion.seeded(dbl.side_info("known_terms"))
    enc_f, enc_g = di.terms(IntervalArray.point([[0.3, -0.7]]))
    assert enc_f.contains_all([[-0.7, 0.0]])
    assert enc_g.contains_all([[[0.0, 1.0]]])
    assert np.max(enc_f.width()) <= 1e-12
    assert np.max(enc_g.width()) <= 1e-12


def test_inconsistent_sample_is_rejected(pend):
    data = Dataset()
    # far beyond M * (1 + |u|) for the pendulum's declared bound M = 10
    data.append(DataPoint(x=[3.0, 0.0], xdot=[0.0, 1e3], u=[1.0]), 0.0)
    with pytest.raises(InconsistentData) as exc:
        DiffInclusion.from_data(pend.side_info(), data)
    assert exc.value.sample_index == 0


# -- Jacobians -------------------------------------------------------------------------


def _side_with_weights(scalar_side, weight_mode):
    return replace(
        scalar_side,
        lipschitz_f=np.array([1.0, 3.0]),
        lipschitz_g=np.zeros((1, 2)),
        weights=np.array([1.0, 2.0]),
        state_box=IntervalVector([-1.0, -1.0], [1.0, 1.0]),
        jacobian_weight=weight_mode,
    )


def test_jacobian_weight_column(scalar_side):
    side = _side_with_weights(scalar_side, "column")
    jf, jg = EnvelopeModel.lipschitz(side).lipschitz_jacobians()
    assert jf[0].hi.tolist() == [[1.0, 2.0], [3.0, 6.0]]
    assert jf[0].lo.tolist() == [[-1.0, -2.0], [-3.0, -6.0]]
    assert jg.shape == (1, 1, 2, 2)


def test_jacobian_weight_row(scalar_side):
    side = _side_with_weights(scalar_side, "row")
    jf, _ = EnvelopeModel.lipschitz(side).lipschitz_jacobians()
    assert jf[0].hi.tolist() == [[1.0, 1.0], [6.0, 6.0]]


def test_jacobians_contain_truth(pend, pend_data):
    di = DiffInclusion.from_data(pend.side_info("known_terms"), pend_data)
    box = IntervalVector([2.0, -1.0], [2.5, 1.0])
    jf, jg = di.jacobians(box)
    assert jf.shape == (2, 2) and jg.shape == (1, 2, 2)
    for theta in np.linspace(2.0, 2.5, 5):
        true = np.array([[0.0, 1.0], [-4.0 * np.cos(theta), -0.2]])
        assert jf.contains_all(true)
    assert jg.contains_all(np.zeros((1, 2, 2)))


# -- algebraic constraints -----------------------------------------------------------------


def test_inequality_constraint_contracts():
    f = IntervalVector([-1.0, -1.0], [2.0, 2.0])
    out = apply_algebraic_contraction({"f": f}, [ConstraintSpec.geq(cs.f(0), 0.0)], site="box")
    assert out["f"] == IntervalArray([0.0, -1.0], [2.0, 2.0])


def test_equality_constraint_uses_context():
    f = IntervalVector([-1.0, -1.0], [2.0, 2.0])
    out = apply_algebraic_contraction(
        {"f": f},
        [ConstraintSpec.eq(cs.f(0), cs.x(1))],
        context={"x": np.array([0.0, 0.5])},
        site="box",
    )
    assert out["f"].lo[0] == pytest.approx(0.5)
    assert out["f"].hi[0] == pytest.approx(0.5)


def test_nonlinear_constraint_is_sound():
    f = IntervalVector([-2.0], [2.0])
    spec = ConstraintSpec.eq(cs.f(0) ** 2, 1.0)
    out = apply_algebraic_contraction({"f": f}, [spec], site="box")["f"]
    assert out.contains_all([-1.0]) and out.contains_all([1.0])
    assert out.subset(f)


def test_unsatisfiable_constraint_raises():
    f = IntervalVector([-1.0], [2.0])
    with pytest.raises(EmptyAfterContraction):
        apply_algebraic_contraction({"f": f}, [ConstraintSpec.geq(cs.f(0), 3.0)], site="box")


def test_constraints_skip_sites_without_their_variables():
    f = IntervalVector([-1.0], [2.0])
    spec = ConstraintSpec.eq(cs.f(0), cs.xdot(0))
    out = apply_algebraic_contraction({"f": f}, [spec], site="box")
    assert out["f"] == f
    assert spec.tags == frozenset({"f", "xdot"})


def test_constraint_relation_validated():
    with pytest.raises(ValueError):
        ConstraintSpec(cs.f(0), "le")  # type: ignore[arg-type]


def test_abs_constraint_bounds_magnitude():
    f = IntervalVector([-3.0], [3.0])
    spec = ConstraintSpec.geq(cs.const(1.5), cs.abs_(cs.f(0)))
    out = apply_algebraic_contraction({"f": f}, [spec], site="box")["f"]
    assert out.lo[0] == pytest.approx(-1.5)
    assert out.hi[0] == pytest.approx(1.5)


def test_friction_cone_constraint_tightens():
    f = IntervalVector([0.0, 0.0, 0.0], [1.0, 2.0, 0.0])
    spec = ConstraintSpec.geq(cs.f(0), cs.sqrt(cs.f(1) ** 2 * 1.0 + cs.f(2) ** 2 * 1.0))
    out = apply_algebraic_contraction({"f": f}, [spec], site="box")["f"]
    assert (out.lo[1], out.hi[1]) == pytest.approx((0.0, 1.0), abs=1e-9)
    assert (out.lo[0], out.hi[0]) == pytest.approx((0.0, 1.0), abs=1e-9)
