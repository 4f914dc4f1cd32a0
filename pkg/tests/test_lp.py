"""LP container, both solvers and the trust-region subproblem."""

import numpy as np
import pytest

from inclusion_mpc.errors import DimensionMismatch
from inclusion_mpc.interval import IntervalVector
from inclusion_mpc.lp import (
    HighsSolver,
    LinearProgram,
    LpStatus,
    SimplexSolver,
    StageModel,
    build_subproblem,
    get_solver,
    solve,
)

SOLVERS = [SimplexSolver(), HighsSolver()]


def _small_lp() -> LinearProgram:
    # max x + y  s.t. x + 2y <= 4, 3x + y <= 6, x, y >= 0
    lp = LinearProgram(objective=[-1.0, -1.0])
    lp.add_le([1.0, 2.0], 4.0)
    lp.add_le([3.0, 1.0], 6.0)
    return lp


@pytest.mark.parametrize("solver", SOLVERS, ids=lambda s: s.name)
def test_optimal_vertex(solver):
    sol = solver.solve(_small_lp())
    assert sol.optimal
    assert sol.x == pytest.approx([1.6, 1.2], abs=1e-8)
    assert sol.objective_value == pytest.approx(-2.8, abs=1e-8)


@pytest.mark.parametrize("solver", SOLVERS, ids=lambda s: s.name)
def test_free_variables_equalities_and_offset(solver):
    # min |x - 3| via epigraph t, with x free and y = x - 1
    lp = LinearProgram(
        objective=[0.0, 0.0, 1.0],
        lower=[-np.inf, -np.inf, 0.0],
        upper=[np.inf, np.inf, np.inf],
        offset=2.0,
    )
    lp.add_le([1.0, 0.0, -1.0], 3.0)
    lp.add_le([-1.0, 0.0, -1.0], -3.0)
    lp.add_eq([1.0, -1.0, 0.0], 1.0)
    sol = solver.solve(lp)
    assert sol.optimal
    assert sol.x[0] == pytest.approx(3.0, abs=1e-8)
    assert sol.x[1] == pytest.approx(2.0, abs=1e-8)
    assert sol.objective_value == pytest.approx(2.0, abs=1e-8)
    assert lp.max_violation(sol.x) <= 1e-8


@pytest.mark.parametrize("solver", SOLVERS, ids=lambda s: s.name)
def test_greater_equal_rows(solver):
    lp = LinearProgram(objective=[1.0, 1.0])
    lp.add_ge([1.0, 2.0], 4.0)
    sol = solver.solve(lp)
    assert sol.optimal
    assert sol.objective_value == pytest.approx(2.0, abs=1e-8)
    np.testing.assert_allclose(sol.x, [0.0, 2.0], atol=1e-8)


@pytest.mark.parametrize("solver", SOLVERS, ids=lambda s: s.name)
def test_infeasible(solver):
    lp = LinearProgram(objective=[1.0])
    lp.add_le([1.0], -1.0)
    assert solver.solve(lp).status is LpStatus.INFEASIBLE


@pytest.mark.parametrize("solver", SOLVERS, ids=lambda s: s.name)
def test_unbounded(solver):
    lp = LinearProgram(objective=[-1.0, 0.0])
    lp.add_le([-1.0, 1.0], 1.0)
    assert solver.solve(lp).status is LpStatus.UNBOUNDED


def test_crossed_bounds_are_infeasible():
    lp = LinearProgram(objective=[1.0], lower=[1.0], upper=[0.0])
    assert solve(lp).status is LpStatus.INFEASIBLE


def test_solvers_agree_on_random_feasible_programs():
    rng = np.random.default_rng(5)
    for _ in range(20):
        n = int(rng.integers(2, 6))
        lp = LinearProgram(
            objective=rng.normal(size=n), lower=np.full(n, -2.0), upper=np.full(n, 2.0)
        )
        for _ in range(int(rng.integers(1, 5))):
            lp.add_le(rng.normal(size=n), float(rng.uniform(0.5, 2.0)))
        a = SimplexSolver().solve(lp)
        b = HighsSolver().solve(lp)
        assert a.optimal and b.optimal
        assert a.objective_value == pytest.approx(b.objective_value, abs=1e-7)


def test_program_validation():
    with pytest.raises(DimensionMismatch):
        LinearProgram(objective=[1.0, 1.0], lower=[0.0])
    with pytest.raises(ValueError):
        LinearProgram(objective=[np.inf])
    lp = LinearProgram(objective=[1.0, 1.0])
    with pytest.raises(DimensionMismatch):
        lp.add_le([1.0], 1.0)
    with pytest.raises(ValueError):
        lp.add([1.0, 1.0], ">=", 1.0)  # type: ignore[arg-type]
    with pytest.raises(ValueError):
        get_solver("glpk")


def test_dump_lists_rows_and_bounds():
    text = _small_lp().dump()
    assert text.startswith("min ")
    assert "r0:" in text and "r1:" in text
    assert "bounds" in text


def _stage(n: int, m: int, h0: np.ndarray) -> StageModel:
    return StageModel(
        a=np.eye(n),
        b=np.ones((n, m)),
        h0=h0,
        cost=1.0,
        grad_x=np.zeros(n),
        grad_u=np.ones(m),
        grad_next=np.zeros(n),
    )


def test_subproblem_layout_and_trust_region():
    n, m, stages = 2, 1, 3
    xs = np.zeros((stages, n))
    us = np.zeros((stages, m))
    models = [_stage(n, m, np.zeros(n)) for _ in range(stages)]
    box_x = IntervalVector([-5.0, -5.0], [5.0, 5.0])
    box_u = IntervalVector([-1.0], [1.0])
    sub = build_subproblem(xs, us, models, 0.25, box_x, box_u, penalty=100.0)
    assert sub.lp.n_vars == sub.layout.size
    assert len(sub.lp.names or []) == sub.layout.size
    sol = SimplexSolver().solve(sub.lp)
    assert sol.optimal
    dx, du, v = sub.split(sol.x)
    # the cost falls with -du, so every control moves to the trust radius
    assert du.ravel() == pytest.approx([-0.25] * stages, abs=1e-9)
    assert np.abs(v).max() <= 1e-9
    assert sol.objective_value == pytest.approx(3.0 - 0.75, abs=1e-9)


def test_subproblem_one_norm_trust_region():
    n, m, stages = 1, 1, 2
    models = [_stage(n, m, np.zeros(n)) for _ in range(stages)]
    sub = build_subproblem(
        np.zeros((stages, n)),
        np.zeros((stages, m)),
        models,
        0.5,
        IntervalVector([-5.0], [5.0]),
        IntervalVector([-1.0], [1.0]),
        penalty=100.0,
        trust_norm="one",
    )
    sol = SimplexSolver().solve(sub.lp)
    _, du, _ = sub.split(sol.x)
    assert np.abs(du).sum() == pytest.approx(0.5, abs=1e-9)


def test_subproblem_slack_absorbs_model_mismatch():
    n, m = 1, 1
    # the iterate disagrees with the model by 0.5; the penalty prices the slack
    models = [_stage(n, m, np.array([0.5]))]
    sub = build_subproblem(
        np.zeros((1, n)),
        np.zeros((1, m)),
        models,
        0.0,
        IntervalVector([-5.0], [5.0]),
        IntervalVector([-1.0], [1.0]),
        penalty=10.0,
    )
    sol = SimplexSolver().solve(sub.lp)
    dx, du, v = sub.split(sol.x)
    assert du.ravel() == pytest.approx([0.0], abs=1e-12)
    assert (dx - v).ravel() == pytest.approx([0.5], abs=1e-9)


def test_subproblem_shape_checks():
    with pytest.raises(DimensionMismatch):
        build_subproblem(
            np.zeros((2, 1)),
            np.zeros((1, 1)),
            [],
            0.1,
            IntervalVector([-1.0], [1.0]),
            IntervalVector([-1.0], [1.0]),
            1.0,
        )
