import numpy as np
import pytest

from polymet._simplex import INFEASIBLE, OPTIMAL, UNBOUNDED, solve_lp
from polymet.errors import LPFailure


def test_basic_maximization():
    # max x + y s.t. x + y <= 1
    sol = solve_lp([1.0, 1.0], a_ub=[[1.0, 1.0]], b_ub=[1.0])
    assert sol.status == OPTIMAL
    assert sol.value == pytest.approx(1.0)


def test_vertex_solution():
    # max 3x + 2y over x <= 2, y <= 3, x + y <= 4 -> (2, 2)
    sol = solve_lp([3.0, 2.0],
                   a_ub=[[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]],
                   b_ub=[2.0, 3.0, 4.0])
    assert sol.status == OPTIMAL
    assert sol.value == pytest.approx(10.0)
    assert sol.x == pytest.approx([2.0, 2.0])


def test_unbounded():
    sol = solve_lp([1.0, 0.0], a_ub=[[0.0, 1.0]], b_ub=[1.0])
    assert sol.status == UNBOUNDED


def test_infeasible_inequalities():
    # x <= -1 with x >= 0
    sol = solve_lp([1.0], a_ub=[[1.0], [-1.0]], b_ub=[-1.0, -2.0])
    assert sol.status == INFEASIBLE


def test_infeasible_equalities():
    # x + y = 1 and x + y = 2 cannot both hold
    sol = solve_lp([1.0, 0.0],
                   a_eq=[[1.0, 1.0], [1.0, 1.0]], b_eq=[1.0, 2.0])
    assert sol.status == INFEASIBLE


def test_equality_constraint_respected():
    sol = solve_lp([0.0, 1.0],
                   a_ub=[[0.0, 1.0]], b_ub=[5.0],
                   a_eq=[[1.0, 1.0]], b_eq=[2.0])
    assert sol.status == OPTIMAL
    assert sol.x[0] + sol.x[1] == pytest.approx(2.0)
    assert sol.value == pytest.approx(2.0)


def test_degenerate_cycling_guard():
    # Classic degenerate instance; Bland's rule must terminate.
    a = np.array([
        [0.5, -5.5, -2.5, 9.0],
        [0.5, -1.5, -0.5, 1.0],
        [1.0, 0.0, 0.0, 0.0],
    ])
    b = np.array([0.0, 0.0, 1.0])
    c = np.array([10.0, -57.0, -9.0, -24.0])
    sol = solve_lp(c, a_ub=a, b_ub=b)
    assert sol.status == OPTIMAL
    assert sol.value == pytest.approx(1.0)


def test_iteration_limit():
    with pytest.raises(LPFailure):
        solve_lp([1.0], a_ub=[[1.0]], b_ub=[-1.0], max_iter=0)


def test_no_constraints_rejected():
    with pytest.raises(LPFailure):
        solve_lp([1.0])
