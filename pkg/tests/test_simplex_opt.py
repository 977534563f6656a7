import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import minimize as scipy_minimize

from clnrd.errors import BudgetExceeded
from clnrd.simplex_opt import OptOptions, SearchSpace, finite_difference_gradient_check, minimize, project_simplex


def scipy_projection(v):
    d = len(v)
    res = scipy_minimize(lambda x: ((x - v) ** 2).sum(), np.full(d, 1 / d), jac=lambda x: 2 * (x - v),
                         bounds=[(0, 1)] * d, constraints=[{"type": "eq", "fun": lambda x: x.sum() - 1}],
                         method="SLSQP", options={"ftol": 1e-14, "maxiter": 500})
    return res.x


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=2, max_size=6))
def test_projection_matches_slsqp(v):
    v = np.array(v)
    p = project_simplex(v)
    assert np.all(p >= 0) and abs(p.sum() - 1) < 1e-12
    assert np.abs(p - scipy_projection(v)).max() < 1e-6
    assert np.allclose(project_simplex(p), p)


class Quadratic:
    """||x - target||^2 over two blocks, with optional constraint x[0] <= cap."""

    def __init__(self, target, cap=None):
        self.space = SearchSpace(((1, 3), (2, 2)))
        self.t = np.asarray(target, float)
        self.cap = cap
        self.n_constraints = 0 if cap is None else 1

    def values(self, x):
        x = np.atleast_2d(x)
        f = ((x - self.t) ** 2).sum(axis=1)
        c = (x[:, :1] - self.cap) if self.cap is not None else np.zeros((len(x), 0))
        return f, c

    def value_grad(self, x, state=None):
        x = np.atleast_2d(x)
        f, c = self.values(x)
        dc = np.zeros((len(x), self.n_constraints, x.shape[1]))
        if self.cap is not None:
            dc[:, 0, 0] = 1.0
        return f, 2 * (x - self.t), c, dc


def oracle(target, cap=None):
    """SLSQP on the same product of simplices."""
    cons = [{"type": "eq", "fun": lambda x: x[:3].sum() - 1}, {"type": "eq", "fun": lambda x: x[3:5].sum() - 1},
            {"type": "eq", "fun": lambda x: x[5:].sum() - 1}]
    if cap is not None:
        cons.append({"type": "ineq", "fun": lambda x: cap - x[0]})
    res = scipy_minimize(lambda x: ((x - target) ** 2).sum(), np.full(7, 0.4), bounds=[(0, 1)] * 7,
                         constraints=cons, method="SLSQP", options={"ftol": 1e-14})
    return res.fun


@pytest.mark.parametrize("cap", [None, 0.2])
def test_minimize_quadratic_against_slsqp(cap):
    target = np.array([0.9, 0.5, -0.2, 0.3, 0.3, 1.2, 0.1])
    res = minimize(Quadratic(target, cap), OptOptions(restarts=4))
    assert res.feasible
    assert res.value == pytest.approx(oracle(target, cap), abs=1e-7)


def test_corner_enumeration_counts_every_point():
    res = minimize(Quadratic(np.zeros(7)), OptOptions(restarts=1))
    assert res.corners_evaluated == 3 * 2 * 2


def test_grid_search_and_budget():
    space = SearchSpace(((1, 3),))
    assert space.n_grid(0.5) == 6
    pts = np.concatenate(list(space.grid(0.5)))
    assert len(pts) == 6 and np.allclose(pts.sum(axis=1), 1.0)
    q = Quadratic(np.zeros(7))
    with pytest.raises(BudgetExceeded):
        minimize(q, OptOptions(restarts=1, grid_resolution=0.001, deterministic_enumeration_budget=10))


def test_same_seed_same_answer():
    target = np.array([0.1, 0.5, 0.4, 0.9, 0.3, 0.2, 0.6])
    a = minimize(Quadratic(target, 0.05), OptOptions(restarts=3, seed=5))
    b = minimize(Quadratic(target, 0.05), OptOptions(restarts=3, seed=5))
    assert np.array_equal(a.point, b.point) and a.value == b.value


def test_gradient_check_on_quadratic():
    q = Quadratic(np.arange(7) / 7)
    x = q.space.dirichlet(np.random.default_rng(0))
    assert finite_difference_gradient_check(q, x) < 1e-6


def test_options_validation():
    with pytest.raises(ValueError):
        OptOptions(restarts=0)
    with pytest.raises(ValueError):
        SearchSpace(((0, 2),))
