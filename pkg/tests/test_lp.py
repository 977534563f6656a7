import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import linprog

from clnrd.lp import phase_one


def scipy_infeasibility(A, b):
    """Phase-1 value by HiGHS: flip rows so b >= 0, then min sum(s) s.t. A x + s = b, x, s >= 0."""
    m, n = A.shape
    sign = np.where(b < 0, -1.0, 1.0)
    A, b = A * sign[:, None], b * sign
    c = np.concatenate([np.zeros(n), np.ones(m)])
    res = linprog(c, A_eq=np.hstack([A, np.eye(m)]), b_eq=b, bounds=(0, None), method="highs")
    assert res.status == 0
    return res.fun


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 5), st.integers(1, 6), st.booleans())
def test_phase_one_agrees_with_highs(seed, m, n, make_feasible):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(m, n)).round(2)
    b = A @ rng.uniform(0, 1, n) if make_feasible else rng.normal(size=m)
    res = phase_one(A, b)
    oracle = scipy_infeasibility(A, b)
    assert res.feasible == (oracle <= 1e-9)
    assert abs(res.infeasibility - oracle) < 1e-7
    if res.feasible:
        assert np.all(res.x >= 0) and np.abs(A @ res.x - b).max() < 1e-9


def test_obviously_infeasible():
    res = phase_one([[1.0, 1.0]], [-1.0])
    assert not res.feasible and res.infeasibility == pytest.approx(1.0)


def test_degenerate_system_terminates():
    # duplicated rows and a zero row exercise the tie-breaking rule
    A = np.array([[1.0, 1.0, 0.0], [1.0, 1.0, 0.0], [0.0, 0.0, 0.0], [0.0, 1.0, 1.0]])
    b = np.array([1.0, 1.0, 0.0, 1.0])
    res = phase_one(A, b)
    assert res.feasible and np.abs(A @ res.x - b).max() < 1e-12
