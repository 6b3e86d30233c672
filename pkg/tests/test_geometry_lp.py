import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import linprog

from fitzlab.geometry import AffineFrame, LowerEnvelope, PolytopeDomain
from fitzlab.lp import simplex

from oracles import s_function_linprog


# -- simplex


def test_simplex_small_problem():
    # min -x - y  s.t. x + y + s = 1
    res = simplex([-1.0, -1.0, 0.0], [[1.0, 1.0, 1.0]], [1.0])
    assert res.status == "optimal" and res.value == pytest.approx(-1.0)


def test_simplex_infeasible():
    res = simplex([1.0, 1.0], [[1.0, 1.0]], [-1.0])
    assert res.status == "infeasible" and res.value == np.inf


def test_simplex_unbounded():
    res = simplex([-1.0, 0.0], [[1.0, -1.0]], [0.0])
    assert res.status == "unbounded"


def test_simplex_degenerate_cycling_example():
    # Beale's classic cycling instance in equality form with slacks
    c = [-0.75, 150, -0.02, 6, 0, 0, 0]
    A = [
        [0.25, -60, -0.04, 9, 1, 0, 0],
        [0.5, -90, -0.02, 3, 0, 1, 0],
        [0, 0, 1, 0, 0, 0, 1],
    ]
    b = [0, 0, 1]
    res = simplex(c, A, b)
    assert res.status == "optimal"
    assert res.value == pytest.approx(-0.05)


@given(st.integers(0, 2**32 - 1))
def test_simplex_matches_highs(seed):
    rng = np.random.default_rng(seed)
    m, k = 3, 7
    A = rng.normal(size=(m, k))
    x0 = rng.uniform(0, 1, size=k)
    b = A @ x0
    c = rng.uniform(0.1, 2, size=k)
    ref = linprog(c, A_eq=A, b_eq=b, bounds=(0, None), method="highs")
    res = simplex(c, A, b)
    assert res.status == "optimal"
    assert res.value == pytest.approx(ref.fun, abs=1e-8)
    assert np.allclose(A @ res.x, b, atol=1e-8)


# -- geometry


def test_affine_frame_of_collinear_points():
    P = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]])
    f = AffineFrame.fit(P)
    assert f.dim == 1
    u, resid = f.reduce(np.array([[3.0, 3.0], [0.0, 1.0]]))
    assert resid[0] == pytest.approx(0.0, abs=1e-12) and resid[1] > 0.5
    assert np.allclose(f.lift(u[:1]), [[3.0, 3.0]])


def test_polytope_contains_square_and_segment():
    sq = PolytopeDomain(np.array([[0, 0], [1, 0], [0, 1], [1, 1]], dtype=float))
    assert sq.contains(np.array([[0.5, 0.5], [1.0, 1.0], [1.1, 0.5]])).tolist() == [True, True, False]
    seg = PolytopeDomain(np.array([[-1.0, -1.0], [1.0, 1.0]]))
    assert seg.contains(np.array([[0.2, 0.2], [0.2, 0.3], [1.5, 1.5]])).tolist() == [True, False, False]
    pt = PolytopeDomain(np.array([[0.0, 0.0]]))
    assert pt.contains(np.array([[0.0, 0.0], [0.0, 1e-3]])).tolist() == [True, False]


@given(st.integers(0, 2**32 - 1), st.integers(3, 9))
def test_lower_envelope_matches_lp(seed, k):
    rng = np.random.default_rng(seed)
    P = rng.uniform(-2, 2, size=(k, 2))
    env = LowerEnvelope(P, np.einsum("ij,ij->i", P[:, :1], P[:, 1:]))
    Q = rng.uniform(-2, 2, size=(10, 2))
    got = env.evaluate(Q)
    for q, g in zip(Q, got):
        want = s_function_linprog(P, q)
        if np.isinf(want):
            assert np.isinf(g) or PolytopeDomain(P).contains(q[None, :], tol=1e-7)[0]
        else:
            assert g == pytest.approx(want, abs=1e-7)


def test_lower_envelope_degenerate_cases():
    one = LowerEnvelope(np.array([[1.0, 2.0]]), np.array([2.0]))
    assert one.evaluate(np.array([[1.0, 2.0], [0.0, 0.0]])).tolist() == [2.0, np.inf]
    seg = LowerEnvelope(np.array([[-1.0, -1.0], [0.0, 0.0], [1.0, 1.0]]), np.array([1.0, 0.0, 1.0]))
    assert seg.evaluate(np.array([[0.5, 0.5]]))[0] == pytest.approx(0.5)
    flat = LowerEnvelope(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]), np.array([1.0, 2.0, 3.0]))
    assert flat.evaluate(np.array([[0.25, 0.25]]))[0] == pytest.approx(1.75)
