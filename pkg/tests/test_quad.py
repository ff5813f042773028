import random
from fractions import Fraction as F

import pytest
from hypothesis import given, strategies as st

from stochdp.errors import NotPSD
from stochdp.generators import random_hedge_problem
from stochdp.oracle import least_squares_oracle
from stochdp.quad import HedgeProblem, QuadFunc, ldl, quad_cond_exp, quad_partial_min, variance_hedge_solve
from stochdp.tree import ScenarioTree

from instances import CALL, binomial_market, binomial_tree


def q(Q, b=None, c=0):
    n = len(Q)
    return QuadFunc(Q, b or [0] * n, c)


def same(f, g):
    return f.Q == g.Q and f.b == g.b and f.c == g.c


def test_partial_min_examples():
    # (x - y)^2
    assert same(quad_partial_min(q([[1, -1], [-1, 1]]), 1).value, QuadFunc.zero(1))
    # x^2 + y^2
    assert same(quad_partial_min(q([[1, 0], [0, 1]]), 1).value, q([[1]]))
    # (x + 2y)^2 + y^2
    res = quad_partial_min(q([[1, 2], [2, 5]]), 1)
    assert same(res.value, q([[F(1, 5)]]))
    assert res.minimizer([5]) == (-2,)


def test_ldl_rejects_indefinite():
    with pytest.raises(NotPSD):
        ldl([[1, 2], [2, 1]])
    with pytest.raises(NotPSD):
        ldl([[0, 1], [1, 1]])
    L, D = ldl([[4, 2], [2, 1]])
    assert D == [4, 0]


def test_cond_exp_examples():
    t = binomial_tree()
    sq = q([[1]])
    shifted = QuadFunc([[1]], [-4], 4)
    avg = quad_cond_exp(t, 0, {"0.0": sq, "0.1": shifted})["0"]
    assert same(avg, QuadFunc([[1]], [-2], 2))
    assert same(quad_cond_exp(t, 0, {"0.0": sq, "0.1": sq})["0"], sq)


def test_zero_claim():
    mkt = binomial_market()
    res = variance_hedge_solve(HedgeProblem(mkt.tree, mkt.S, {l: 0 for l in mkt.tree.leaves}))
    assert res.value == 0 and res.V0 == 0
    assert all(v == 0 for vec in res.policy.values.values() for v in vec)


def test_complete_binomial_replicates():
    mkt = binomial_market()
    res = variance_hedge_solve(HedgeProblem(mkt.tree, mkt.S, CALL))
    assert res.value == 0 and res.V0 == 1 and res.policy["0"] == (1, F(1, 2))


def test_trinomial_matches_normal_equations():
    t = ScenarioTree.from_branching([[F(1, 3)] * 3])
    hp = HedgeProblem(t, {"0": (4,), "0.0": (8,), "0.1": (4,), "0.2": (2,)},
                      {"0.0": 3, "0.1": 0, "0.2": 0})
    res = variance_hedge_solve(hp)
    value, _ = least_squares_oracle(hp)
    assert res.value == value == F(3, 14)


def test_duplicated_asset_is_absorbed():
    mkt = binomial_market()
    S = {k: v + v for k, v in mkt.S.items()}
    res = variance_hedge_solve(HedgeProblem(mkt.tree, S, CALL))
    assert res.value == 0
    z = res.policy["0"][1:]
    assert z[0] == z[1] == F(1, 4)
    assert len(res.null_spaces["0"]) == 1


@given(st.integers(0, 10 ** 6))
def test_recursion_matches_least_squares(seed):
    hp = random_hedge_problem(random.Random(seed))
    res = variance_hedge_solve(hp)
    value, _ = least_squares_oracle(hp)
    assert res.value == value
    for nid, null in res.null_spaces.items():
        for v in null:
            assert sum(a * b for a, b in zip(v, res.policy[nid])) == 0


@given(st.lists(st.integers(-3, 3), min_size=3, max_size=3), st.integers(-3, 3))
def test_squared_residual_is_psd_and_exact(a, u):
    f = QuadFunc.squared_residual(a, u)
    x = [1, -2, 3]
    assert f(x) == (sum(ai * xi for ai, xi in zip(a, x)) - u) ** 2
