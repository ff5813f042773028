import random
from fractions import Fraction as F

import pytest
from hypothesis import assume, given, settings, strategies as st

from stochdp.dp import (backward_pass, bellman_consistency, bellman_pass, check_linearity_L,
                        forward_policy, recession_commutation_check, solve, verify_optimality)
from stochdp.errors import Infeasible, LinearityViolated
from stochdp.finance import build_consumption, build_superhedge
from stochdp.generators import (random_bellman_instance, random_consumption_instance,
                                random_endowment, random_integrand_instance)
from stochdp.integrand import BellmanSpec, IntegrandSpec, bellman_to_integrand, expected_objective
from stochdp.linalg import dot
from stochdp.oracle import flatten_solve
from stochdp.polyfunc import INF, PolyFunc, polyfunc_sum
from stochdp.polyhedron import same_set
from stochdp.tree import ScenarioTree

from instances import CALL, arbitrage_market, binomial_market, binomial_tree, symmetric_market


def abs_shift(n, i, c):
    """|x_i - c| on Q^n."""
    e = [int(j == i) for j in range(n)]
    return PolyFunc.from_pieces(n, [(e, -c), ([-v for v in e], c)])


def test_single_node_absolute_value():
    t = ScenarioTree.chain(0)
    spec = IntegrandSpec((1,), {"0": abs_shift(1, 0, 0)})
    table = backward_pass(t, spec)
    assert table.value == 0
    policy, value = forward_policy(t, table)
    assert policy["0"] == (0,) and value == 0


def test_binomial_superhedge():
    mkt = binomial_market()
    sol = solve(mkt.tree, build_superhedge(mkt, CALL))
    assert sol.value == 1
    assert sol.policy["0"] == (1, F(1, 2))
    assert sol.report.ok


def test_arbitrage_market_violates_linearity():
    mkt = arbitrage_market()
    with pytest.raises(LinearityViolated) as exc:
        backward_pass(mkt.tree, build_superhedge(mkt, CALL))
    assert exc.value.node == "0"
    assert exc.value.witness == (0, 1)


def test_chain_tracks_targets():
    T = 3
    t = ScenarioTree.chain(T)
    f = None
    for s in range(T + 1):
        term = abs_shift(T + 1, s, s)
        f = term if f is None else polyfunc_sum(f, term)
    spec = IntegrandSpec((1,) * (T + 1), {t.leaves[0]: f})
    sol = solve(t, spec)
    assert sol.value == 0
    assert [sol.policy[n][0] for n in t.order] == [0, 1, 2, 3]


def test_verify_optimality_flags_suboptimal_capital():
    mkt = binomial_market()
    spec = build_superhedge(mkt, CALL)
    table = backward_pass(mkt.tree, spec)
    policy, _ = forward_policy(mkt.tree, table)
    assert verify_optimality(mkt.tree, table, policy).ok
    worse = policy.with_value("0", (2, F(1, 2)))
    rep = verify_optimality(mkt.tree, table, worse)
    assert not rep.ok
    assert rep.stage_values[0] == 2 > table.value
    assert rep.argmin_failures == ["0"]


def test_linearity_examples():
    mkt = symmetric_market()
    spec = build_superhedge(mkt, {l: 0 for l in mkt.tree.leaves}, feasibility=True)
    assert check_linearity_L(mkt.tree, spec).is_linear
    mkt = arbitrage_market()
    spec = build_superhedge(mkt, {l: 0 for l in mkt.tree.leaves}, feasibility=True)
    rep = check_linearity_L(mkt.tree, spec)
    assert not rep.is_linear and rep.nodewise is False
    assert rep.witness["0"][0] > 0
    t = ScenarioTree.chain(1)
    point = PolyFunc.indicator(2, eqs=[([1, 0], 1), ([0, 1], 2)])
    assert check_linearity_L(t, IntegrandSpec((1, 1), {t.leaves[0]: point})).is_linear


def test_linearity_needs_a_feasible_point():
    t = ScenarioTree.chain(0)
    empty = PolyFunc.indicator(1, ineqs=[([1], -1), ([-1], -1)])
    with pytest.raises(Infeasible):
        check_linearity_L(t, IntegrandSpec((1,), {"0": empty}))


def test_infeasible_problem():
    t = binomial_tree()
    spec = IntegrandSpec((1, 0), {"0.0": PolyFunc.indicator(1, eqs=[([1], 1)]),
                                  "0.1": PolyFunc.indicator(1, eqs=[([1], 2)])})
    assert backward_pass(t, spec).value == INF
    with pytest.raises(Infeasible):
        solve(t, spec)


def test_bellman_chain_stays_at_origin():
    t = ScenarioTree.chain(2)
    move = PolyFunc.from_pieces(2, [([-1, 1], 0), ([1, -1], 0)])
    bspec = BellmanSpec((1, 1, 1), (0,), {n: move for n in t.order})
    res = bellman_pass(t, bspec)
    assert res.value == 0
    assert all(v == (0,) for v in res.policy.values.values())


def test_commutation_examples():
    mkt = binomial_market()
    assert recession_commutation_check(mkt.tree, build_superhedge(mkt, CALL)).ok
    t = ScenarioTree.chain(2)
    f = polyfunc_sum(abs_shift(3, 0, 1), abs_shift(3, 2, 0))
    assert recession_commutation_check(t, IntegrandSpec((1, 1, 1), {t.leaves[0]: f})).ok
    t = binomial_tree(F(1, 3))
    spec = IntegrandSpec((1, 1), {"0.0": polyfunc_sum(abs_shift(2, 0, 1), abs_shift(2, 1, 0)),
                                  "0.1": abs_shift(2, 1, 3)})
    rep = recession_commutation_check(t, spec)
    assert rep.ok and rep.nodes["0"] == (True, True)


def _solvable(seed):
    rng = random.Random(seed)
    tree, spec = random_integrand_instance(rng)
    try:
        return tree, spec, solve(tree, spec)
    except LinearityViolated:
        return None


@given(st.integers(0, 10 ** 6))
def test_policy_is_orthogonal_to_lineality(seed):
    got = _solvable(seed)
    assume(got is not None)
    tree, spec, sol = got
    for nid in tree.order:
        for b in sol.table.cones[nid].basis:
            assert dot(sol.policy[nid], b) == 0
    assert expected_objective(tree, spec, sol.policy) == sol.value


@given(st.integers(0, 10 ** 6), st.integers(0, 10 ** 6))
def test_monotone_value_chain(seed, seed2):
    """Any feasible adapted point has E h_t(x^t) >= inf for every t."""
    got = _solvable(seed)
    assume(got is not None)
    tree, spec, sol = got
    rng = random.Random(seed2)
    pol = sol.policy
    for nid in tree.order:
        pol = pol.with_value(nid, [v + rng.randint(-1, 1) for v in pol[nid]])
    rep = verify_optimality(tree, sol.table, pol)
    for t, v in rep.stage_values.items():
        assert v >= sol.value


@given(st.integers(0, 10 ** 6))
def test_bellman_matches_generic_recursion(seed):
    tree, bspec = random_bellman_instance(random.Random(seed))
    bval, gval, obj = bellman_consistency(tree, bspec)
    assert bval == gval == obj
    if bval != INF:
        spec_value, _ = flatten_solve(tree, bellman_to_integrand(tree, bspec))
        assert spec_value == bval


@settings(max_examples=10)
@given(st.integers(0, 10 ** 6))
def test_cones_do_not_depend_on_endowment(seed):
    rng = random.Random(seed)
    mkt, util = random_consumption_instance(rng)
    tables = []
    for _ in range(2):
        u = random_endowment(rng, mkt.tree, mkt.d)
        spec = build_consumption(mkt, util, u)
        try:
            tables.append(backward_pass(mkt.tree, spec))
        except LinearityViolated:
            return
    a, b = tables
    assume(a.feasible and b.feasible)
    for nid in mkt.tree.order:
        assert same_set(a.cones[nid].cone, b.cones[nid].cone)
