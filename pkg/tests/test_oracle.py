import random
from fractions import Fraction as F

from hypothesis import assume, given, settings, strategies as st

from stochdp.dp import solve
from stochdp.errors import LinearityViolated
from stochdp.finance import build_consumption, build_consumption_dual, build_superhedge
from stochdp.generators import InstanceConfig, random_integrand_instance
from stochdp.integrand import IntegrandSpec, expected_objective
from stochdp.oracle import flatten, flatten_solve, least_squares_oracle, phi_probe
from stochdp.polyfunc import INF, PolyFunc
from stochdp.quad import HedgeProblem
from stochdp.tree import ScenarioTree

from instances import CALL, binomial_market, frictionless_consumption


def test_single_node_absolute_value():
    t = ScenarioTree.chain(0)
    spec = IntegrandSpec((1,), {"0": PolyFunc.from_pieces(1, [([1], 0), ([-1], 0)])})
    assert flatten_solve(t, spec)[0] == 0
    assert flatten_solve(t, spec, method="fm")[0] == 0


def test_binomial_superhedge_both_methods():
    mkt = binomial_market()
    spec = build_superhedge(mkt, CALL)
    for method in ("lp", "fm"):
        value, pol = flatten_solve(mkt.tree, spec, method)
        assert value == 1
        assert expected_objective(mkt.tree, spec, pol) == 1


def test_flat_dimension_counts_every_node():
    mkt = binomial_market()
    prog = flatten(mkt.tree, build_superhedge(mkt, CALL))
    assert prog.layout.size == 2  # (V_0, z_0) at the root, nothing at the leaves
    assert prog.dim == 2 + 2


def test_least_squares_examples():
    mkt = binomial_market()
    value, pol = least_squares_oracle(HedgeProblem(mkt.tree, mkt.S, {l: 0 for l in mkt.tree.leaves}))
    assert value == 0
    value, pol = least_squares_oracle(HedgeProblem(mkt.tree, mkt.S, CALL))
    assert value == 0 and pol["0"] == (1, F(1, 2))


TINY = InstanceConfig(max_T=2, max_n=1, max_branch=2, max_leaves=3, max_total_dim=3, max_terms=2)


@settings(max_examples=15)
@given(st.integers(0, 10 ** 6))
def test_fm_and_lp_oracles_agree_with_recursion(seed):
    tree, spec = random_integrand_instance(random.Random(seed), TINY)
    try:
        sol = solve(tree, spec)
    except LinearityViolated:
        assume(False)
    lp_value, lp_pol = flatten_solve(tree, spec)
    fm_value, fm_pol = flatten_solve(tree, spec, method="fm")
    assert sol.value == lp_value == fm_value
    # minimizers are interchangeable
    assert expected_objective(tree, spec, lp_pol) == expected_objective(tree, spec, fm_pol) == sol.value


def test_phi_brackets_zero_by_convexity():
    """phi(u) = min_x |x - u| + |x| is convex; phi(u) + phi(-u) >= 2 phi(0)."""
    t = ScenarioTree.chain(0)

    def builder(u):
        f = PolyFunc.from_pieces(1, [([2], -u[0]), ([-2], u[0]), ([0], u[0]), ([0], -u[0])])
        return t, IntegrandSpec((1,), {"0": f})
    rep = phi_probe(builder, [(-3,), (0,), (3,)])
    assert rep.convex
    assert rep.values[0] + rep.values[2] >= 2 * rep.values[1]


def test_superhedge_phi_is_zero_or_infinite():
    mkt = binomial_market()
    base = {"0.0": 3, "0.1": 0}

    def builder(u):
        claim = {l: base[l] + u[0] for l in mkt.tree.leaves}
        return mkt.tree, build_superhedge(mkt, claim, feasibility=True)
    grid = [(F(k),) for k in (-2, -1, 0, 1)]
    rep = phi_probe(builder, grid)
    # the call plus a constant s is superhedged for free iff the replication cost 1 + s <= 0
    assert rep.values == [0, 0, INF, INF]
    assert rep.convex


def test_conical_consumption_fenchel_equality():
    mkt, util = frictionless_consumption()
    dual = build_consumption_dual(mkt, util)
    cash = {n: (F(1), F(0)) for n in mkt.tree.order}

    def shifted(s):
        return {n: (s * a, s * b) for n, (a, b) in cash.items()}

    def builder(u):
        return mkt.tree, build_consumption(mkt, util, shifted(u[0]))

    def bound(u):
        return dual.pairing(mkt.tree, shifted(u[0])) + dual.value
    grid = [(F(k, 2),) for k in (-2, -1, 0, 1, 2)]
    rep = phi_probe(builder, grid, dual_bound=bound, tight_index=2)
    assert rep.convex and rep.fenchel_ok and rep.fenchel_tight
    assert all(m is not None for v, m in zip(rep.values, rep.minimizers) if v != INF)
