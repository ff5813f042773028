"""Seeded random instances for property checks and experiments."""
from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from .finance import (ConeMarket, LiquidMarket, UtilitySpec, bid_ask_cone, build_superhedge,
                      capped_linear_utility, cone, frictionless_cone)
from .integrand import BellmanSpec, IntegrandSpec
from .polyfunc import PolyFunc, polyfunc_sum
from .quad import HedgeProblem
from .tree import ScenarioTree, validate_tree


@dataclass(frozen=True)
class InstanceConfig:
    max_T: int = 3
    max_n: int = 2
    max_branch: int = 3
    max_leaves: int = 6
    max_total_dim: int = 5
    coef_range: int = 2
    max_terms: int = 3


def small_fraction(rng: random.Random, lo: int, hi: int, dens=(1, 2)) -> Fraction:
    return Fraction(rng.randint(lo * 2, hi * 2), rng.choice(dens))


def random_probs(rng: random.Random, k: int) -> List[Fraction]:
    w = [rng.randint(1, 3) for _ in range(k)]
    s = sum(w)
    return [Fraction(x, s) for x in w]


def random_tree(rng: random.Random, T: int, max_branch: int, max_leaves: int) -> ScenarioTree:
    recs = [("0", None, 1)]
    layer = ["0"]
    for _ in range(T):
        nxt = []
        room = max(1, max_leaves // max(1, len(layer)))
        for nid in layer:
            k = rng.randint(1, max(1, min(max_branch, room)))
            for i, p in enumerate(random_probs(rng, k)):
                cid = f"{nid}.{i}"
                recs.append((cid, nid, p))
                nxt.append(cid)
        layer = nxt
    return validate_tree(recs)


def _vec(rng, n, r):
    return [rng.randint(-r, r) for _ in range(n)]


def random_leaf_function(rng: random.Random, n: int, cfg: InstanceConfig) -> PolyFunc:
    """Sum of absolute-value and hinge terms, optionally on a halfspace containing 0.

    Every term is nonnegative, so ``f >= 0``.
    """
    f = None
    for _ in range(rng.randint(1, cfg.max_terms)):
        c = _vec(rng, n, cfg.coef_range)
        d = rng.randint(-cfg.coef_range, cfg.coef_range)
        if rng.random() < 0.7:
            term = PolyFunc.from_pieces(n, [(c, -d), ([-v for v in c], d)])
        else:
            term = PolyFunc.from_pieces(n, [(c, -d), ([0] * n, 0)])
        f = term if f is None else polyfunc_sum(f, term)
    if rng.random() < 0.3:
        a = _vec(rng, n, cfg.coef_range)
        dom = PolyFunc.indicator(n, ineqs=[(a, rng.randint(0, 2))])
        f = polyfunc_sum(f, dom)
    return f


def random_integrand_instance(rng: random.Random, cfg: InstanceConfig = InstanceConfig()
                             ) -> Tuple[ScenarioTree, IntegrandSpec]:
    T = rng.randint(0, cfg.max_T)
    tree = random_tree(rng, T, cfg.max_branch, cfg.max_leaves)
    while True:
        dims = tuple(rng.randint(1, cfg.max_n) for _ in range(T + 1))
        if sum(dims) <= cfg.max_total_dim:
            break
    n = sum(dims)
    funcs = {leaf: random_leaf_function(rng, n, cfg) for leaf in tree.leaves}
    return tree, IntegrandSpec(dims, funcs, {leaf: Fraction(0) for leaf in tree.leaves})


# -- markets ------------------------------------------------------------------

def random_price_tree(rng: random.Random, tree: ScenarioTree, d: int, arbitrage: bool = False,
                      duplicate: bool = False) -> Dict[str, Tuple[Fraction, ...]]:
    """Positive prices.

    Without ``arbitrage`` every increment has zero mean under random positive
    child weights, so the market admits a martingale measure.  With it, every
    increment is nonnegative and the first child of each branching moves up.
    """
    S = {tree.root: tuple(Fraction(rng.randint(2, 6)) for _ in range(d))}
    for nid in tree.order:
        kids = [c for c, _ in tree.children(nid)]
        if not kids:
            continue
        q = random_probs(rng, len(kids))
        cols = []
        for j in range(d):
            base = S[nid][j]
            moves = [small_fraction(rng, -2, 2) for _ in kids]
            if arbitrage:
                moves = [abs(m) for m in moves]
                moves[0] = moves[0] or Fraction(1)
            else:
                moves[-1] = -sum(qc * m for qc, m in zip(q[:-1], moves[:-1])) / q[-1]
            low = min(moves)
            if base + low <= 0:
                lam = base / (2 * -low)
                moves = [lam * m for m in moves]
            cols.append([base + m for m in moves])
        for i, c in enumerate(kids):
            S[c] = tuple(col[i] for col in cols)
    if duplicate and d >= 1:
        S = {k: v + (v[0],) for k, v in S.items()}
    return S


def random_market_integrand(rng: random.Random, T_max: int = 2) -> Tuple[ScenarioTree, IntegrandSpec]:
    """A superhedging integrand on a random price tree, with or without arbitrage."""
    T = rng.randint(1, T_max)
    tree = random_tree(rng, T, 3, 6)
    d = rng.randint(1, 2)
    S = random_price_tree(rng, tree, d, arbitrage=rng.random() < 0.4)
    mkt = LiquidMarket(tree, S)
    claim = {l: rng.randint(0, 4) for l in tree.leaves}
    feasibility = rng.random() < 0.5
    if feasibility:
        # without initial capital, a claim <= 0 keeps the zero strategy feasible
        claim = {l: c - 4 for l, c in claim.items()}
    return tree, build_superhedge(mkt, claim, feasibility=feasibility)


def random_hedge_problem(rng: random.Random, max_T: int = 3, max_d: int = 2,
                         duplicate: Optional[bool] = None) -> HedgeProblem:
    T = rng.randint(0, max_T)
    tree = random_tree(rng, T, 3, 6)
    dup = rng.random() < 0.3 if duplicate is None else duplicate
    d = rng.randint(1, max_d - 1 if dup and max_d > 1 else max_d)
    S = random_price_tree(rng, tree, d, duplicate=dup)
    claim = {l: small_fraction(rng, 0, 4) for l in tree.leaves}
    return HedgeProblem(tree, S, claim)


def random_consumption_instance(rng: random.Random, T_max: int = 2):
    """Cash and one stock, frictionless or with a bid-ask spread, capped utilities.

    Returns ``(market, utility)``.
    """
    T = rng.randint(1, T_max)
    tree = random_tree(rng, T, 2, 4)
    S = random_price_tree(rng, tree, 1)
    C = {}
    for nid in tree.order:
        s = S[nid][0]
        if rng.random() < 0.5:
            C[nid] = frictionless_cone([s])
        else:
            spread = Fraction(rng.randint(1, 2), 4)
            C[nid] = bid_ask_cone(s - spread, s + spread)
    D = {nid: cone(2) for nid in tree.order if tree.nodes[nid].stage < T}
    mkt = ConeMarket(tree, 2, C, D)
    cash_only = rng.random() < 0.5
    g = {}
    for nid in tree.order:
        cap = rng.randint(1, 3)
        if cash_only:
            g[nid] = capped_linear_utility(2, [1, 0], cap, domain_eqs=[[0, 1]])
        else:
            g[nid] = capped_linear_utility(2, [1, rng.randint(1, 3)], cap)
    return mkt, UtilitySpec(g)


def random_endowment(rng: random.Random, tree: ScenarioTree, d: int) -> Dict[str, Tuple[Fraction, ...]]:
    return {nid: tuple(Fraction(-rng.randint(0, 2)) if j == 0 else Fraction(0) for j in range(d))
            for nid in tree.order}


def random_bellman_instance(rng: random.Random, max_T: int = 2) -> Tuple[ScenarioTree, BellmanSpec]:
    """Tracking and inventory-style stage costs ``k_t(x_{t-1}, x_t)`` with scalar states."""
    T = rng.randint(0, max_T)
    tree = random_tree(rng, T, 2, 4)
    costs = {}
    for nid in tree.order:
        target = rng.randint(-3, 3)
        a = rng.randint(1, 2)
        move = PolyFunc.from_pieces(2, [([-a, a], 0), ([a, -a], 0)])
        track = PolyFunc.from_pieces(2, [([0, 1], -target), ([0, -1], target)])
        k = polyfunc_sum(move, track)
        if rng.random() < 0.4:
            cap = rng.randint(1, 4)
            k = polyfunc_sum(k, PolyFunc.indicator(2, ineqs=[([0, 1], cap), ([0, -1], cap)]))
        costs[nid] = k
    x0 = (Fraction(rng.randint(-2, 2)),)
    return tree, BellmanSpec((1,) * (T + 1), x0, costs)
