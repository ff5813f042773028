"""Hand-built instances shared by the test modules."""
from fractions import Fraction as F

from stochdp.finance import (ConeMarket, LiquidMarket, UtilitySpec, capped_linear_utility,
                             frictionless_cone)
from stochdp.tree import ScenarioTree

HALF = F(1, 2)


def binomial_tree(p=HALF):
    return ScenarioTree.from_branching([[p, 1 - p]])


def binomial_market():
    """S_0 = 4, S_1 in {8, 2}."""
    t = binomial_tree()
    return LiquidMarket(t, {"0": (4,), "0.0": (8,), "0.1": (2,)})


CALL = {"0.0": 3, "0.1": 0}


def arbitrage_market():
    """Price increments 1 and 1/2: buying the asset never loses."""
    t = binomial_tree()
    return LiquidMarket(t, {"0": (0,), "0.0": (1,), "0.1": (HALF,)})


def symmetric_market():
    t = binomial_tree()
    return LiquidMarket(t, {"0": (1,), "0.0": (2,), "0.1": (0,)})


def cash_utility(cap=1):
    """U(c) = min(c_cash, cap) on c >= 0, stock consumption forced to 0."""
    return capped_linear_utility(2, [1, 0], cap, domain_eqs=[[0, 1]])


def frictionless_consumption(cap=1):
    t = binomial_tree()
    prices = {"0": 4, "0.0": 8, "0.1": 2}
    mkt = ConeMarket(t, 2, {n: frictionless_cone([s]) for n, s in prices.items()}, {})
    return mkt, UtilitySpec({n: cash_utility(cap) for n in t.order})
