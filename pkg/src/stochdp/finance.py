"""Financial models on scenario trees: superhedging and optimal consumption.

Superhedging decisions are ``x_0 = (V_0, z_0)`` and ``x_t = z_t`` for
``0 < t < T`` (no decision at the leaves).  Consumption decisions are
``x_t = (z_t, c_t)`` with ``z_{-1} = 0``.  Utilities are handled through
``g_t = -U_t``, which is convex polyhedral; the endowment ``u`` enters the
budget constraint as ``z_t - z_{t-1} + c_t + u_t in C_t``, so receiving
cash ``w`` corresponds to ``u = -w``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from . import lp
from .dd import generators
from .dp import check_linearity_L
from .errors import Infeasible, UnboundedBelow
from .integrand import AdaptedLayout, BellmanSpec, IntegrandSpec, bellman_to_integrand
from .oracle import flatten_solve
from .polyfunc import (INF, PolyFunc, minimum, polyfunc_conjugate, polyfunc_recession,
                       polyfunc_sum, same_function)
from .polyhedron import Polyhedron, cone_lineality, fm_eliminate
from .tree import Policy, ScenarioTree

Vec = Tuple[Fraction, ...]


# -- liquid markets -----------------------------------------------------------

@dataclass(frozen=True)
class LiquidMarket:
    tree: ScenarioTree
    S: Mapping[str, Vec]

    @property
    def d(self) -> int:
        return len(self.S[self.tree.root])

    def increment(self, nid: str) -> Vec:
        """``S(nid) - S(parent)``."""
        par = self.tree.nodes[nid].parent
        return tuple(Fraction(b) - Fraction(a) for a, b in zip(self.S[par], self.S[nid]))

    def gains_row(self, leaf: str) -> List[Fraction]:
        """Coefficients of ``sum_t z_t . dS_{t+1}`` over ``(z_0, ..., z_{T-1})``."""
        return [v for nid in self.tree.path(leaf)[1:] for v in self.increment(nid)]


def superhedge_dims(tree: ScenarioTree, d: int, with_capital: bool = True) -> Tuple[int, ...]:
    lead = 1 if with_capital else 0
    if tree.T == 0:
        return (lead,)
    return (lead + d,) + (d,) * (tree.T - 1) + (0,)


def build_superhedge(mkt: LiquidMarket, claim: Mapping[str, object],
                     feasibility: bool = False) -> IntegrandSpec:
    """``V_0 + indicator{V_0 + sum_t z_t . dS_{t+1} >= u}`` per leaf.

    With ``feasibility=True`` the capital variable is dropped and the
    integrand is ``indicator{sum_t z_t . dS_{t+1} >= u}``: its optimal value
    is 0 when the claim is superhedged at no cost and ``+inf`` otherwise.
    """
    tree = mkt.tree
    dims = superhedge_dims(tree, mkt.d, not feasibility)
    n = sum(dims)
    funcs = {}
    for leaf in tree.leaves:
        gains = mkt.gains_row(leaf)
        u = Fraction(claim[leaf])
        if feasibility:
            funcs[leaf] = PolyFunc.indicator(n, ineqs=[([-g for g in gains], -u)])
        else:
            slope = [1] + [0] * (n - 1)
            row = [-1] + [-g for g in gains]
            funcs[leaf] = PolyFunc.from_pieces(n, [(slope, 0)], ineqs=[(row, -u)])
    return IntegrandSpec(dims, funcs)


def no_arbitrage_check(mkt: LiquidMarket):
    """``(holds, witness)``: the cone ``{z : sum z_t . dS_{t+1} >= 0}`` is linear.

    The witness, when the condition fails, is an arbitrage strategy.
    """
    spec = build_superhedge(mkt, {l: 0 for l in mkt.tree.leaves}, feasibility=True)
    rep = check_linearity_L(mkt.tree, spec)
    return rep.is_linear, rep.witness


def strategy_gains(mkt: LiquidMarket, z: Policy, skip_capital: bool = False) -> Dict[str, Fraction]:
    """Terminal gain ``sum_t z_t . dS_{t+1}`` per leaf."""
    out = {}
    for leaf in mkt.tree.leaves:
        hist = z.history(mkt.tree, leaf)
        if skip_capital:
            hist = hist[1:]
        out[leaf] = sum((a * b for a, b in zip(mkt.gains_row(leaf), hist)), Fraction(0))
    return out


# -- markets with convex cone constraints ---------------------------------------

def cone(d: int, rows: Sequence[Sequence] = (), eqs: Sequence[Sequence] = ()) -> Polyhedron:
    """``{x in Q^d : a.x <= 0 for a in rows, a.x = 0 for a in eqs}``."""
    return Polyhedron(d, [list(a) + [0] for a in rows], [list(a) + [0] for a in eqs])


def zero_cone(d: int) -> Polyhedron:
    return cone(d, eqs=[[int(i == j) for j in range(d)] for i in range(d)])


def frictionless_cone(prices: Sequence) -> Polyhedron:
    """Portfolios that cost nothing at unit prices ``(1, s)``: ``x . (1, s) <= 0``."""
    return cone(len(prices) + 1, [[1] + list(prices)])


def bid_ask_cone(bid, ask) -> Polyhedron:
    """Two assets (cash, stock): buying at ``ask`` and selling at ``bid`` is free."""
    return cone(2, [[1, ask], [1, bid]])


def polar(K: Polyhedron) -> Polyhedron:
    """``K* = {y : y.x <= 0 for x in K}`` from the generators of ``K``."""
    _, rays, lines = generators(K)
    return cone(K.dim, rays, lines)


@dataclass(frozen=True)
class ConeMarket:
    tree: ScenarioTree
    d: int
    C: Mapping[str, Polyhedron]
    D: Mapping[str, Polyhedron]

    def __post_init__(self):
        D = dict(self.D)
        for nid in self.tree.order:
            if nid not in self.C or not self.C[nid].is_homogeneous or self.C[nid].dim != self.d:
                raise ValueError(f"C at node {nid!r} must be a cone in dimension {self.d}")
            if self.tree.nodes[nid].stage == self.tree.T:
                given = D.get(nid)
                if given is not None and not _is_zero_cone(given):
                    raise ValueError(f"D at leaf {nid!r} must be {{0}}")
                D[nid] = zero_cone(self.d)
            elif nid not in D:
                D[nid] = cone(self.d)
            elif not D[nid].is_homogeneous or D[nid].dim != self.d:
                raise ValueError(f"D at node {nid!r} must be a cone in dimension {self.d}")
        object.__setattr__(self, "D", D)


def _is_zero_cone(K: Polyhedron) -> bool:
    basis, _, _ = cone_lineality(K)
    if basis:
        return False
    for i in range(K.dim):
        for s in (1, -1):
            c = [0] * K.dim
            c[i] = s
            res = K.maximize(c)
            if res.status != "optimal" or res.value != 0:
                return False
    return True


@dataclass(frozen=True)
class UtilitySpec:
    """Per node, ``g = -U`` as a convex polyhedral function on ``Q^d``.

    ``upper_bounds`` optionally certifies ``U <= m`` node-wise.
    """

    g: Mapping[str, PolyFunc]
    upper_bounds: Optional[Mapping[str, Fraction]] = None

    def U(self, nid: str, c) -> object:
        v = self.g[nid](c)
        return -INF if v == INF else -v


def capped_linear_utility(d: int, weights: Sequence, cap, domain_eqs=()) -> PolyFunc:
    """``g = -min(w.c, cap)`` on ``c >= 0`` (plus optional equalities)."""
    w = [Fraction(v) for v in weights]
    nonneg = [([-int(i == j) for j in range(d)], 0) for i in range(d)]
    return PolyFunc.from_pieces(d, [([-v for v in w], 0), ([0] * d, -Fraction(cap))],
                                ineqs=nonneg, eqs=[(a, 0) for a in domain_eqs])


def consumption_bellman(mkt: ConeMarket, util: UtilitySpec,
                        endowment: Optional[Mapping[str, Sequence]] = None) -> BellmanSpec:
    """Stage costs ``g_t(c_t) + indicator{dz_t + c_t + u_t in C_t, z_t in D_t}``."""
    d = mkt.d
    tree = mkt.tree
    costs = {}
    for nid in tree.order:
        u = [Fraction(v) for v in (endowment or {}).get(nid, [0] * d)]
        # variables: (z_prev, c_prev, z, c)
        ineqs, eqs = [], []
        C, D = mkt.C[nid], mkt.D[nid]
        for r in C.ineqs:
            a = list(r[:-1])
            ineqs.append(([-v for v in a] + [0] * d + a + a, -sum(x * y for x, y in zip(a, u))))
        for r in C.eqs:
            a = list(r[:-1])
            eqs.append(([-v for v in a] + [0] * d + a + a, -sum(x * y for x, y in zip(a, u))))
        for r in D.ineqs:
            ineqs.append(([0] * (2 * d) + list(r[:-1]) + [0] * d, 0))
        for r in D.eqs:
            eqs.append(([0] * (2 * d) + list(r[:-1]) + [0] * d, 0))
        cons = PolyFunc.indicator(4 * d, ineqs=ineqs, eqs=eqs)
        g = util.g[nid].embed(4 * d, range(3 * d, 4 * d))
        costs[nid] = polyfunc_sum(g, cons)
    dims = (2 * d,) * (tree.T + 1)
    return BellmanSpec(dims, (Fraction(0),) * (2 * d), costs)


def build_consumption(mkt: ConeMarket, util: UtilitySpec,
                      endowment: Optional[Mapping[str, Sequence]] = None) -> IntegrandSpec:
    """Leaf integrands ``sum_t g_t(c_t)`` plus the budget and holding constraints.

    The optimal value is ``phi(u) = -(maximal expected utility)``.
    """
    return bellman_to_integrand(mkt.tree, consumption_bellman(mkt, util, endowment))


# -- conditions for the duality theory -------------------------------------------

def _flat_market_cone(mkt: ConeMarket, with_c: bool):
    """Rows of ``{(z, c) : dz_t + c_t in C_t, z_t in D_t}`` in a node-block layout.

    Returns ``(layout, ineqs, eqs)`` where each node block is ``(z, c)`` or
    just ``z``.
    """
    d = mkt.d
    tree = mkt.tree
    w = 2 * d if with_c else d
    layout = AdaptedLayout(tree, (w,) * (tree.T + 1))
    n = layout.size
    ineqs, eqs = [], []

    def row(nid, a, cone_row):
        out = [Fraction(0)] * (n + 1)
        o = layout.offsets[nid]
        par = tree.nodes[nid].parent
        for j, v in enumerate(a):
            out[o + j] += v
            if cone_row:
                if with_c:
                    out[o + d + j] += v
                if par is not None:
                    out[layout.offsets[par] + j] -= v
        return out
    for nid in tree.order:
        for r in mkt.C[nid].ineqs:
            ineqs.append(row(nid, r[:-1], True))
        for r in mkt.C[nid].eqs:
            eqs.append(row(nid, r[:-1], True))
        for r in mkt.D[nid].ineqs:
            ineqs.append(row(nid, r[:-1], False))
        for r in mkt.D[nid].eqs:
            eqs.append(row(nid, r[:-1], False))
    return layout, ineqs, eqs


def no_scalable_arbitrage_check(mkt: ConeMarket):
    """``(holds, witness)``: no nonzero ``c >= 0`` is financed by the recession cones.

    Maximizes the sum of all consumption coordinates with ``c <= 1``; the
    condition holds iff the maximum is 0.  The witness is a node-keyed map
    of consumption vectors.
    """
    d = mkt.d
    layout, ineqs, eqs = _flat_market_cone(mkt, True)
    n = layout.size
    cidx = [layout.offsets[nid] + d + j for nid in mkt.tree.order for j in range(d)]
    for i in cidx:
        lo = [0] * (n + 1)
        lo[i] = -1
        hi = [0] * (n + 1)
        hi[i] = 1
        hi[-1] = 1
        ineqs += [lo, hi]
    P = Polyhedron(n, ineqs, eqs)
    obj = [0] * n
    for i in cidx:
        obj[i] = 1
    res = P.maximize(obj)
    if res.value == 0:
        return True, None
    c = {nid: tuple(res.x[layout.offsets[nid] + d + j] for j in range(d)) for nid in mkt.tree.order}
    return False, c


def z_set_linearity(mkt: ConeMarket):
    """Linearity of ``{z adapted : dz_t in C_t, z_t in D_t}``; returns ``(linear, witness)``."""
    layout, ineqs, eqs = _flat_market_cone(mkt, False)
    _, linear, w = cone_lineality(Polyhedron(layout.size, ineqs, eqs))
    return linear, None if linear else layout.to_policy(w)


def _nonneg_orthant_indicator(d: int) -> PolyFunc:
    return PolyFunc.indicator(d, ineqs=[([-int(i == j) for j in range(d)], 0) for i in range(d)])


def growth_conditions(g: PolyFunc):
    """``(literal, relaxed)`` growth checks on ``g = -U``.

    Literal: ``g_inf`` is the indicator of the nonnegative orthant.  Relaxed:
    ``g_inf`` vanishes on its domain and that domain lies in the orthant
    (domain-restricted utilities such as cash-only consumption).
    """
    rec = polyfunc_recession(g)
    d = g.n
    literal = same_function(rec, _nonneg_orthant_indicator(d))
    dom = rec.domain()
    vanishes = True
    for slope, off in rec.pieces:
        res = dom.maximize(slope)
        if res.status != "optimal" or res.value + off != 0:
            vanishes = False
    try:
        vanishes = vanishes and minimum(rec) == 0
    except UnboundedBelow:
        vanishes = False
    in_orthant = all(dom.minimize([int(i == j) for j in range(d)]).value == 0 for i in range(d)) \
        if not dom.is_empty() else True
    return literal, vanishes and in_orthant


def consumption_cone_linearity(mkt: ConeMarket, util: UtilitySpec):
    """Linearity of ``{c : exists z, sum_t g_t_inf(c_t) <= 0 on every path, dz + c in C, z in D}``.

    Built with one epigraph variable per node, projected onto ``c`` by
    Fourier-Motzkin elimination.
    """
    d = mkt.d
    tree = mkt.tree
    layout, ineqs, eqs = _flat_market_cone(mkt, True)
    nodes = list(tree.order)
    base = layout.size
    n = base + len(nodes)
    ineqs = [list(r[:-1]) + [0] * len(nodes) + [r[-1]] for r in ineqs]
    eqs = [list(r[:-1]) + [0] * len(nodes) + [r[-1]] for r in eqs]
    tau = {nid: base + k for k, nid in enumerate(nodes)}
    for nid in nodes:
        rec = polyfunc_recession(util.g[nid])
        pos = [layout.offsets[nid] + d + j for j in range(d)] + [tau[nid]]
        P = rec.epi.embed(n, pos)
        ineqs += [list(r) for r in P.ineqs]
        eqs += [list(r) for r in P.eqs]
    for leaf in tree.leaves:
        r = [0] * (n + 1)
        for nid in tree.path(leaf):
            r[tau[nid]] = 1
        ineqs.append(r)
    full = Polyhedron(n, ineqs, eqs)
    zpos = [layout.offsets[nid] + j for nid in nodes for j in range(d)]
    proj = fm_eliminate(full, zpos + list(tau.values()))
    _, linear, _ = cone_lineality(proj)
    return linear


@dataclass
class ConditionsReport:
    growth_literal: bool
    growth_relaxed: bool
    upper_bound: bool
    no_scalable_arbitrage: bool
    z_linear: bool
    consumption_cone_linear: bool
    L_linear: bool
    primal_finite: bool
    holds: bool
    notes: List[str] = field(default_factory=list)

    def as_dict(self):
        return {k: getattr(self, k) for k in ("growth_literal", "growth_relaxed", "upper_bound",
                                              "no_scalable_arbitrage", "z_linear", "consumption_cone_linear",
                                              "L_linear", "primal_finite", "holds", "notes")}


def check_thm_ocp_conditions(mkt: ConeMarket, util: UtilitySpec) -> ConditionsReport:
    """Hypotheses that guarantee attainment and a zero duality gap.

    ``holds`` requires the utility bound and a finite primal value, plus
    linearity of the cost-free cone either directly or through the
    z-set condition combined with growth and no scalable arbitrage (or the
    linearity of the consumption cone as the alternative).
    """
    notes = []
    lit, rel = True, True
    bound = True
    for nid in mkt.tree.order:
        g = util.g[nid]
        l, r = growth_conditions(g)
        lit &= l
        rel &= r
        try:
            low = minimum(g)
        except UnboundedBelow:
            bound = False
            notes.append(f"utility at node {nid!r} is unbounded above")
            continue
        if util.upper_bounds is not None:
            m = Fraction(util.upper_bounds[nid])
            if low < -m:
                bound = False
                notes.append(f"utility at node {nid!r} exceeds the certificate {m}")
        elif low == INF:
            bound = False
    nsa, _ = no_scalable_arbitrage_check(mkt)
    zlin, _ = z_set_linearity(mkt)
    rem = consumption_cone_linearity(mkt, util)
    spec = build_consumption(mkt, util)
    try:
        flatten_solve(mkt.tree, spec)
        finite = True
        Llin = check_linearity_L(mkt.tree, spec).is_linear
    except (Infeasible, UnboundedBelow):
        finite = False
        Llin = False
        notes.append("primal value is not finite")
    holds = bound and finite and (Llin or (zlin and ((rel and nsa) or rem)))
    return ConditionsReport(lit, rel, bound, nsa, zlin, rem, Llin, finite, holds, notes)


# -- the dual over consistent price systems --------------------------------------

@dataclass
class DualResult:
    status: str
    value: object
    y: Optional[Dict[str, Vec]]

    def pairing(self, tree: ScenarioTree, u: Mapping[str, Sequence]) -> Fraction:
        """``E sum_t u_t . y_t``."""
        return sum((tree.nodes[n].prob * sum(Fraction(a) * b for a, b in zip(u[n], self.y[n]))
                    for n in tree.order), Fraction(0))


def build_consumption_dual(mkt: ConeMarket, util: UtilitySpec, index: str = "derivation",
                           endowment: Optional[Mapping[str, Sequence]] = None):
    """Maximize ``E sum_t (u_t . y_t + U*_t(y_t))`` over adapted consistent price systems.

    ``U*(y) = inf_c {c.y - U(c)} = -g*(-y)``.  Feasibility is ``y_t in C_t*``
    together with, for ``index="derivation"``, ``E_t y_{t+1} - y_t in D_t*``
    at non-leaf nodes, or for ``index="displayed"``, ``y_t - y_{t-1} in D_t*``
    with ``y_{-1} = 0``.  Returns a :class:`DualResult`; the value is
    ``-inf`` when no consistent price system exists.  Without an endowment
    ``u = 0``.
    """
    if index not in ("derivation", "displayed"):
        raise ValueError(f"unknown dual indexing {index!r}")
    tree = mkt.tree
    d = mkt.d
    nodes = list(tree.order)
    k = d + 1
    n = k * len(nodes)
    off = {nid: k * i for i, nid in enumerate(nodes)}
    A, b, E, e = [], [], [], []

    def put(terms, rhs, eq=False):
        row = [Fraction(0)] * n
        for pos, v in terms:
            row[pos] += v
        (E if eq else A).append(row)
        (e if eq else b).append(Fraction(rhs))
    for nid in nodes:
        o = off[nid]
        # (-y, -beta) in epi g*
        gs = polyfunc_conjugate(util.g[nid])
        for r in gs.epi.ineqs:
            put([(o + j, -r[j]) for j in range(d)] + [(o + d, -r[d])], r[-1])
        for r in gs.epi.eqs:
            put([(o + j, -r[j]) for j in range(d)] + [(o + d, -r[d])], r[-1], eq=True)
        Cs = polar(mkt.C[nid])
        for r in Cs.ineqs:
            put([(o + j, r[j]) for j in range(d)], 0)
        for r in Cs.eqs:
            put([(o + j, r[j]) for j in range(d)], 0, eq=True)
        Ds = polar(mkt.D[nid])
        if index == "derivation":
            kids = tree.children(nid)
            if not kids:
                continue

            def incr(a):
                terms = [(off[c] + j, p * a[j]) for c, p in kids for j in range(d)]
                return terms + [(o + j, -a[j]) for j in range(d)]
        else:
            par = tree.nodes[nid].parent

            def incr(a):
                terms = [(o + j, a[j]) for j in range(d)]
                if par is not None:
                    terms += [(off[par] + j, -a[j]) for j in range(d)]
                return terms
        for r in Ds.ineqs:
            put(incr(r[:-1]), 0)
        for r in Ds.eqs:
            put(incr(r[:-1]), 0, eq=True)
    obj = [Fraction(0)] * n
    for nid in nodes:
        p = tree.nodes[nid].prob
        obj[off[nid] + d] = p
        for j, a in enumerate((endowment or {}).get(nid, ())):
            obj[off[nid] + j] += p * Fraction(a)
    res = lp.maximize(obj, A, b, E, e)
    if res.status == "infeasible":
        return DualResult("infeasible", -INF, None)
    if res.status == "unbounded":
        return DualResult("unbounded", INF, None)
    y = {nid: tuple(res.x[off[nid] + j] for j in range(d)) for nid in nodes}
    return DualResult("optimal", res.value, y)


def dual_objective(mkt: ConeMarket, util: UtilitySpec, y: Mapping[str, Sequence]) -> object:
    """``E sum_t U*_t(y_t)`` by direct evaluation of the conjugates."""
    total = Fraction(0)
    for nid in mkt.tree.order:
        gs = polyfunc_conjugate(util.g[nid])
        v = gs([-Fraction(a) for a in y[nid]])
        if v == INF:
            return -INF
        total -= mkt.tree.nodes[nid].prob * v
    return total


def is_consistent_price_system(mkt: ConeMarket, y: Mapping[str, Sequence],
                               index: str = "derivation") -> bool:
    tree = mkt.tree
    for nid in tree.order:
        yv = [Fraction(a) for a in y[nid]]
        if not polar(mkt.C[nid]).contains_point(yv):
            return False
        if index == "derivation":
            kids = tree.children(nid)
            if not kids:
                continue
            inc = [sum(p * Fraction(y[c][j]) for c, p in kids) - yv[j] for j in range(mkt.d)]
        else:
            par = tree.nodes[nid].parent
            prev = [Fraction(0)] * mkt.d if par is None else [Fraction(a) for a in y[par]]
            inc = [a - b for a, b in zip(yv, prev)]
        if not polar(mkt.D[nid]).contains_point(inc):
            return False
    return True


@dataclass
class DualityGapReport:
    primal_value: object
    dual_value: object
    gap: object
    weak_duality: bool
    zero_gap: bool
    conditions: Optional[ConditionsReport] = None
    dual_y: Optional[Dict[str, Vec]] = None
    policy: Optional[Policy] = None


def duality_gap(mkt: ConeMarket, util: UtilitySpec, index: str = "derivation",
                with_conditions: bool = True,
                endowment: Optional[Mapping[str, Sequence]] = None) -> DualityGapReport:
    """Primal value (maximal expected utility) against the dual value.

    ``gap = primal + dual``; weak duality says ``dual <= -primal``.
    """
    spec = build_consumption(mkt, util, endowment)
    try:
        phi, pol = flatten_solve(mkt.tree, spec)
        primal = -phi
    except Infeasible:
        primal, pol = -INF, None
    dual = build_consumption_dual(mkt, util, index, endowment)
    finite = primal not in (INF, -INF) and dual.value not in (INF, -INF)
    gap = primal + dual.value if finite else None
    weak = dual.value <= -primal
    cond = check_thm_ocp_conditions(mkt, util) if with_conditions else None
    return DualityGapReport(primal, dual.value, gap, weak, gap == 0, cond, dual.y, pol)
