"""Backward recursion, policy recovery and linearity analysis on scenario trees.

For a leaf integrand ``h`` the recursion is

    h~_T = h,   h_t = E_t h~_t,   h~_{t-1}(x^{t-1}) = inf_{x_t} h_t(x^{t-1}, x_t).

At every node the cone ``N_t = {x_t : h_t_inf(0, ..., 0, x_t) <= 0}`` must be
a linear space; the run stops with :class:`LinearityViolated` otherwise.
Functions are stored over the full history ``x^t``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from .errors import Infeasible, LinearityViolated, UnboundedBelow
from .integrand import (AdaptedLayout, BellmanSpec, IntegrandSpec, bellman_to_integrand,
                        cumulative, expected_objective)
from .linalg import project_orthogonal
from .polyfunc import (INF, PolyFunc, argmin_slice, evaluate, polyfunc_partial_min,
                       polyfunc_recession, polyfunc_sum, same_function, weighted_sum)
from .polyhedron import Polyhedron, cone_lineality, same_set
from .tree import Policy, ScenarioTree, expectation


@dataclass
class NodeCone:
    """``N_t`` at one node with a basis of its lineality space."""

    cone: Polyhedron
    basis: List[tuple]


@dataclass
class NodeFunctionTable:
    dims: Tuple[int, ...]
    h: Dict[str, PolyFunc] = field(default_factory=dict)
    htilde: Dict[str, PolyFunc] = field(default_factory=dict)
    recession: Dict[str, PolyFunc] = field(default_factory=dict)
    cones: Dict[str, NodeCone] = field(default_factory=dict)
    value: object = INF

    @property
    def feasible(self) -> bool:
        return self.value != INF


def node_cone(rec: PolyFunc, before: int) -> Polyhedron:
    """``{x_t : rec(0, ..., 0, x_t) <= 0}`` for a recession function over ``x^t``."""
    return rec.restrict([0] * before).level_set(0)


def _check_cone(nid, stage, cone: Polyhedron) -> NodeCone:
    basis, linear, witness = cone_lineality(cone)
    if not linear:
        raise LinearityViolated(nid, witness, stage)
    return NodeCone(cone, basis)


def backward_pass(tree: ScenarioTree, spec: IntegrandSpec) -> NodeFunctionTable:
    """Run the recursion from the leaves to the root.

    The table's ``value`` is ``inf_x E h(x)``, or ``INF`` when no adapted
    point is feasible.
    """
    spec.validate(tree)
    cum = cumulative(spec.dims)
    table = NodeFunctionTable(tuple(spec.dims))
    for t in range(tree.T, -1, -1):
        coords = list(range(cum[t], cum[t + 1]))
        for nid in tree.stage(t):
            if t == tree.T:
                h = spec.leaf_funcs[nid]
            else:
                h = weighted_sum([(p, table.htilde[c]) for c, p in tree.children(nid)])
            table.h[nid] = h
            if h.is_infinite:
                table.htilde[nid] = PolyFunc.infinite(cum[t])
                continue
            rec = polyfunc_recession(h)
            table.recession[nid] = rec
            table.cones[nid] = _check_cone(nid, t, node_cone(rec, cum[t]))
            try:
                table.htilde[nid] = polyfunc_partial_min(h, coords)
            except UnboundedBelow as exc:
                # N_t linear makes the infimum attained; reaching this is a bug
                raise AssertionError(f"unbounded partial minimum at node {nid!r} "
                                     f"although N_t is linear") from exc
    root = table.htilde[tree.root]
    table.value = INF if root.is_infinite else evaluate(root, ())
    return table


def forward_policy(tree: ScenarioTree, table: NodeFunctionTable) -> Tuple[Policy, Fraction]:
    """Optimal adapted decisions with ``x_t`` orthogonal to ``N_t`` at every node."""
    if not table.feasible:
        raise Infeasible("no adapted decision has finite expected cost")
    values: Dict[str, tuple] = {}
    for nid in tree.order:
        hist = tuple(v for p in tree.path(nid)[:-1] for v in values[p])
        basis = table.cones[nid].basis
        _, x = argmin_slice(table.h[nid], hist, basis)
        x = project_orthogonal(x, basis)
        values[nid] = tuple(x)
    return Policy(values), table.value


@dataclass
class OptimalityReport:
    ok: bool
    stage_values: Dict[int, object]
    value: object
    first_violation: Optional[Tuple[str, str]] = None
    argmin_failures: List[str] = field(default_factory=list)

    def as_dict(self):
        return {"ok": self.ok, "value": self.value, "stage_values": self.stage_values,
                "first_violation": self.first_violation, "argmin_failures": self.argmin_failures}


def verify_optimality(tree: ScenarioTree, table: NodeFunctionTable, policy: Policy) -> OptimalityReport:
    """Check the node-wise argmin condition and ``E h_t(x^t) = inf`` for every t."""
    stage_vals: Dict[int, object] = {}
    node_vals = {}
    failures = []
    first = None
    for nid in tree.order:
        hist = policy.history(tree, nid)
        t = tree.nodes[nid].stage
        n_t = table.dims[t]
        v = evaluate(table.h[nid], hist)
        node_vals[nid] = v
        best = evaluate(table.htilde[nid], hist[:len(hist) - n_t])
        if v != best:
            failures.append(nid)
            if first is None:
                first = (nid, "argmin")
    for t in range(tree.T + 1):
        vals = [node_vals[n] for n in tree.stage(t)]
        if any(v == INF for v in vals):
            stage_vals[t] = INF
        else:
            stage_vals[t] = expectation(tree, {n: node_vals[n] for n in tree.stage(t)}, t)
        if stage_vals[t] != table.value and first is None:
            first = (f"stage {t}", "expectation")
    ok = first is None
    return OptimalityReport(ok, stage_vals, table.value, first, failures)


# -- linearity of the cone of cost-free directions -------------------------

@dataclass
class LinearityReport:
    is_linear: bool
    witness: Optional[Policy]
    nodewise: bool
    direct: bool
    node: Optional[str] = None
    node_witness: Optional[tuple] = None


def recession_spec(spec: IntegrandSpec) -> IntegrandSpec:
    return spec.with_funcs({l: polyfunc_recession(f) for l, f in spec.leaf_funcs.items()})


def direct_cost_free_cone(tree: ScenarioTree, spec: IntegrandSpec) -> Polyhedron:
    """``{x adapted : h_inf(x(w), w) <= 0 for all leaves}`` in the flat layout."""
    layout = AdaptedLayout(tree, tuple(spec.dims))
    ineqs, eqs = [], []
    for leaf in tree.leaves:
        rec = polyfunc_recession(spec.leaf_funcs[leaf])
        cone = rec.level_set(0).embed(layout.size, layout.path_positions(leaf))
        ineqs += cone.ineqs
        eqs += cone.eqs
    return Polyhedron(layout.size, ineqs, eqs)


def check_linearity_L(tree: ScenarioTree, spec: IntegrandSpec) -> LinearityReport:
    """Decide whether the cost-free adapted directions form a linear space.

    Two independent routes must agree: the node-wise cones of a recession
    backward pass, and a direct lineality test of the flattened cone.
    """
    from .oracle import flat_feasible
    spec.validate(tree)
    if not flat_feasible(tree, spec):
        raise Infeasible("no adapted point has finite cost")
    rspec = recession_spec(spec)
    node, node_w = None, None
    try:
        backward_pass(tree, rspec)
        nodewise = True
    except LinearityViolated as exc:
        nodewise = False
        node, node_w = exc.node, exc.witness
    cone = direct_cost_free_cone(tree, spec)
    _, direct, flat_w = cone_lineality(cone)
    if nodewise != direct:
        raise AssertionError(f"linearity verdicts disagree: node-wise {nodewise}, direct {direct}")
    witness = None if direct else AdaptedLayout(tree, tuple(spec.dims)).to_policy(flat_w)
    return LinearityReport(direct, witness, nodewise, direct, node, node_w)


# -- separable (Bellman) form ---------------------------------------------------

@dataclass
class BellmanResult:
    V: Dict[str, PolyFunc]
    Vtilde: Dict[str, PolyFunc]
    cones: Dict[str, NodeCone]
    policy: Optional[Policy]
    value: object


def bellman_pass(tree: ScenarioTree, bspec: BellmanSpec) -> BellmanResult:
    """Value functions ``V_t(x_t)`` of the separable problem and an optimal policy."""
    bspec.validate(tree)
    dims = bspec.dims
    prev = [len(bspec.x_init)] + list(dims[:-1])
    V: Dict[str, PolyFunc] = {}
    W: Dict[str, PolyFunc] = {}
    Vt: Dict[str, PolyFunc] = {}
    cones: Dict[str, NodeCone] = {}
    for t in range(tree.T, -1, -1):
        m, n = prev[t], dims[t]
        for nid in tree.stage(t):
            if t == tree.T:
                V[nid] = PolyFunc.zero(n)
            else:
                V[nid] = weighted_sum([(p, Vt[c]) for c, p in tree.children(nid)])
            w = polyfunc_sum(bspec.stage_costs[nid], V[nid].embed(m + n, range(m, m + n)))
            W[nid] = w
            if w.is_infinite:
                Vt[nid] = PolyFunc.infinite(m)
                continue
            cones[nid] = _check_cone(nid, t, node_cone(polyfunc_recession(w), m))
            Vt[nid] = polyfunc_partial_min(w, range(m, m + n))
    root = Vt[tree.root]
    value = evaluate(root, bspec.x_init) if not root.is_infinite else INF
    if value == INF:
        return BellmanResult(V, Vt, cones, None, INF)
    values: Dict[str, tuple] = {}
    for nid in tree.order:
        t = tree.nodes[nid].stage
        par = tree.nodes[nid].parent
        state = bspec.x_init if par is None else values[par]
        basis = cones[nid].basis
        _, x = argmin_slice(W[nid], state, basis)
        values[nid] = tuple(project_orthogonal(x, basis))
    return BellmanResult(V, Vt, cones, Policy(values), value)


def bellman_consistency(tree: ScenarioTree, bspec: BellmanSpec):
    """Value of the separable recursion, of the generic recursion on the same problem,
    and the generic objective of the separable policy."""
    res = bellman_pass(tree, bspec)
    spec = bellman_to_integrand(tree, bspec)
    table = backward_pass(tree, spec)
    obj = INF if res.policy is None else expected_objective(tree, spec, res.policy)
    return res.value, table.value, obj


# -- recession of conditional expectations ---------------------------------------

@dataclass
class CommutationReport:
    ok: bool
    nodes: Dict[str, Tuple[bool, bool]]


def recession_commutation_check(tree: ScenarioTree, spec: IntegrandSpec,
                                table: Optional[NodeFunctionTable] = None) -> CommutationReport:
    """Compare ``(E h~)_inf`` with ``E (h~_inf)`` at every internal node.

    Each node records (epigraphs equal, zero-level sets equal).
    """
    if table is None:
        table = backward_pass(tree, spec)
    out = {}
    for nid in tree.order:
        kids = tree.children(nid)
        if not kids or table.h[nid].is_infinite:
            continue
        lhs = polyfunc_recession(table.h[nid])
        rhs = weighted_sum([(p, polyfunc_recession(table.htilde[c])) for c, p in kids])
        epi_eq = same_function(lhs, rhs)
        lev_eq = same_set(lhs.level_set(0), rhs.level_set(0))
        out[nid] = (epi_eq, lev_eq)
    return CommutationReport(all(a and b for a, b in out.values()), out)


@dataclass
class Solution:
    value: object
    policy: Optional[Policy]
    table: NodeFunctionTable
    report: Optional[OptimalityReport] = None
    commutation: Optional[CommutationReport] = None


def solve(tree: ScenarioTree, spec: IntegrandSpec, check_level: str = "fast") -> Solution:
    """Backward pass, forward policy and optimality report; ``full`` adds the
    recession commutation check."""
    table = backward_pass(tree, spec)
    if not table.feasible:
        raise Infeasible("no adapted decision has finite expected cost")
    policy, value = forward_policy(tree, table)
    report = verify_optimality(tree, table, policy)
    comm = recession_commutation_check(tree, spec, table) if check_level == "full" else None
    return Solution(value, policy, table, report, comm)
