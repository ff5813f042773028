"""Brute-force ground truth on the flattened problem.

Every instance is rewritten as one finite-dimensional program over all
adapted coordinates (one block per node) and solved without the backward
recursion.  Only the polyhedral primitives are shared with the engine.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, List, Optional, Sequence, Tuple

from .errors import Infeasible, UnboundedBelow
from .integrand import AdaptedLayout, IntegrandSpec
from .linalg import matvec, pinv
from .polyfunc import INF
from .polyhedron import Polyhedron, fm_eliminate
from .quad import hedge_layout, hedge_rows
from .tree import Policy, ScenarioTree


@dataclass
class FlatProgram:
    """``min sum_leaf p_leaf * a_leaf`` s.t. ``(x_path(leaf), a_leaf) in epi h_leaf``.

    Variables are the adapted coordinates followed by one epigraph variable
    per leaf.
    """

    layout: AdaptedLayout
    leaves: List[str]
    weights: List[Fraction]
    epi: Polyhedron

    @property
    def dim(self) -> int:
        return self.layout.size + len(self.leaves)

    def objective(self) -> List[Fraction]:
        return [Fraction(0)] * self.layout.size + list(self.weights)


def flatten(tree: ScenarioTree, spec: IntegrandSpec) -> FlatProgram:
    spec.validate(tree)
    layout = AdaptedLayout(tree, tuple(spec.dims))
    leaves = tree.leaves
    dim = layout.size + len(leaves)
    ineqs, eqs = [], []
    for k, leaf in enumerate(leaves):
        pos = layout.path_positions(leaf) + [layout.size + k]
        P = spec.leaf_funcs[leaf].epi.embed(dim, pos)
        ineqs += P.ineqs
        eqs += P.eqs
    epi = Polyhedron(dim, ineqs, eqs)
    return FlatProgram(layout, leaves, [tree.nodes[l].prob for l in leaves], epi)


def flat_feasible(tree: ScenarioTree, spec: IntegrandSpec) -> bool:
    return not flatten(tree, spec).epi.is_empty()


def _solve_lp(prog: FlatProgram):
    res = prog.epi.minimize(prog.objective())
    if res.status == "infeasible":
        raise Infeasible("no adapted decision has finite expected cost")
    if res.status == "unbounded":
        raise UnboundedBelow("flattened problem is unbounded below", ray=res.ray[:prog.layout.size])
    return res.value, res.x[:prog.layout.size]


def _solve_fm(prog: FlatProgram):
    """Eliminate every variable down to the value axis, then back-substitute."""
    dim = prog.dim
    # append theta >= objective as the last coordinate
    ineqs = [list(r[:-1]) + [0, r[-1]] for r in prog.epi.ineqs]
    eqs = [list(r[:-1]) + [0, r[-1]] for r in prog.epi.eqs]
    ineqs.append(prog.objective() + [-1, 0])
    stack = [Polyhedron(dim + 1, ineqs, eqs)]
    for _ in range(dim):
        stack.append(fm_eliminate(stack[-1], [0]))
    last = stack[-1]
    if last.is_empty():
        raise Infeasible("no adapted decision has finite expected cost")
    res = last.minimize([1])
    if res.status == "unbounded":
        raise UnboundedBelow("flattened problem is unbounded below")
    value = res.value
    tail = [value]
    for P in reversed(stack[:-1]):
        sl = P.substitute({i + 1: v for i, v in enumerate(tail)})
        lo = sl.minimize([1])
        if lo.status == "optimal":
            v = lo.value
        else:
            hi = sl.maximize([1])
            v = hi.value if hi.status == "optimal" else Fraction(0)
        tail.insert(0, v)
    return value, tuple(tail[:prog.layout.size])


def flatten_solve(tree: ScenarioTree, spec: IntegrandSpec, method: str = "lp"):
    """``(value, minimizer)`` of the flattened problem; the minimizer is a :class:`Policy`.

    ``method="lp"`` solves one exact LP, ``method="fm"`` eliminates all
    variables and back-substitutes (tiny instances only).
    """
    prog = flatten(tree, spec)
    if method == "lp":
        value, x = _solve_lp(prog)
    elif method == "fm":
        value, x = _solve_fm(prog)
    else:
        raise ValueError(f"unknown method {method!r}")
    return value, prog.layout.to_policy(x)


# -- least squares ------------------------------------------------------------

def least_squares_oracle(hp):
    """Minimize ``E (V_0 + sum z_t . dS_{t+1} - u)^2`` over all adapted coordinates at once.

    Normal equations in exact arithmetic; the minimum-norm solution is taken
    when they are singular.  Returns ``(value, Policy)``.
    """
    tree = hp.tree
    d = hp.d
    dims = hedge_layout(tree, d)
    layout = AdaptedLayout(tree, dims)
    rows = hedge_rows(hp)
    A, w, u = [], [], []
    for leaf in tree.leaves:
        flat = [Fraction(0)] * layout.size
        for pos, v in zip(layout.path_positions(leaf), rows[leaf]):
            flat[pos] = v
        A.append(flat)
        w.append(tree.nodes[leaf].prob)
        u.append(Fraction(hp.claim[leaf]))
    n = layout.size
    M = [[sum(w[k] * A[k][i] * A[k][j] for k in range(len(A))) for j in range(n)] for i in range(n)]
    rhs = [sum(w[k] * A[k][i] * u[k] for k in range(len(A))) for i in range(n)]
    x = matvec(pinv(M), rhs)
    resid = [sum(a * xi for a, xi in zip(row, x)) - uk for row, uk in zip(A, u)]
    value = sum((wk * r * r for wk, r in zip(w, resid)), Fraction(0))
    return value, layout.to_policy(x)


# -- value function probes --------------------------------------------------------

@dataclass
class PhiProbeReport:
    grid: List[Tuple[Fraction, ...]]
    values: List[object]
    minimizers: List[Optional[Policy]]
    convex: bool
    convexity_failures: List[Tuple[int, int]] = field(default_factory=list)
    fenchel_ok: Optional[bool] = None
    fenchel_tight_at: Optional[int] = None
    fenchel_tight: Optional[bool] = None
    radius: Optional[Fraction] = None


def _phi(builder, u, solver):
    tree, spec = builder(u)
    try:
        return solver(tree, spec)
    except Infeasible:
        return INF, None


def phi_probe(builder: Callable, grid: Sequence[Sequence], solver: Callable = flatten_solve,
              dual_bound: Optional[Callable] = None, tight_index: Optional[int] = 0,
              radius=None) -> PhiProbeReport:
    """Tabulate ``phi(u) = inf E f(x, u)`` on ``grid`` and test it.

    ``builder(u)`` returns ``(tree, spec)``.  Midpoint convexity is checked on
    every pair (midpoints are solved as extra points).  With ``dual_bound(u)``
    giving ``<u, y> + g(y)`` for a dual point ``y``, the Fenchel inequality
    ``phi(u) >= dual_bound(u)`` is checked everywhere and equality at
    ``grid[tight_index]``.
    """
    grid = [tuple(Fraction(v) for v in u) for u in grid]
    values, mins = [], []
    for u in grid:
        v, m = _phi(builder, u, solver)
        values.append(v)
        mins.append(m)
    failures = []
    for i in range(len(grid)):
        for j in range(i + 1, len(grid)):
            if values[i] == INF or values[j] == INF:
                continue
            mid = tuple((a + b) / 2 for a, b in zip(grid[i], grid[j]))
            vm, _ = _phi(builder, mid, solver)
            if vm == INF or vm > (values[i] + values[j]) / 2:
                failures.append((i, j))
    rep = PhiProbeReport(grid, values, mins, not failures, failures,
                         radius=None if radius is None else Fraction(radius))
    if dual_bound is not None:
        rep.fenchel_ok = all(v >= dual_bound(u) for u, v in zip(grid, values))
        if tight_index is not None:
            rep.fenchel_tight_at = tight_index
            rep.fenchel_tight = values[tight_index] == dual_bound(grid[tight_index])
    return rep
