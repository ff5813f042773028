"""Problem data shared by the recursion and the flattened oracle.

An :class:`IntegrandSpec` gives one convex polyhedral function per leaf
over the full decision history ``x = (x_0, ..., x_T)``.  A
:class:`BellmanSpec` gives separable stage costs ``k_t(x_{t-1}, x_t)``.
:class:`AdaptedLayout` numbers the coordinates of an adapted process, one
block per node, so that a whole policy is a single vector.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from .errors import LowerBoundViolated, UnboundedBelow
from .polyfunc import PolyFunc, minimum, polyfunc_sum
from .tree import Policy, ScenarioTree


def cumulative(dims: Sequence[int]) -> List[int]:
    """``[0, n_0, n_0+n_1, ...]``."""
    out = [0]
    for d in dims:
        out.append(out[-1] + d)
    return out


@dataclass(frozen=True)
class IntegrandSpec:
    dims: Tuple[int, ...]
    leaf_funcs: Mapping[str, PolyFunc]
    lower_bounds: Optional[Mapping[str, Fraction]] = None

    @property
    def n(self) -> int:
        return sum(self.dims)

    def validate(self, tree: ScenarioTree):
        if len(self.dims) != tree.T + 1:
            raise ValueError(f"{len(self.dims)} stage dimensions for horizon {tree.T}")
        for leaf in tree.leaves:
            f = self.leaf_funcs.get(leaf)
            if f is None:
                raise ValueError(f"no integrand at leaf {leaf!r}")
            if f.n != self.n:
                raise ValueError(f"integrand at leaf {leaf!r} has dimension {f.n}, expected {self.n}")
        if self.lower_bounds is not None:
            check_lower_bounds(self)

    def with_funcs(self, funcs: Mapping[str, PolyFunc]) -> "IntegrandSpec":
        return IntegrandSpec(self.dims, dict(funcs), None)


def check_lower_bounds(spec: IntegrandSpec):
    """Verify the certificate ``f(., leaf) >= m(leaf)`` by exact LP."""
    for leaf, m in spec.lower_bounds.items():
        f = spec.leaf_funcs[leaf]
        try:
            low = minimum(f)
        except UnboundedBelow:
            raise LowerBoundViolated(f"integrand at leaf {leaf!r} is unbounded below") from None
        if low < Fraction(m):
            raise LowerBoundViolated(f"integrand at leaf {leaf!r} reaches {low} < {m}")


@dataclass(frozen=True)
class BellmanSpec:
    dims: Tuple[int, ...]
    x_init: Tuple[Fraction, ...]
    stage_costs: Mapping[str, PolyFunc]

    def validate(self, tree: ScenarioTree):
        if len(self.dims) != tree.T + 1:
            raise ValueError(f"{len(self.dims)} stage dimensions for horizon {tree.T}")
        prev = [len(self.x_init)] + list(self.dims[:-1])
        for nid in tree.order:
            t = tree.nodes[nid].stage
            k = self.stage_costs.get(nid)
            if k is None:
                raise ValueError(f"no stage cost at node {nid!r}")
            if k.n != prev[t] + self.dims[t]:
                raise ValueError(f"stage cost at node {nid!r} has dimension {k.n}, "
                                 f"expected {prev[t] + self.dims[t]}")


def bellman_to_integrand(tree: ScenarioTree, bspec: BellmanSpec) -> IntegrandSpec:
    """The equivalent leaf integrand ``sum_t k_t(x_{t-1}, x_t)`` along each path."""
    bspec.validate(tree)
    cum = cumulative(bspec.dims)
    n = cum[-1]
    funcs = {}
    for leaf in tree.leaves:
        total = None
        for t, nid in enumerate(tree.path(leaf)):
            k = bspec.stage_costs[nid]
            if t == 0:
                k = k.restrict(bspec.x_init)
                pos = list(range(cum[0], cum[1]))
            else:
                pos = list(range(cum[t - 1], cum[t + 1]))
            term = k.embed(n, pos)
            total = term if total is None else polyfunc_sum(total, term)
        funcs[leaf] = total
    return IntegrandSpec(tuple(bspec.dims), funcs)


@dataclass(frozen=True)
class AdaptedLayout:
    """Coordinates of adapted processes: one block of ``n_t`` entries per stage-t node."""

    tree: ScenarioTree
    dims: Tuple[int, ...]
    offsets: Mapping[str, int] = field(init=False)
    size: int = field(init=False)

    def __post_init__(self):
        offs: Dict[str, int] = {}
        pos = 0
        for nid in self.tree.order:
            offs[nid] = pos
            pos += self.dims[self.tree.nodes[nid].stage]
        object.__setattr__(self, "offsets", offs)
        object.__setattr__(self, "size", pos)

    def block(self, nid: str) -> List[int]:
        o = self.offsets[nid]
        return list(range(o, o + self.dims[self.tree.nodes[nid].stage]))

    def path_positions(self, nid: str) -> List[int]:
        """Flat positions of ``x^t`` at ``nid``, in history order."""
        return [i for p in self.tree.path(nid) for i in self.block(p)]

    def to_policy(self, vec) -> Policy:
        return Policy({nid: tuple(Fraction(vec[i]) for i in self.block(nid)) for nid in self.tree.order})

    def from_policy(self, policy: Policy) -> Tuple[Fraction, ...]:
        out = [Fraction(0)] * self.size
        for nid in self.tree.order:
            for i, v in zip(self.block(nid), policy[nid]):
                out[i] = Fraction(v)
        return tuple(out)


def expected_objective(tree: ScenarioTree, spec: IntegrandSpec, policy: Policy):
    """``E h(x)`` for an adapted policy (``INF`` if infeasible on some leaf)."""
    total = Fraction(0)
    for leaf in tree.leaves:
        v = spec.leaf_funcs[leaf](policy.history(tree, leaf))
        if v == float("inf"):
            return v
        total += tree.nodes[leaf].prob * v
    return total
