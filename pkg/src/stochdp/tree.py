"""Finite scenario trees, adapted processes and conditional expectations."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from .errors import (DuplicateNode, MissingValue, NonPositiveProbability, NonUnitProbability,
                     OrphanNode, StageGap)


@dataclass(frozen=True)
class Node:
    id: str
    stage: int
    parent: Optional[str]
    children: Tuple[Tuple[str, Fraction], ...]
    prob: Fraction

    @property
    def is_leaf(self) -> bool:
        return not self.children


@dataclass(frozen=True)
class ScenarioTree:
    """Validated, immutable tree; build it with :func:`validate_tree` or the helpers."""

    T: int
    root: str
    nodes: Mapping[str, Node]
    order: Tuple[str, ...]

    def node(self, nid: str) -> Node:
        return self.nodes[nid]

    def stage(self, t: int) -> List[str]:
        return [i for i in self.order if self.nodes[i].stage == t]

    @property
    def leaves(self) -> List[str]:
        return self.stage(self.T)

    def children(self, nid: str):
        return self.nodes[nid].children

    def path(self, nid: str) -> List[str]:
        """Node ids from the root down to ``nid``."""
        out = []
        cur: Optional[str] = nid
        while cur is not None:
            out.append(cur)
            cur = self.nodes[cur].parent
        return out[::-1]

    def ancestor(self, nid: str, s: int) -> str:
        return self.path(nid)[s]

    def descendants_at(self, nid: str, t: int) -> List[str]:
        frontier = [nid]
        while frontier and self.nodes[frontier[0]].stage < t:
            frontier = [c for f in frontier for c, _ in self.nodes[f].children]
        return frontier

    def cond_prob(self, nid: str, s: int) -> Fraction:
        """Probability of ``nid`` given its stage-s ancestor."""
        return self.nodes[nid].prob / self.nodes[self.ancestor(nid, s)].prob

    # -- constructors -----------------------------------------------------
    @classmethod
    def from_records(cls, records: Iterable[Tuple[str, Optional[str], object]]) -> "ScenarioTree":
        """Build from ``(id, parent, conditional probability)`` triples."""
        return validate_tree(records)

    @classmethod
    def from_branching(cls, probs: Sequence[Sequence[object]]) -> "ScenarioTree":
        """Homogeneous tree: every stage-t node branches with ``probs[t]``."""
        recs = [("0", None, 1)]
        layer = ["0"]
        for ps in probs:
            nxt = []
            for nid in layer:
                for k, p in enumerate(ps):
                    cid = f"{nid}.{k}"
                    recs.append((cid, nid, p))
                    nxt.append(cid)
            layer = nxt
        return validate_tree(recs)

    @classmethod
    def chain(cls, T: int) -> "ScenarioTree":
        return cls.from_branching([[1]] * T)

    def to_records(self) -> List[Tuple[str, Optional[str], Fraction]]:
        out = []
        for nid in self.order:
            n = self.nodes[nid]
            p = Fraction(1) if n.parent is None else dict(self.nodes[n.parent].children)[nid]
            out.append((nid, n.parent, p))
        return out


def validate_tree(records: Iterable[Tuple[str, Optional[str], object]]) -> ScenarioTree:
    """Check every tree invariant and compute absolute probabilities.

    Raises a :class:`~stochdp.errors.TreeError` subclass naming the node.
    """
    records = [(str(i), None if p is None else str(p), Fraction(q)) for i, p, q in records]
    parent: Dict[str, Optional[str]] = {}
    cond: Dict[str, Fraction] = {}
    order: List[str] = []
    roots = []
    for nid, par, q in records:
        if nid in parent:
            raise DuplicateNode(nid, "duplicate node id")
        parent[nid] = par
        order.append(nid)
        if par is None:
            roots.append(nid)
            if q != 1:
                raise NonUnitProbability(nid, f"root probability is {q}, expected 1")
        elif q <= 0:
            raise NonPositiveProbability(nid, f"conditional probability {q} is not positive")
        cond[nid] = q
    if not roots:
        raise OrphanNode(order[0] if order else None, "tree has no root")
    if len(roots) > 1:
        raise OrphanNode(roots[1], "second node without parent")
    kids: Dict[str, List[str]] = {nid: [] for nid in order}
    for nid in order:
        par = parent[nid]
        if par is not None:
            if par not in parent:
                raise OrphanNode(nid, f"parent {par!r} does not exist")
            kids[par].append(nid)
    stage = {roots[0]: 0}
    queue = [roots[0]]
    while queue:
        cur = queue.pop()
        for c in kids[cur]:
            stage[c] = stage[cur] + 1
            queue.append(c)
    for nid in order:
        if nid not in stage:
            raise OrphanNode(nid, "not reachable from the root (cycle)")
    T = max(stage.values())
    for nid in order:
        if not kids[nid] and stage[nid] != T:
            raise StageGap(nid, f"leaf at stage {stage[nid]} but horizon is {T}")
        if kids[nid]:
            total = sum(cond[c] for c in kids[nid])
            if total != 1:
                raise NonUnitProbability(nid, f"child probabilities sum to {total}")
    prob = {roots[0]: Fraction(1)}
    for nid in sorted(order, key=lambda i: stage[i]):
        for c in kids[nid]:
            prob[c] = prob[nid] * cond[c]
    nodes = {nid: Node(nid, stage[nid], parent[nid], tuple((c, cond[c]) for c in kids[nid]), prob[nid])
             for nid in order}
    # stage-major, insertion order within a stage
    order_t = tuple(sorted(order, key=lambda i: stage[i]))
    return ScenarioTree(T, roots[0], nodes, order_t)


def cond_exp_scalars(tree: ScenarioTree, s: int, values: Mapping[str, object]) -> Dict[str, Fraction]:
    """``E_s X`` node-wise for leaf values ``X``."""
    missing = [l for l in tree.leaves if l not in values]
    if missing:
        raise MissingValue(f"no value for leaf {missing[0]!r}")
    out = {}
    for nid in tree.stage(s):
        acc = Fraction(0)
        for leaf in tree.descendants_at(nid, tree.T):
            acc += tree.cond_prob(leaf, s) * Fraction(values[leaf])
        out[nid] = acc
    return out


def expectation(tree: ScenarioTree, values: Mapping[str, object], t: Optional[int] = None) -> Fraction:
    """``E X`` for node values given on stage ``t`` (default: the leaves)."""
    t = tree.T if t is None else t
    return sum((tree.nodes[n].prob * Fraction(values[n]) for n in tree.stage(t)), Fraction(0))


@dataclass(frozen=True)
class Policy:
    """An adapted process: one exact vector per node."""

    values: Mapping[str, Tuple[Fraction, ...]] = field(default_factory=dict)

    def __getitem__(self, nid: str):
        return self.values[nid]

    def history(self, tree: ScenarioTree, nid: str) -> Tuple[Fraction, ...]:
        """``x^t`` at node ``nid``: decisions along the root path, concatenated."""
        return tuple(v for p in tree.path(nid) for v in self.values[p])

    def with_value(self, nid: str, vec) -> "Policy":
        vals = dict(self.values)
        vals[nid] = tuple(Fraction(v) for v in vec)
        return Policy(vals)

    def check_adapted(self, tree: ScenarioTree, dims: Sequence[int]):
        for nid in tree.order:
            v = self.values.get(nid)
            if v is None or len(v) != dims[tree.nodes[nid].stage]:
                raise MissingValue(f"policy has no vector of length "
                                   f"{dims[tree.nodes[nid].stage]} at node {nid!r}")
        extra = set(self.values) - set(tree.nodes)
        if extra:
            raise MissingValue(f"policy has values at unknown node {sorted(extra)[0]!r}")

