"""Exact recursion for convex quadratic integrands (variance-optimal hedging)."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Mapping, Sequence, Tuple

from .errors import LinearityViolated, NotPSD, UnboundedBelow
from .linalg import as_fractions, dot, matmul, matvec, nullspace, pinv, transpose
from .tree import Policy, ScenarioTree


def ldl(Q) -> Tuple[List[List[Fraction]], List[Fraction]]:
    """Exact ``Q = L D L^T`` for a symmetric PSD matrix.

    A zero pivot must come with a zero column below it; a negative pivot or
    a nonzero column under a zero pivot raises :class:`NotPSD`.
    """
    n = len(Q)
    A = [list(as_fractions(r)) for r in Q]
    for i in range(n):
        for j in range(i):
            if A[i][j] != A[j][i]:
                raise NotPSD(f"matrix is not symmetric at ({i}, {j})")
    L = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    D = [Fraction(0)] * n
    for k in range(n):
        p = A[k][k]
        if p < 0:
            raise NotPSD(f"negative pivot {p} at position {k}")
        if p == 0:
            if any(A[i][k] != 0 for i in range(k + 1, n)):
                raise NotPSD(f"zero pivot with nonzero column at position {k}")
            continue
        D[k] = p
        for i in range(k + 1, n):
            L[i][k] = A[i][k] / p
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                A[i][j] -= L[i][k] * A[k][j]
    return L, D


@dataclass(frozen=True)
class QuadFunc:
    """``x -> x^T Q x + b.x + c`` with ``Q`` symmetric PSD."""

    Q: Tuple[Tuple[Fraction, ...], ...]
    b: Tuple[Fraction, ...]
    c: Fraction

    def __post_init__(self):
        Q = tuple(as_fractions(r) for r in self.Q)
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "b", as_fractions(self.b))
        object.__setattr__(self, "c", Fraction(self.c))
        if any(len(r) != len(Q) for r in Q) or len(self.b) != len(Q):
            raise ValueError("inconsistent quadratic dimensions")
        ldl(Q)

    @property
    def n(self) -> int:
        return len(self.b)

    @classmethod
    def squared_residual(cls, a: Sequence, u) -> "QuadFunc":
        """``(a.x - u)^2``."""
        a = as_fractions(a)
        u = Fraction(u)
        return cls(tuple(tuple(ai * aj for aj in a) for ai in a), tuple(-2 * u * ai for ai in a), u * u)

    @classmethod
    def zero(cls, n: int) -> "QuadFunc":
        return cls(tuple((Fraction(0),) * n for _ in range(n)), (Fraction(0),) * n, Fraction(0))

    def __call__(self, x) -> Fraction:
        x = as_fractions(x)
        return dot(x, matvec(self.Q, x)) + dot(self.b, x) + self.c

    def scale(self, p) -> "QuadFunc":
        p = Fraction(p)
        return QuadFunc(tuple(tuple(p * v for v in r) for r in self.Q),
                        tuple(p * v for v in self.b), p * self.c)

    def __add__(self, other: "QuadFunc") -> "QuadFunc":
        return QuadFunc(tuple(tuple(a + b for a, b in zip(r, s)) for r, s in zip(self.Q, other.Q)),
                        tuple(a + b for a, b in zip(self.b, other.b)), self.c + other.c)


@dataclass(frozen=True)
class QuadMin:
    """Result of minimizing over a trailing block ``v`` given the leading ``x``.

    ``value`` is the reduced quadratic in ``x``; the minimizer is
    ``v*(x) = K x + k0`` (minimum norm); ``null`` spans the flat directions.
    """

    value: QuadFunc
    K: Tuple[Tuple[Fraction, ...], ...]
    k0: Tuple[Fraction, ...]
    null: Tuple[Tuple[Fraction, ...], ...]

    def minimizer(self, x) -> Tuple[Fraction, ...]:
        return tuple(a + b for a, b in zip(matvec(self.K, x), self.k0))


def quad_partial_min(q: QuadFunc, k: int) -> QuadMin:
    """Minimize over the last ``k`` coordinates by a pseudo-inverse Schur complement."""
    n = q.n
    m = n - k
    Q = [list(r) for r in q.Q]
    A = [r[:m] for r in Q[:m]]
    B = [r[m:] for r in Q[:m]]
    C = [r[m:] for r in Q[m:]]
    b1, b2 = list(q.b[:m]), list(q.b[m:])
    null = nullspace(C, k) if k else []
    for v in null:
        if dot(v, b2) != 0:
            raise UnboundedBelow("linear term is not orthogonal to the flat directions",
                                 ray=v if dot(v, b2) < 0 else tuple(-x for x in v))
    if k == 0:
        return QuadMin(q, (), (), ())
    Cp = pinv(C)
    BCp = matmul(B, Cp) if m else []
    Qn = [[A[i][j] - sum(BCp[i][l] * B[j][l] for l in range(k)) for j in range(m)] for i in range(m)]
    bn = [b1[i] - dot(BCp[i], b2) for i in range(m)]
    half = [v / 2 for v in b2]
    cn = q.c - dot(half, matvec(Cp, half))
    # v*(x) = -C^+ (B^T x + b2/2)
    Bt = transpose(B) if m else [[] for _ in range(k)]
    K = [[-v for v in row] for row in matmul(Cp, Bt)] if m else [[] for _ in range(k)]
    k0 = [-v for v in matvec(Cp, half)]
    value = QuadFunc(tuple(tuple(r) for r in Qn), tuple(bn), cn)
    return QuadMin(value, tuple(tuple(r) for r in K), tuple(k0), tuple(tuple(v) for v in null))


def quad_cond_exp(tree: ScenarioTree, stage: int, funcs: Mapping[str, QuadFunc]) -> Dict[str, QuadFunc]:
    """Average the functions at stage ``stage + 1`` into their stage-``stage`` parents."""
    out = {}
    for nid in tree.stage(stage):
        acc = None
        for c, p in tree.children(nid):
            term = funcs[c].scale(p)
            acc = term if acc is None else acc + term
        out[nid] = acc
    return out


@dataclass(frozen=True)
class HedgeProblem:
    tree: ScenarioTree
    S: Mapping[str, Tuple[Fraction, ...]]
    claim: Mapping[str, Fraction]

    @property
    def d(self) -> int:
        return len(self.S[self.tree.root])

    def validate(self):
        for nid in self.tree.order:
            if nid not in self.S or len(self.S[nid]) != self.d:
                raise ValueError(f"price vector missing or of wrong size at node {nid!r}")
        for leaf in self.tree.leaves:
            if leaf not in self.claim:
                raise ValueError(f"no claim value at leaf {leaf!r}")


def hedge_layout(tree: ScenarioTree, d: int) -> Tuple[int, ...]:
    """Stage dimensions of ``(V_0, z_0), z_1, ..., z_{T-1}, ()``."""
    if tree.T == 0:
        return (1,)
    return (1 + d,) + (d,) * (tree.T - 1) + (0,)


def hedge_rows(hp) -> Dict[str, List[Fraction]]:
    """Per leaf, the coefficients of ``V_0 + sum_t z_t . dS_{t+1}`` in the history layout."""
    tree = hp.tree
    rows = {}
    for leaf in tree.leaves:
        path = tree.path(leaf)
        row = [Fraction(1)]
        for a, b in zip(path[:-1], path[1:]):
            row += [Fraction(sb) - Fraction(sa) for sa, sb in zip(hp.S[a], hp.S[b])]
        rows[leaf] = row
    return rows


@dataclass
class HedgeResult:
    V0: Fraction
    policy: Policy
    value: Fraction
    null_spaces: Dict[str, Tuple[Tuple[Fraction, ...], ...]]


def variance_hedge_solve(hp: HedgeProblem) -> HedgeResult:
    """Minimize ``E (V_0 + sum_t z_t . dS_{t+1} - u)^2`` by the backward recursion.

    Decisions are ``x_0 = (V_0, z_0)``, ``x_t = z_t``; the minimizer at every
    node is the minimum-norm one, so it is orthogonal to that node's flat
    directions.
    """
    hp.validate()
    tree = hp.tree
    dims = hedge_layout(tree, hp.d)
    rows = hedge_rows(hp)
    h: Dict[str, QuadFunc] = {leaf: QuadFunc.squared_residual(rows[leaf], hp.claim[leaf])
                              for leaf in tree.leaves}
    mins: Dict[str, QuadMin] = {}
    for t in range(tree.T, -1, -1):
        if t < tree.T:
            h.update(quad_cond_exp(tree, t, {c: mins[c].value for c in tree.stage(t + 1)}))
        for nid in tree.stage(t):
            try:
                mins[nid] = quad_partial_min(h[nid], dims[t])
            except UnboundedBelow as exc:
                raise LinearityViolated(nid, exc.ray, t) from None
    values = {}
    for nid in tree.order:
        hist = tuple(v for p in tree.path(nid)[:-1] for v in values[p])
        values[nid] = mins[nid].minimizer(hist)
    root = mins[tree.root].value
    policy = Policy(values)
    V0 = values[tree.root][0]
    return HedgeResult(V0, policy, root.c, {nid: mins[nid].null for nid in tree.order})
