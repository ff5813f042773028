"""Convex polyhedral functions represented by their epigraphs.

A :class:`PolyFunc` on ``Q^n`` stores ``epi f`` as a :class:`Polyhedron` in
``Q^(n+1)`` with the value coordinate last.  Every row has a non-positive
value coefficient, so ``(0, 1)`` is always a recession direction.  Rows
with a negative value coefficient are *pieces* (``alpha >= s.x + c``), the
others describe the effective domain.  The value ``+inf`` is the float
``math.inf``; ``-inf`` is never returned, it is raised as
:class:`~stochdp.errors.UnboundedBelow`.
"""
from __future__ import annotations

import math
from fractions import Fraction
from typing import Iterable, List, Optional, Sequence, Tuple

from . import lp
from .dd import generators
from .errors import DimensionBudgetExceeded, ImproperInput, UnboundedBelow
from .polyhedron import Polyhedron, fm_eliminate, prune, same_set

INF = math.inf
CONJUGATE_BUDGET = 8


class PolyFunc:
    __slots__ = ("n", "epi")

    def __init__(self, epi: Polyhedron):
        if epi.dim < 1:
            raise ValueError("epigraph needs a value coordinate")
        for r in epi.ineqs:
            if r[-2] > 0:
                raise ValueError("epigraph row bounds the value from above")
        for r in epi.eqs:
            if r[-2] != 0:
                raise ValueError("epigraph equality involves the value coordinate")
        self.n = epi.dim - 1
        self.epi = epi

    # -- constructors ------------------------------------------------------
    @classmethod
    def from_pieces(cls, n: int, pieces: Iterable[Tuple[Sequence, object]],
                    ineqs: Iterable[Tuple[Sequence, object]] = (),
                    eqs: Iterable[Tuple[Sequence, object]] = ()) -> "PolyFunc":
        """``max_i (slope_i . x + offset_i)`` on ``{a.x <= b}`` and ``{a.x = b}``."""
        pieces = list(pieces)
        if not pieces:
            raise ValueError("at least one piece is required")
        rows = [list(s) + [-1, -Fraction(c)] for s, c in pieces]
        rows += [list(a) + [0, b] for a, b in ineqs]
        erows = [list(a) + [0, b] for a, b in eqs]
        for r in rows + erows:
            if len(r) != n + 2:
                raise ValueError("row length does not match dimension")
        return cls(Polyhedron(n + 1, rows, erows))

    @classmethod
    def indicator(cls, n: int, ineqs=(), eqs=()) -> "PolyFunc":
        return cls.from_pieces(n, [([0] * n, 0)], ineqs, eqs)

    @classmethod
    def zero(cls, n: int) -> "PolyFunc":
        return cls.indicator(n)

    @classmethod
    def linear(cls, slope: Sequence, offset=0) -> "PolyFunc":
        return cls.from_pieces(len(slope), [(slope, offset)])

    @classmethod
    def infinite(cls, n: int) -> "PolyFunc":
        return cls(Polyhedron.empty(n + 1))

    # -- structure ---------------------------------------------------------
    def __repr__(self):
        return f"PolyFunc(n={self.n}, pieces={len(self.piece_rows())}, domain_rows={len(self.domain_rows())})"

    def piece_rows(self):
        return [r for r in self.epi.ineqs if r[-2] < 0]

    def domain_rows(self):
        return [r for r in self.epi.ineqs if r[-2] == 0]

    @property
    def pieces(self) -> List[Tuple[tuple, Fraction]]:
        out = []
        for r in self.piece_rows():
            g = -r[-2]
            out.append((tuple(Fraction(v, g) for v in r[:-2]), Fraction(-r[-1], g)))
        return out

    def domain(self) -> Polyhedron:
        return Polyhedron(self.n, [r[:-2] + (r[-1],) for r in self.domain_rows()],
                          [r[:-2] + (r[-1],) for r in self.epi.eqs])

    @property
    def is_infinite(self) -> bool:
        """Identically +inf (empty epigraph)."""
        return self.epi.is_empty()

    @property
    def proper(self) -> bool:
        return not self.is_infinite and bool(self.piece_rows())

    def require_proper(self):
        if self.is_infinite:
            raise ImproperInput("function is identically +inf")
        if not self.piece_rows():
            raise ImproperInput("function is -inf on its domain")

    # -- evaluation ----------------------------------------------------------
    def __call__(self, x):
        return evaluate(self, x)

    def level_set(self, level=0) -> Polyhedron:
        """``{x : f(x) <= level}``."""
        return self.epi.substitute({self.n: Fraction(level)})

    def restrict(self, fixed: Sequence) -> "PolyFunc":
        """The function of the trailing coordinates with the leading ones fixed."""
        return PolyFunc(self.epi.substitute({i: Fraction(v) for i, v in enumerate(fixed)}))

    def embed(self, new_n: int, positions: Sequence[int]) -> "PolyFunc":
        """View as a function on ``Q^new_n``; old coordinate i sits at positions[i]."""
        return PolyFunc(self.epi.embed(new_n + 1, list(positions) + [new_n]))

    def scale(self, p) -> "PolyFunc":
        p = Fraction(p)
        if p <= 0:
            raise ValueError("scale factor must be positive")
        if self.is_infinite:
            return self
        rows = []
        for r in self.epi.ineqs:
            if r[-2] < 0:
                rows.append([p * v for v in r[:-2]] + [r[-2], p * r[-1]])
            else:
                rows.append(list(r))
        return PolyFunc(Polyhedron(self.epi.dim, rows, self.epi.eqs))

    def pruned(self) -> "PolyFunc":
        return PolyFunc(prune(self.epi))


def evaluate(f: PolyFunc, x) -> Fraction:
    """Exact value of ``f`` at ``x`` (``INF`` outside the domain)."""
    if len(x) != f.n:
        raise ValueError(f"expected a point of dimension {f.n}")
    if f.epi.is_canonical_empty():
        return INF
    x = [Fraction(v) for v in x]
    for r in f.epi.ineqs:
        if r[-2] == 0 and sum(a * v for a, v in zip(r, x)) > r[-1]:
            return INF
    for r in f.epi.eqs:
        if sum(a * v for a, v in zip(r, x)) != r[-1]:
            return INF
    best = None
    for r in f.piece_rows():
        val = (sum(a * v for a, v in zip(r, x)) - r[-1]) / Fraction(-r[-2])
        if best is None or val > best:
            best = val
    if best is None:
        raise UnboundedBelow("function is -inf on its domain")
    return best


def polyfunc_sum(f: PolyFunc, g: PolyFunc) -> PolyFunc:
    """Pointwise sum.

    ``epi(f+g) = {(x, a) : (x, a1) in epi f, (x, a - a1) in epi g}``, so a
    single elimination of ``a1`` suffices.
    """
    if f.n != g.n:
        raise ValueError("dimension mismatch")
    n = f.n
    if f.is_infinite or g.is_infinite:
        return PolyFunc.infinite(n)

    def lift_f(r):
        return list(r[:n]) + [r[n], 0, r[-1]]

    def lift_g(r):
        return list(r[:n]) + [-r[n], r[n], r[-1]]
    ineqs = [lift_f(r) for r in f.epi.ineqs] + [lift_g(r) for r in g.epi.ineqs]
    eqs = [lift_f(r) for r in f.epi.eqs] + [lift_g(r) for r in g.epi.eqs]
    res = fm_eliminate(Polyhedron(n + 2, ineqs, eqs), [n])
    return PolyFunc(res)


def weighted_sum(terms: Sequence[Tuple[object, PolyFunc]]) -> PolyFunc:
    """``sum_i p_i f_i`` for positive weights ``p_i``."""
    if not terms:
        raise ValueError("empty sum")
    acc: Optional[PolyFunc] = None
    for p, f in terms:
        g = f.scale(p)
        acc = g.pruned() if acc is None else polyfunc_sum(acc, g)
        if acc.is_infinite:
            return PolyFunc.infinite(f.n)
    return acc


def recession_lp_witness(f: PolyFunc, coords: Sequence[int]):
    """Minimize ``f_inf(d)`` over directions supported on ``coords`` with ``|d_i| <= 1``."""
    rec = f.epi.recession_cone()
    fixed = {i: Fraction(0) for i in range(f.n) if i not in coords}
    P = rec.substitute(fixed)
    m = len(coords)
    A, b, E, e = P.lp_data()
    for i in range(m):
        row = [0] * (m + 1)
        row[i] = 1
        A.append(row)
        b.append(1)
        row = [0] * (m + 1)
        row[i] = -1
        A.append(row)
        b.append(1)
    res = lp.minimize([0] * m + [1], A, b, E, e)
    return res


def polyfunc_partial_min(f: PolyFunc, coords: Iterable[int]) -> PolyFunc:
    """``g(x') = inf`` of ``f`` over the coordinates in ``coords``.

    Raises :class:`UnboundedBelow` (with a descent direction on the
    eliminated coordinates) if the infimum is ``-inf``.
    """
    coords = sorted(set(coords))
    if f.is_infinite:
        return PolyFunc.infinite(f.n - len(coords))
    f.require_proper()
    g = PolyFunc(fm_eliminate(f.epi, coords))
    if not g.is_infinite and not g.piece_rows():
        res = recession_lp_witness(f, coords)
        raise UnboundedBelow("partial minimization is unbounded below", ray=res.x[:-1])
    return g


def polyfunc_recession(f: PolyFunc) -> PolyFunc:
    """Recession function: its epigraph is the recession cone of ``epi f``."""
    if f.is_infinite:
        raise ImproperInput("recession function of an identically +inf function")
    return PolyFunc(f.epi.recession_cone())


def polyfunc_conjugate(f: PolyFunc) -> PolyFunc:
    """Convex conjugate ``f*(y) = sup_x x.y - f(x)`` via the generators of ``epi f``."""
    if f.n + 1 > CONJUGATE_BUDGET:
        raise DimensionBudgetExceeded(f"conjugate needs n+1 <= {CONJUGATE_BUDGET}, got {f.n + 1}")
    f.require_proper()
    points, rays, lines = generators(f.epi)
    n = f.n
    rows = [list(v[:n]) + [-1, v[n]] for v in points]
    rows += [list(r[:n]) + [0, r[n]] for r in rays]
    eqs = [list(l[:n]) + [0, l[n]] for l in lines]
    return PolyFunc(prune(Polyhedron(n + 1, rows, eqs)))


def same_function(f: PolyFunc, g: PolyFunc) -> bool:
    return f.n == g.n and same_set(f.epi, g.epi)


def minimum(f: PolyFunc):
    """``inf f`` (``INF`` for an identically +inf function)."""
    if f.is_infinite:
        return INF
    res = f.epi.minimize([0] * f.n + [1])
    if res.status == "unbounded":
        raise UnboundedBelow("function is unbounded below", ray=res.ray[:-1])
    return res.value


def argmin_slice(f: PolyFunc, fixed: Sequence = (), orth_basis: Sequence[Sequence] = ()):
    """Minimize over the trailing coordinates with the leading ones fixed.

    Returns ``(value, minimizer)``; the minimizer is the lexicographically
    smallest optimal point, taken within the orthogonal complement of
    ``orth_basis`` when one is given.  Infeasible slices give
    ``(INF, None)``.
    """
    k = len(fixed)
    m = f.n - k
    P = f.epi.substitute({i: Fraction(v) for i, v in enumerate(fixed)})
    if P.is_empty():
        return INF, None
    A, b, E, e = P.lp_data()
    obj = [0] * m + [1]
    res = lp.minimize(obj, A, b, E, e)
    if res.status == "unbounded":
        raise UnboundedBelow("slice is unbounded below", ray=res.ray[:m])
    if res.status != "optimal":
        return INF, None
    value = res.value
    E = [list(r) for r in E] + [obj]
    e = list(e) + [value]
    for v in orth_basis:
        E.append([Fraction(x) for x in v] + [0])
        e.append(0)
    point = None
    for j in range(m):
        c = [0] * (m + 1)
        c[j] = 1
        r = lp.minimize(c, A, b, E, e)
        if r.status == "optimal":
            E.append(c)
            e.append(r.value)
            point = r.x
    if point is None:
        point = lp.feasible_point(m + 1, A, b, E, e)
    return value, tuple(point[:m])
