"""Exact linear programming over the rationals.

The core is a two-phase tableau simplex in standard form

    minimize cost.y  subject to  M y = r,  y >= 0

run with fraction-free (Bareiss) integer pivoting, so every entry stays a
Python int and the true tableau is ``T / d``.  Problems in inequality form
over free variables are solved through their dual, which keeps the tableau
as tall as the number of variables rather than the number of rows; for the
polyhedra handled here that is by far the smaller side.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

# consecutive degenerate pivots tolerated under Dantzig's rule before
# switching to Bland's rule for guaranteed termination
_STALL = 40


@dataclass(frozen=True)
class LPResult:
    status: str  # 'optimal' | 'infeasible' | 'unbounded'
    value: Optional[Fraction] = None
    x: Optional[tuple] = None
    ray: Optional[tuple] = None

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


def _as_int_row(values):
    if all(type(v) is int for v in values):
        return list(values), 1
    fr = [v if isinstance(v, Fraction) else Fraction(v) for v in values]
    scale = math.lcm(*(v.denominator for v in fr)) if fr else 1
    return [v.numerator * (scale // v.denominator) for v in fr], scale


def _pivot(T, obj, basis, r, s, d):
    p = T[r][s]
    prow = T[r]
    for i, row in enumerate(T):
        if i == r:
            continue
        f = row[s]
        if f == 0:
            if p != d:
                T[i] = [x * p // d for x in row]
        else:
            T[i] = [(x * p - f * y) // d for x, y in zip(row, prow)]
    f = obj[s]
    if f != 0 or p != d:
        obj[:] = [(x * p - f * y) // d for x, y in zip(obj, prow)]
    basis[r] = s
    return p


def _iterate(T, obj, basis, d, ncols):
    """Run simplex pivots until optimal or unbounded. Returns (status, d)."""
    bland = False
    stall = 0
    while True:
        s = -1
        if bland:
            for j in range(ncols):
                if obj[j] < 0:
                    s = j
                    break
        else:
            best = 0
            for j in range(ncols):
                if obj[j] < best:
                    best = obj[j]
                    s = j
        if s < 0:
            return "optimal", d
        r = -1
        for i, row in enumerate(T):
            a = row[s]
            if a > 0:
                if r < 0:
                    r = i
                    continue
                lhs = row[-1] * T[r][s]
                rhs = T[r][-1] * a
                if lhs < rhs or (lhs == rhs and basis[i] < basis[r]):
                    r = i
        if r < 0:
            return "unbounded", d
        if T[r][-1] == 0:
            stall += 1
            if stall > _STALL:
                bland = True
        else:
            stall = 0
        d = _pivot(T, obj, basis, r, s, d)


def simplex(M: Sequence[Sequence], r: Sequence, cost: Sequence):
    """Solve ``min cost.y  s.t.  M y = r, y >= 0`` exactly.

    Returns ``(status, value, y, pi)`` where ``pi`` are the simplex
    multipliers of the equality rows (a dual optimal solution) when the
    status is ``'optimal'``.
    """
    k = len(M)
    m = len(cost)
    T = []
    sign = []
    scale = []
    for i in range(k):
        ints, L = _as_int_row(list(M[i]) + [r[i]])
        s = 1
        if ints[-1] < 0:
            ints = [-v for v in ints]
            s = -1
        art = [0] * k
        art[i] = 1
        T.append(ints[:m] + art + [ints[m]])
        sign.append(s)
        scale.append(L)
    basis = [m + i for i in range(k)]
    d = 1

    # phase 1: minimize the sum of artificials
    obj = [0] * (m + k + 1)
    for row in T:
        for j in range(m):
            obj[j] -= row[j]
        obj[-1] -= row[-1]
    _, d = _iterate(T, obj, basis, d, m)
    if obj[-1] != 0:
        return "infeasible", None, None, None

    # drive zero-level artificials out of the basis
    for i in range(k):
        if basis[i] < m:
            continue
        row = T[i]
        j = next((j for j in range(m) if row[j] != 0), None)
        if j is None:
            continue  # redundant equality row
        d = _pivot(T, obj, basis, i, j, d)
        if d < 0:
            for t in range(k):
                T[t] = [-x for x in T[t]]
            obj[:] = [-x for x in obj]
            d = -d

    ci, Lc = _as_int_row(cost)
    cb = [ci[b] if b < m else 0 for b in basis]
    obj = []
    for j in range(m + k + 1):
        acc = d * ci[j] if j < m else 0
        for i in range(k):
            if cb[i]:
                acc -= cb[i] * T[i][j]
        obj.append(acc)
    status, d = _iterate(T, obj, basis, d, m)
    if status == "unbounded":
        return "unbounded", None, None, None
    denom = d * Lc
    value = Fraction(-obj[-1], denom)
    y = [Fraction(0)] * m
    for i, b in enumerate(basis):
        if b < m:
            y[b] = Fraction(T[i][-1], d)
    pi = [Fraction(-obj[m + i] * sign[i] * scale[i], denom) for i in range(k)]
    return "optimal", value, tuple(y), tuple(pi)


def _transpose(A, n):
    return [[row[j] for row in A] for j in range(n)]


def _dual_tableau(n, A_ub, A_eq):
    cols = list(A_ub) + list(A_eq) + [[-v for v in row] for row in A_eq]
    return _transpose(cols, n)


def maximize(c, A_ub=(), b_ub=(), A_eq=(), b_eq=()) -> LPResult:
    """Maximize ``c.x`` over free ``x`` with ``A_ub x <= b_ub``, ``A_eq x = b_eq``.

    An unbounded result carries a feasible point in ``x`` and an improving
    direction in ``ray`` (with ``A_ub ray <= 0``, ``A_eq ray = 0``).
    """
    n = len(c)
    M = _dual_tableau(n, A_ub, A_eq)
    cost = list(b_ub) + list(b_eq) + [-v for v in b_eq]
    status, value, _, pi = simplex(M, list(c), cost)
    if status == "optimal":
        return LPResult("optimal", value, pi)
    if status == "unbounded":
        return LPResult("infeasible")
    # dual infeasible: primal is either infeasible or unbounded
    st0, _, _, x0 = simplex(M, [0] * n, cost)
    if st0 != "optimal":
        return LPResult("infeasible")
    box_ub = list(A_ub) + [[1 if j == i else 0 for j in range(n)] for i in range(n)]
    box_ub += [[-1 if j == i else 0 for j in range(n)] for i in range(n)]
    rhs = [0] * len(A_ub) + [1] * (2 * n)
    ray = maximize(c, box_ub, rhs, A_eq, [0] * len(A_eq))
    return LPResult("unbounded", None, x0, ray.x)


def minimize(c, A_ub=(), b_ub=(), A_eq=(), b_eq=()) -> LPResult:
    res = maximize([-Fraction(v) for v in c], A_ub, b_ub, A_eq, b_eq)
    if res.status == "optimal":
        return LPResult("optimal", -res.value, res.x)
    return res


def feasible_point(n, A_ub=(), b_ub=(), A_eq=(), b_eq=()):
    """A point of ``{x : A_ub x <= b_ub, A_eq x = b_eq}`` or None if empty."""
    res = maximize([0] * n, A_ub, b_ub, A_eq, b_eq)
    return res.x if res.status == "optimal" else None
