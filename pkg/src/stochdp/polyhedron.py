"""Exact H-represented polyhedra and Fourier-Motzkin projection.

A :class:`Polyhedron` is ``{w : a.w <= beta (ineqs), a.w = beta (eqs)}``.
Rows are kept as primitive integer tuples ``(a_1, ..., a_n, beta)``; this
keeps elimination arithmetic in machine-friendly Python ints and makes
duplicate detection a dictionary lookup.
"""
from __future__ import annotations

import math
import os
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from . import lp
from .errors import FMRowCapExceeded

Row = Tuple[int, ...]

DEFAULT_ROW_CAP = 20000


def row_cap() -> int:
    return int(os.environ.get("STOCHDP_FM_ROW_CAP", DEFAULT_ROW_CAP))


def _to_ints(values) -> List[int]:
    fr = [v if isinstance(v, Fraction) else Fraction(v) for v in values]
    L = math.lcm(*(v.denominator for v in fr)) if fr else 1
    return [v.numerator * (L // v.denominator) for v in fr]


def _primitive(ints: Sequence[int]) -> Tuple[int, ...]:
    g = math.gcd(*ints)
    if g > 1:
        return tuple(v // g for v in ints)
    return tuple(ints)


def _dedup_ineqs(rows: Iterable[Sequence[int]]):
    """Keep the tightest bound per normal direction.

    Returns (rows, empty_flag). Rows with zero normal are dropped when
    trivially valid and flag emptiness otherwise.
    """
    best: Dict[Tuple[int, ...], Tuple[Fraction, Row]] = {}
    for r in rows:
        a = r[:-1]
        g = math.gcd(*a)
        if g == 0:
            if r[-1] < 0:
                return [], True
            continue
        key = tuple(v // g for v in a)
        bound = Fraction(r[-1], g)
        cur = best.get(key)
        if cur is None or bound < cur[0]:
            best[key] = (bound, key)
    out = []
    for key, (bound, _) in best.items():
        out.append(_primitive([v * bound.denominator for v in key] + [bound.numerator]))
    return out, False


def _normalize_eq(ints) -> Optional[Row]:
    r = _primitive(ints)
    for v in r[:-1]:
        if v != 0:
            if v < 0:
                r = tuple(-x for x in r)
            return r
    return None if r[-1] == 0 else r  # None: trivial 0 = 0


class Polyhedron:
    """``{w in Q^dim : ineqs, eqs}`` with exact integer rows."""

    __slots__ = ("dim", "ineqs", "eqs", "_empty", "_point")

    def __init__(self, dim: int, ineqs: Iterable[Sequence] = (), eqs: Iterable[Sequence] = (),
                 *, _raw: bool = False):
        self.dim = dim
        self._empty: Optional[bool] = None
        self._point = None
        if _raw:
            self.ineqs = tuple(tuple(r) for r in ineqs)
            self.eqs = tuple(tuple(r) for r in eqs)
            return
        irows = []
        for r in ineqs:
            if len(r) != dim + 1:
                raise ValueError(f"row {r!r} does not have dimension {dim}")
            irows.append(_to_ints(r))
        erows = []
        empty = False
        seen = set()
        for r in eqs:
            if len(r) != dim + 1:
                raise ValueError(f"row {r!r} does not have dimension {dim}")
            e = _normalize_eq(_to_ints(r))
            if e is None:
                continue
            if all(v == 0 for v in e[:-1]):
                empty = True
                break
            if e not in seen:
                seen.add(e)
                erows.append(e)
        ded, empty2 = _dedup_ineqs(irows)
        if empty or empty2:
            self._set_empty()
        else:
            self.ineqs = tuple(ded)
            self.eqs = tuple(erows)

    def _set_empty(self):
        self.ineqs = (tuple([0] * self.dim + [-1]),)
        self.eqs = ()
        self._empty = True

    @classmethod
    def empty(cls, dim: int) -> "Polyhedron":
        P = cls(dim, _raw=True)
        P._set_empty()
        return P

    @classmethod
    def whole(cls, dim: int) -> "Polyhedron":
        return cls(dim, _raw=True)

    @classmethod
    def from_constraints(cls, dim, A=(), b=(), E=(), e=()) -> "Polyhedron":
        return cls(dim, [list(a) + [bi] for a, bi in zip(A, b)],
                   [list(a) + [ei] for a, ei in zip(E, e)])

    def __repr__(self):
        return f"Polyhedron(dim={self.dim}, ineqs={len(self.ineqs)}, eqs={len(self.eqs)})"

    # -- LP views ---------------------------------------------------------
    def lp_data(self, skip: Optional[int] = None):
        A = [r[:-1] for i, r in enumerate(self.ineqs) if i != skip]
        b = [r[-1] for i, r in enumerate(self.ineqs) if i != skip]
        E = [r[:-1] for r in self.eqs]
        e = [r[-1] for r in self.eqs]
        return A, b, E, e

    def maximize(self, c) -> lp.LPResult:
        A, b, E, e = self.lp_data()
        return lp.maximize(c, A, b, E, e)

    def minimize(self, c) -> lp.LPResult:
        A, b, E, e = self.lp_data()
        return lp.minimize(c, A, b, E, e)

    def point(self):
        """Some point of the polyhedron, or None when empty."""
        if self._empty is None:
            A, b, E, e = self.lp_data()
            self._point = lp.feasible_point(self.dim, A, b, E, e)
            self._empty = self._point is None
        return self._point

    def is_empty(self) -> bool:
        if self._empty is None:
            self.point()
        return self._empty

    def contains_point(self, w) -> bool:
        w = [Fraction(v) for v in w]
        for r in self.ineqs:
            if sum(a * x for a, x in zip(r, w)) > r[-1]:
                return False
        for r in self.eqs:
            if sum(a * x for a, x in zip(r, w)) != r[-1]:
                return False
        return True

    @property
    def is_homogeneous(self) -> bool:
        return all(r[-1] == 0 for r in self.ineqs) and all(r[-1] == 0 for r in self.eqs)

    def is_canonical_empty(self) -> bool:
        return self._empty is True and not self.eqs and len(self.ineqs) == 1 \
            and all(v == 0 for v in self.ineqs[0][:-1])

    # -- constructions ----------------------------------------------------
    def intersect(self, other: "Polyhedron") -> "Polyhedron":
        if self.dim != other.dim:
            raise ValueError("dimension mismatch")
        return Polyhedron(self.dim, self.ineqs + other.ineqs, self.eqs + other.eqs)

    def recession_cone(self) -> "Polyhedron":
        """Recession cone; only meaningful for a nonempty polyhedron."""
        return Polyhedron(self.dim, [r[:-1] + (0,) for r in self.ineqs],
                          [r[:-1] + (0,) for r in self.eqs])

    def embed(self, new_dim: int, positions: Sequence[int]) -> "Polyhedron":
        """Rewrite in ``new_dim`` coordinates; old coordinate i goes to positions[i]."""
        def move(r):
            out = [0] * (new_dim + 1)
            for i, p in enumerate(positions):
                out[p] += r[i]
            out[-1] = r[-1]
            return out
        return Polyhedron(new_dim, [move(r) for r in self.ineqs], [move(r) for r in self.eqs])

    def substitute(self, fixed: Dict[int, Fraction]) -> "Polyhedron":
        """Fix the coordinates in ``fixed``; the rest keep their order."""
        keep = [i for i in range(self.dim) if i not in fixed]

        def sub(r):
            beta = Fraction(r[-1]) - sum(Fraction(r[i]) * Fraction(v) for i, v in fixed.items())
            return [r[i] for i in keep] + [beta]
        return Polyhedron(len(keep), [sub(r) for r in self.ineqs], [sub(r) for r in self.eqs])

    def linear_image_rows(self):
        return self.ineqs, self.eqs


# -- redundancy -------------------------------------------------------------

def _row_redundant(ineqs: List[Row], eqs: List[Row], idx: int, dim: int) -> bool:
    r = ineqs[idx]
    A = [q[:-1] for i, q in enumerate(ineqs) if i != idx]
    b = [q[-1] for i, q in enumerate(ineqs) if i != idx]
    E = [q[:-1] for q in eqs]
    e = [q[-1] for q in eqs]
    res = lp.maximize(r[:-1], A, b, E, e)
    return res.status == "optimal" and res.value <= r[-1]


def _interior_point(ineqs: List[Row], eqs: List[Row], dim: int):
    """A point strictly inside every inequality, or None."""
    A = [list(q[:-1]) + [1] for q in ineqs] + [[0] * dim + [1]]
    b = [q[-1] for q in ineqs] + [1]
    E = [list(q[:-1]) + [0] for q in eqs]
    e = [q[-1] for q in eqs]
    res = lp.maximize([0] * dim + [1], A, b, E, e)
    if res.status != "optimal" or res.value <= 0:
        return None
    return res.x[:dim]


def irredundant(ineqs: List[Row], eqs: List[Row], dim: int) -> List[int]:
    """Indices of a minimal subset of ``ineqs`` describing the same set.

    Clarkson's method: each row is tested by a small LP over the rows
    already known to be needed; a violated test is resolved by shooting a
    ray from an interior point, whose first hit is a needed row.  Without
    an interior point, or on a tie, rows are tested one at a time against
    the full system.
    """
    if len(ineqs) <= 1:
        return list(range(len(ineqs)))
    z = _interior_point(ineqs, eqs, dim)
    if z is None:
        keep = list(range(len(ineqs)))
        i = 0
        while i < len(keep):
            if _row_redundant([ineqs[j] for j in keep], eqs, i, dim):
                del keep[i]
            else:
                i += 1
        return keep
    E = [q[:-1] for q in eqs]
    e = [q[-1] for q in eqs]
    slack = [q[-1] - sum(a * v for a, v in zip(q[:-1], z)) for q in ineqs]
    R: List[int] = []
    redundant = set()
    for k in range(len(ineqs)):
        while k not in R and k not in redundant:
            rk = ineqs[k]
            A = [ineqs[j][:-1] for j in R] + [rk[:-1]]
            b = [ineqs[j][-1] for j in R] + [rk[-1] + 1]
            res = lp.maximize(rk[:-1], A, b, E, e)
            if res.value <= rk[-1]:
                redundant.add(k)
                break
            direction = [xv - zv for xv, zv in zip(res.x, z)]
            best, hits = None, []
            for j, q in enumerate(ineqs):
                if j in redundant:
                    continue
                rate = sum(a * v for a, v in zip(q[:-1], direction))
                if rate <= 0:
                    continue
                t = slack[j] / rate
                if best is None or t < best:
                    best, hits = t, [j]
                elif t == best:
                    hits.append(j)
            if len(hits) == 1:
                R.append(hits[0])
                continue
            others = [j for j in range(len(ineqs)) if j not in redundant]
            if _row_redundant([ineqs[j] for j in others], eqs, others.index(k), dim):
                redundant.add(k)
            else:
                R.append(k)
    return sorted(R)


def _independent_eqs(eqs: List[Row], dim: int) -> List[Row]:
    from .linalg import rank
    kept: List[Row] = []
    for e in eqs:
        if rank([k[:-1] for k in kept] + [e[:-1]], dim) > len(kept):
            kept.append(e)
    return kept


def prune(P: Polyhedron) -> Polyhedron:
    """Remove redundant inequalities."""
    if P.is_empty():
        return Polyhedron.empty(P.dim)
    eqs = _independent_eqs(list(P.eqs), P.dim)
    ineqs = [P.ineqs[j] for j in irredundant(list(P.ineqs), eqs, P.dim)]
    Q = Polyhedron(P.dim, ineqs, eqs, _raw=True)
    Q._empty = False
    Q._point = P._point
    return Q


# -- Fourier-Motzkin ----------------------------------------------------------

def _combine(p: Sequence[int], q: Sequence[int], col: int) -> List[int]:
    """Positive combination of p (p[col] > 0) and q (q[col] < 0) cancelling col."""
    a, b = p[col], -q[col]
    g = math.gcd(a, b)
    a //= g
    b //= g
    return [b * x + a * y for x, y in zip(p, q)]


def _drop(row: Sequence[int], col: int) -> List[int]:
    return list(row[:col]) + list(row[col + 1:])


def fm_eliminate(P: Polyhedron, coords: Iterable[int], prune_rows: bool = True) -> Polyhedron:
    """Exact projection of ``P`` onto the coordinates not in ``coords``.

    Equalities involving a coordinate are used for substitution; otherwise
    the coordinate is removed by Fourier-Motzkin combination. After each
    step, rows with more ancestors than Chernikov's bound allows are
    discarded and the remainder is pruned by exact LP.
    """
    coords = sorted(set(coords))
    for c in coords:
        if not 0 <= c < P.dim:
            raise ValueError(f"coordinate {c} out of range for dimension {P.dim}")
    out_dim = P.dim - len(coords)
    if not coords:
        return prune(P) if prune_rows else P
    if P.is_empty():
        return Polyhedron.empty(out_dim)
    cap = row_cap()

    ineqs: List[Tuple[List[int], int]] = [(list(r), 1 << i) for i, r in enumerate(P.ineqs)]
    eqs: List[List[int]] = [list(r) for r in P.eqs]
    alive = list(range(P.dim))
    remaining = list(coords)
    fm_steps = 0

    while remaining:
        target = None
        for k in remaining:
            col = alive.index(k)
            if any(e[col] != 0 for e in eqs):
                target = (k, col, True)
                break
        if target is None:
            best = None
            for k in remaining:
                col = alive.index(k)
                npos = sum(1 for r, _ in ineqs if r[col] > 0)
                nneg = sum(1 for r, _ in ineqs if r[col] < 0)
                cost = npos * nneg - npos - nneg
                if best is None or cost < best[0]:
                    best = (cost, k, col)
            target = (best[1], best[2], False)
        k, col, via_eq = target
        remaining.remove(k)

        if via_eq:
            eq = min((e for e in eqs if e[col] != 0), key=lambda e: (abs(e[col]), e))
            eqs = [e for e in eqs if e is not eq]
            piv = eq[col]
            sgn = 1 if piv > 0 else -1
            new_ineqs = []
            for r, orig in ineqs:
                f = r[col]
                if f == 0:
                    new_ineqs.append((_drop(r, col), orig))
                else:
                    comb = [abs(piv) * x - sgn * f * y for x, y in zip(r, eq)]
                    new_ineqs.append((_drop(comb, col), orig))
            new_eqs = []
            for e in eqs:
                f = e[col]
                if f == 0:
                    new_eqs.append(_drop(e, col))
                else:
                    new_eqs.append(_drop([piv * x - f * y for x, y in zip(e, eq)], col))
        else:
            fm_steps += 1
            pos = [(r, o) for r, o in ineqs if r[col] > 0]
            neg = [(r, o) for r, o in ineqs if r[col] < 0]
            zero = [(_drop(r, col), o) for r, o in ineqs if r[col] == 0]
            if len(pos) * len(neg) + len(zero) > cap:
                raise FMRowCapExceeded(
                    f"eliminating coordinate {k}: {len(pos)}x{len(neg)} combinations plus "
                    f"{len(zero)} rows exceeds STOCHDP_FM_ROW_CAP={cap}")
            new_ineqs = zero
            limit = fm_steps + 1
            for p, op in pos:
                for q, oq in neg:
                    o = op | oq
                    if bin(o).count("1") > limit:
                        continue
                    new_ineqs.append((_drop(_combine(p, q, col), col), o))
            new_eqs = [_drop(e, col) for e in eqs]
        alive.pop(col)

        # normalize, drop trivial rows, keep tightest per direction
        dim = len(alive)
        best: Dict[Tuple[int, ...], Tuple[Fraction, int, int]] = {}
        for r, o in new_ineqs:
            a = r[:-1]
            g = math.gcd(*a)
            if g == 0:
                if r[-1] < 0:
                    return Polyhedron.empty(out_dim)
                continue
            key = tuple(v // g for v in a)
            bound = Fraction(r[-1], g)
            cur = best.get(key)
            pc = bin(o).count("1")
            if cur is None or bound < cur[0] or (bound == cur[0] and pc < cur[2]):
                best[key] = (bound, o, pc)
        ineqs = [(list(_primitive([v * bd.denominator for v in key] + [bd.numerator])), o)
                 for key, (bd, o, _) in best.items()]
        eq_rows = []
        for e in new_eqs:
            ne = _normalize_eq(e)
            if ne is None:
                continue
            if all(v == 0 for v in ne[:-1]):
                return Polyhedron.empty(out_dim)
            if ne not in eq_rows:
                eq_rows.append(ne)
        eqs = [list(e) for e in eq_rows]
        if len(ineqs) > cap:
            raise FMRowCapExceeded(f"{len(ineqs)} rows after elimination exceeds "
                                   f"STOCHDP_FM_ROW_CAP={cap}")

        if prune_rows:
            probe = Polyhedron(dim, [r for r, _ in ineqs], eqs, _raw=True)
            if probe.is_empty():
                return Polyhedron.empty(out_dim)
            rows = [tuple(r) for r, _ in ineqs]
            eqs_t = _independent_eqs([tuple(e) for e in eqs], dim)
            keep = irredundant(rows, eqs_t, dim)
            # pruning can remove rows that certify the ancestor bound, so the
            # pruned system starts a fresh Chernikov count
            ineqs = [(ineqs[j][0], 1 << i) for i, j in enumerate(keep)]
            eqs = [list(e) for e in eqs_t]
            fm_steps = 0

    Q = Polyhedron(out_dim, [tuple(r) for r, _ in ineqs], [tuple(e) for e in eqs], _raw=True)
    if prune_rows:
        Q._empty = False
    return Q


# -- set relations --------------------------------------------------------------

def includes(P: Polyhedron, Q: Polyhedron) -> bool:
    """True iff ``Q`` is a subset of ``P``."""
    if P.dim != Q.dim:
        raise ValueError("dimension mismatch")
    if Q.is_empty():
        return True
    if P.is_empty():
        return False
    for r in P.ineqs:
        res = Q.maximize(r[:-1])
        if res.status != "optimal" or res.value > r[-1]:
            return False
    for r in P.eqs:
        hi = Q.maximize(r[:-1])
        if hi.status != "optimal" or hi.value != r[-1]:
            return False
        lo = Q.minimize(r[:-1])
        if lo.status != "optimal" or lo.value != r[-1]:
            return False
    return True


def same_set(P: Polyhedron, Q: Polyhedron) -> bool:
    return includes(P, Q) and includes(Q, P)


# -- cones ------------------------------------------------------------------------

def cone_lineality(N: Polyhedron):
    """Lineality space of a polyhedral cone and whether the cone is a subspace.

    Returns ``(basis, is_linear, witness)``; ``witness`` lies in the cone
    with its negative outside whenever ``is_linear`` is False.
    """
    from .linalg import nullspace
    if not N.is_homogeneous:
        raise ValueError("cone rows must be homogeneous")
    rows = [r[:-1] for r in N.ineqs] + [r[:-1] for r in N.eqs]
    basis = nullspace([list(r) for r in rows if any(r)], N.dim)
    n = N.dim
    A = [r[:-1] for r in N.ineqs]
    E = [r[:-1] for r in N.eqs]
    box = [[1 if j == i else 0 for j in range(n)] for i in range(n)]
    box += [[-1 if j == i else 0 for j in range(n)] for i in range(n)]
    for r in N.ineqs:
        res = lp.minimize(r[:-1], A + box, [0] * len(A) + [1] * (2 * n), E, [0] * len(E))
        if res.value < 0:
            return basis, False, res.x
    return basis, True, None
