"""Exact dense linear algebra on lists of Fractions."""
from __future__ import annotations

from fractions import Fraction
from typing import List, Sequence

Vector = tuple
Matrix = List[List[Fraction]]


def as_fractions(v) -> tuple:
    return tuple(x if isinstance(x, Fraction) else Fraction(x) for x in v)


def dot(u, v) -> Fraction:
    return sum((a * b for a, b in zip(u, v)), Fraction(0))


def matmul(A, B) -> Matrix:
    Bt = list(zip(*B)) if B else []
    return [[dot(row, col) for col in Bt] for row in A]


def matvec(A, v) -> tuple:
    return tuple(dot(row, v) for row in A)


def transpose(A) -> Matrix:
    return [list(col) for col in zip(*A)] if A else []


def rref(A: Sequence[Sequence], ncols: int | None = None):
    """Reduced row echelon form. Returns (rows, pivot_columns)."""
    R = [list(as_fractions(row)) for row in A]
    if ncols is None:
        ncols = len(R[0]) if R else 0
    pivots = []
    r = 0
    for c in range(ncols):
        p = next((i for i in range(r, len(R)) if R[i][c] != 0), None)
        if p is None:
            continue
        R[r], R[p] = R[p], R[r]
        inv = 1 / R[r][c]
        R[r] = [x * inv for x in R[r]]
        for i in range(len(R)):
            if i != r and R[i][c] != 0:
                f = R[i][c]
                R[i] = [x - f * y for x, y in zip(R[i], R[r])]
        pivots.append(c)
        r += 1
        if r == len(R):
            break
    return R[:r], pivots


def rank(A, ncols=None) -> int:
    return len(rref(A, ncols)[1])


def nullspace(A: Sequence[Sequence], n: int) -> List[tuple]:
    """Basis of ``{x in Q^n : A x = 0}``, one vector per free column."""
    R, pivots = rref(A, n) if A else ([], [])
    free = [j for j in range(n) if j not in pivots]
    basis = []
    for f in free:
        v = [Fraction(0)] * n
        v[f] = Fraction(1)
        for row, p in zip(R, pivots):
            v[p] = -row[f]
        basis.append(tuple(v))
    return basis


def solve(A, b):
    """One solution of ``A x = b`` (free variables set to zero), or None."""
    n = len(A[0]) if A else 0
    aug = [list(as_fractions(row)) + [Fraction(bi)] for row, bi in zip(A, b)]
    R, pivots = rref(aug, n + 1)
    if n in pivots:
        return None
    x = [Fraction(0)] * n
    for row, p in zip(R, pivots):
        x[p] = row[n]
    return tuple(x)


def inverse(A) -> Matrix:
    n = len(A)
    aug = [list(as_fractions(row)) + [Fraction(int(i == j)) for j in range(n)]
           for i, row in enumerate(A)]
    R, pivots = rref(aug, n)
    if pivots != list(range(n)):
        raise ZeroDivisionError("singular matrix")
    return [row[n:] for row in R]


def pinv(A) -> Matrix:
    """Moore-Penrose pseudo-inverse via a full-rank factorization ``A = F G``."""
    m = len(A)
    n = len(A[0]) if m else 0
    R, pivots = rref(A, n)
    if not pivots:
        return [[Fraction(0)] * m for _ in range(n)]
    G = R
    F = [[Fraction(A[i][p]) for p in pivots] for i in range(m)]
    Ft = transpose(F)
    Gt = transpose(G)
    left = inverse(matmul(G, Gt))
    right = inverse(matmul(Ft, F))
    return matmul(matmul(Gt, left), matmul(right, Ft))


def independent_subset(vectors) -> List[tuple]:
    """A maximal linearly independent subset, preserving order."""
    chosen: List[tuple] = []
    for v in vectors:
        if rank(chosen + [v], len(v)) > len(chosen):
            chosen.append(tuple(v))
    return chosen


def project_orthogonal(x, basis) -> tuple:
    """Orthogonal projection of ``x`` onto the complement of ``span(basis)``.

    The basis vectors must be linearly independent; the Gram system is
    solved exactly.
    """
    x = as_fractions(x)
    if not basis:
        return x
    B = [as_fractions(b) for b in basis]
    gram = [[dot(u, v) for v in B] for u in B]
    coef = solve(gram, [dot(u, x) for u in B])
    if coef is None:
        raise ValueError("basis vectors are not independent")
    out = list(x)
    for c, b in zip(coef, B):
        if c:
            out = [o - c * bi for o, bi in zip(out, b)]
    return tuple(out)


def same_span(U, V, n) -> bool:
    ru = rank(list(U), n)
    return ru == rank(list(V), n) == rank(list(U) + list(V), n)
