"""Double description: generators of polyhedral cones and polyhedra.

Lines are carried explicitly, so the input cone need not be pointed.  A
constraint that cuts a line turns that line into a ray and shears the
remaining generators onto its hyperplane; otherwise the usual DD step
combines adjacent pairs of rays (combinatorial adjacency test).
"""
from __future__ import annotations

import math
from fractions import Fraction
from typing import List, Sequence, Tuple

from .polyhedron import Polyhedron


def _prim(v: Sequence[int]) -> Tuple[int, ...]:
    g = math.gcd(*v)
    return tuple(x // g for x in v) if g > 1 else tuple(v)


def _dot(h, v) -> int:
    return sum(a * b for a, b in zip(h, v))


def cone_generators(rows: Sequence[Sequence[int]], k: int):
    """Generators of ``{x in Q^k : h.x <= 0 for h in rows}``.

    Returns ``(rays, lines)`` as primitive integer tuples.
    """
    lines: List[Tuple[int, ...]] = [tuple(int(i == j) for j in range(k)) for i in range(k)]
    rays: List[Tuple[Tuple[int, ...], int]] = []  # (vector, zero-set bitmask)
    for idx, h in enumerate(rows):
        bit = 1 << idx
        hl = [_dot(h, l) for l in lines]
        j = next((i for i, v in enumerate(hl) if v != 0), None)
        if j is not None:
            l = lines.pop(j)
            c = hl.pop(j)
            sg = 1 if c > 0 else -1
            lines = [_prim([abs(c) * a - sg * v * b for a, b in zip(l2, l)])
                     for l2, v in zip(lines, hl)]
            new_rays = []
            for r, z in rays:
                v = _dot(h, r)
                if v:
                    r = _prim([abs(c) * a - sg * v * b for a, b in zip(r, l)])
                new_rays.append((r, z | bit))
            new_rays.append((tuple(-sg * a for a in l), 0 | _zero_prev(idx)))
            rays = new_rays
            continue
        vals = [_dot(h, r) for r, _ in rays]
        pos = [i for i, v in enumerate(vals) if v > 0]
        neg = [i for i, v in enumerate(vals) if v < 0]
        new_rays = [rays[i] for i in neg]
        new_rays += [(r, z | bit) for (r, z), v in zip(rays, vals) if v == 0]
        need = k - len(lines) - 2
        for i in pos:
            rp, zp = rays[i]
            for jn in neg:
                rq, zq = rays[jn]
                Z = zp & zq
                if bin(Z).count("1") < need:
                    continue
                if any((zr & Z) == Z for t, (_, zr) in enumerate(rays) if t != i and t != jn):
                    continue
                vp, vq = vals[i], vals[jn]
                new = _prim([vp * b - vq * a for a, b in zip(rp, rq)])
                new_rays.append((new, Z | bit))
        rays = new_rays
    return [r for r, _ in rays], lines


def _zero_prev(idx: int) -> int:
    # a former line satisfies every earlier constraint with equality
    return (1 << idx) - 1


def generators(P: Polyhedron):
    """Points, rays and lines of a polyhedron, as tuples of Fractions.

    ``P = conv(points) + cone(rays) + span(lines)``; an empty polyhedron
    has no points.
    """
    n = P.dim
    rows = []
    for r in P.eqs:
        rows.append(list(r[:-1]) + [-r[-1]])
        rows.append([-v for v in r[:-1]] + [r[-1]])
    rows.append([0] * n + [-1])
    for r in P.ineqs:
        rows.append(list(r[:-1]) + [-r[-1]])
    rays, lines = cone_generators(rows, n + 1)
    points, out_rays = [], []
    for r in rays:
        if r[n] > 0:
            points.append(tuple(Fraction(v, r[n]) for v in r[:n]))
        else:
            out_rays.append(tuple(Fraction(v) for v in r[:n]))
    out_lines = [tuple(Fraction(v) for v in l[:n]) for l in lines]
    return points, out_rays, out_lines
