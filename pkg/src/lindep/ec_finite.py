"""The group E(F_p): counting, two-generator structure, discrete logs and
local membership of a point in the subgroup spanned by others.

Points are None (infinity) or (x, y) tuples of residues mod p.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Sequence

from .arith import (
    BSGS_TABLE_CAP,
    AffineSolutionSet,
    Factorization,
    TableTooLarge,
    crt,
    factor,
    pohlig_hellman,
    solve_congruence_system,
)

BRUTE_FORCE_LIMIT = 1000
MESTRE_POINTS = 40
STRUCTURE_ATTEMPTS = 12


class AmbiguousOrder(RuntimeError):
    pass


class StructureNotFound(RuntimeError):
    pass


class InternalInconsistency(RuntimeError):
    pass


@dataclass(frozen=True)
class CurveFp:
    p: int
    a: int
    b: int

    def __post_init__(self):
        if (4 * self.a**3 + 27 * self.b**2) % self.p == 0:
            raise ValueError(f"curve is singular mod {self.p}")

    def contains(self, P) -> bool:
        if P is None:
            return True
        x, y = P
        return (y * y - x * x * x - self.a * x - self.b) % self.p == 0

    def hasse_interval(self) -> tuple[int, int]:
        w = math.isqrt(4 * self.p)
        return self.p + 1 - w, self.p + 1 + w


def fp_neg(E: CurveFp, P):
    if P is None:
        return None
    return P[0], -P[1] % E.p


def fp_add(E: CurveFp, P, Q):
    if P is None:
        return Q
    if Q is None:
        return P
    p = E.p
    x1, y1 = P
    x2, y2 = Q
    if x1 == x2:
        if (y1 + y2) % p == 0:
            return None
        lam = (3 * x1 * x1 + E.a) * pow(2 * y1, -1, p) % p
    else:
        lam = (y2 - y1) * pow(x2 - x1, -1, p) % p
    x3 = (lam * lam - x1 - x2) % p
    return x3, (lam * (x1 - x3) - y1) % p


def fp_scalar_mul(E: CurveFp, n: int, P):
    if n < 0:
        n, P = -n, fp_neg(E, P)
    R = None
    while n:
        if n & 1:
            R = fp_add(E, R, P)
        n >>= 1
        if n:
            P = fp_add(E, P, P)
    return R


def sqrt_mod(a: int, p: int) -> int | None:
    """Tonelli-Shanks square root mod an odd prime, None for non-residues."""
    a %= p
    if a == 0:
        return 0
    if pow(a, (p - 1) // 2, p) != 1:
        return None
    if p % 4 == 3:
        return pow(a, (p + 1) // 4, p)
    q, s = p - 1, 0
    while q % 2 == 0:
        q //= 2
        s += 1
    z = 2
    while pow(z, (p - 1) // 2, p) != p - 1:
        z += 1
    m, c, t, r = s, pow(z, q, p), pow(a, q, p), pow(a, (q + 1) // 2, p)
    while t != 1:
        i, t2 = 0, t
        while t2 != 1:
            t2 = t2 * t2 % p
            i += 1
        b = pow(c, 1 << (m - i - 1), p)
        m, c = i, b * b % p
        t, r = t * c % p, r * b % p
    return r


def random_point(E: CurveFp, rng: random.Random):
    while True:
        x = rng.randrange(E.p)
        y = sqrt_mod(x**3 + E.a * x + E.b, E.p)
        if y is not None:
            return x, (y if rng.random() < 0.5 else -y % E.p)


def enumerate_points(E: CurveFp) -> list:
    """Every point of E(F_p); only sensible for small p."""
    p = E.p
    roots: dict[int, list[int]] = {}
    for y in range(p):
        roots.setdefault(y * y % p, []).append(y)
    pts = [None]
    for x in range(p):
        for y in roots.get((x**3 + E.a * x + E.b) % p, []):
            pts.append((x, y))
    return pts


def count_points_brute(E: CurveFp) -> int:
    p = E.p
    is_sq = bytearray(p)
    for y in range(1, (p + 1) // 2):
        is_sq[y * y % p] = 1
    n = 1
    for x in range(p):
        v = (x * x * x + E.a * x + E.b) % p
        n += 1 if v == 0 else 2 * is_sq[v]
    return n


def point_order(E: CurveFp, P, n: int, fact: Factorization | None = None) -> int:
    """Exact order of P given a multiple n of it."""
    if fact is None:
        fact = factor(n)
    order = n
    for q, e in fact:
        for _ in range(e):
            if fp_scalar_mul(E, order // q, P) is None:
                order //= q
            else:
                break
    return order


def hasse_multiple(E: CurveFp, P, table_cap: int = BSGS_TABLE_CAP) -> int:
    """Some m in the Hasse interval with m*P = infinity (baby-step giant-step)."""
    lo, hi = E.hasse_interval()
    s = math.isqrt(hi - lo) + 1
    if s > table_cap:
        raise TableTooLarge(f"{s} baby steps exceed cap {table_cap}")
    table = {}
    cur = None
    for j in range(s):
        table.setdefault(fp_neg(E, cur), j)
        cur = fp_add(E, cur, P)
    step = cur  # s*P
    Q = fp_scalar_mul(E, lo, P)
    for i in range(s + 1):
        j = table.get(Q)
        if j is not None and lo + i * s + j <= hi:
            return lo + i * s + j
        Q = fp_add(E, Q, step)
    raise InternalInconsistency(f"no multiple of {P} in the Hasse interval mod {E.p}")


def order_in_hasse(E: CurveFp, P) -> int:
    """Order of P found without knowing #E(F_p)."""
    if P is None:
        return 1
    m = hasse_multiple(E, P)
    return point_order(E, P, m)


def count_points(
    E: CurveFp,
    rng: random.Random | None = None,
    brute_force_limit: int = BRUTE_FORCE_LIMIT,
    max_points: int = MESTRE_POINTS,
) -> int:
    """#E(F_p): brute force for small p, else Mestre's method.

    Point orders on E and on its quadratic twist E' are accumulated until
    exactly one n in the Hasse interval is a multiple of the first lcm while
    2p + 2 - n is a multiple of the second.
    """
    p = E.p
    if p <= brute_force_limit:
        return count_points_brute(E)
    rng = rng or random.Random(p)
    lo, hi = E.hasse_interval()
    d = 2
    while pow(d, (p - 1) // 2, p) != p - 1:
        d += 1
    twist = CurveFp(p, E.a * d * d % p, E.b * d * d * d % p)
    L = Lt = 1
    for k in range(max_points):
        if k % 2 == 0:
            L = math.lcm(L, order_in_hasse(E, random_point(E, rng)))
        else:
            Lt = math.lcm(Lt, order_in_hasse(twist, random_point(twist, rng)))
        first = -(-lo // L) * L
        fits = [n for n in range(first, hi + 1, L) if (2 * p + 2 - n) % Lt == 0]
        if len(fits) == 1:
            return fits[0]
    raise AmbiguousOrder(f"point orders never pinned #E(F_{p}) (exponents {L}, {Lt})")


@dataclass(frozen=True)
class Component:
    """The l-primary part Z/l^a x Z/l^b of E(F_p), with its generators."""

    l: int
    a: int
    b: int
    g1: object
    g2: object


@dataclass(frozen=True)
class GroupStructure:
    p: int
    n: int
    d1: int
    d2: int
    g1: object
    g2: object
    factorization_n: Factorization
    components: tuple[Component, ...] = field(repr=False)


def _is_multiple(E, P, base, order_base: int) -> int | None:
    """k with k*base == P inside the cyclic group <base>, or None."""
    return dlog(E, base, order_base, P, factor(order_base))


def _l_order_exp(E, P, l: int) -> int:
    k = 0
    while P is not None:
        P = fp_scalar_mul(E, l, P)
        k += 1
    return k


def _component(E: CurveFp, n: int, l: int, e: int, rng: random.Random, samples: int) -> Component | None:
    cof = n // l**e
    pts = [fp_scalar_mul(E, cof, random_point(E, rng)) for _ in range(samples)]
    best = max(pts, key=lambda Q: _l_order_exp(E, Q, l))
    b = _l_order_exp(E, best, l)
    a = e - b
    if a > b:
        return None
    g2 = best
    if a == 0:
        return Component(l, 0, b, None, g2)
    lb = l**b
    for Q in pts + [fp_scalar_mul(E, cof, random_point(E, rng)) for _ in range(samples)]:
        if _is_multiple(E, fp_scalar_mul(E, l ** (a - 1), Q), g2, lb) is not None:
            continue
        m = _is_multiple(E, fp_scalar_mul(E, l**a, Q), g2, lb)
        if m is None or m % l**a:
            return None
        g1 = fp_add(E, Q, fp_scalar_mul(E, -(m // l**a), g2))
        low = fp_scalar_mul(E, l ** (a - 1), g1)
        if low is None or fp_scalar_mul(E, l, low) is not None:
            return None
        if _is_multiple(E, low, g2, lb) is not None:
            return None
        return Component(l, a, b, g1, g2)
    return None


def group_structure(
    E: CurveFp,
    n: int,
    rng: random.Random | None = None,
    attempts: int = STRUCTURE_ATTEMPTS,
    samples: int = 16,
) -> GroupStructure:
    """Decompose E(F_p) = Z/d1 x Z/d2 (d1 | d2) with explicit generators.

    Each l-primary component is built from random points and then checked
    exactly (generator orders and trivial intersection), so a returned
    structure is proven correct for the given n.
    """
    rng = rng or random.Random(E.p)
    fact = factor(n)
    comps = []
    for l, e in fact:
        for _ in range(attempts):
            c = _component(E, n, l, e, rng, samples)
            if c is not None:
                comps.append(c)
                break
        else:
            raise StructureNotFound(f"no {l}-primary decomposition mod {E.p}")
    d1 = math.prod(c.l**c.a for c in comps)
    d2 = math.prod(c.l**c.b for c in comps)
    g1 = g2 = None
    for c in comps:
        g1 = fp_add(E, g1, c.g1)
        g2 = fp_add(E, g2, c.g2)
    if d1 * d2 != n or d2 % d1 or (E.p - 1) % d1:
        raise StructureNotFound(f"inconsistent structure ({d1}, {d2}) for n={n} mod {E.p}")
    return GroupStructure(E.p, n, d1, d2, g1, g2, fact, tuple(comps))


def dlog(E: CurveFp, base, m: int, target, fact: Factorization | None = None) -> int | None:
    """k mod m with k*base == target, or None if target is not in <base>."""
    if fact is None:
        fact = factor(m)
    return pohlig_hellman(
        lambda P, Q: fp_add(E, P, Q),
        lambda P, k: fp_scalar_mul(E, k, P),
        None,
        base,
        target,
        m,
        fact,
    )


def _pair_digits(E, R, u1, u2, l: int, table_cap: int):
    """(x, y) in [0, l)^2 with R == x*u1 + y*u2, via a 2-D baby-step table."""
    if l > table_cap:
        raise TableTooLarge(f"2-D table of {l} entries exceeds cap {table_cap}")
    table = {}
    cur = None
    for x in range(l):
        table[cur] = x
        cur = fp_add(E, cur, u1)
    neg_u2 = fp_neg(E, u2)
    cur = R
    for y in range(l):
        x = table.get(cur)
        if x is not None:
            return x, y
        cur = fp_add(E, cur, neg_u2)
    return None


def coordinates(E: CurveFp, S: GroupStructure, P, table_cap: int = BSGS_TABLE_CAP) -> tuple[int, int]:
    """(i mod d1, j mod d2) with P == i*g1 + j*g2."""
    i_parts, j_parts = [], []
    for c in S.components:
        l, a, b = c.l, c.a, c.b
        cof = S.n // l ** (a + b)
        Pl = fp_scalar_mul(E, cof, P)
        # cof*P is expressed in the cofactor images of the global generators
        G1 = fp_scalar_mul(E, cof, c.g1)
        G2 = fp_scalar_mul(E, cof, c.g2)
        if a == 0:
            j = dlog(E, G2, l**b, Pl, Factorization(l**b, ((l, b),)))
            if j is None:
                raise InternalInconsistency(f"point outside structure mod {E.p}")
            j_parts.append((j, l**b))
            continue
        la = l**a
        j0 = 0
        if b > a:
            j0 = dlog(E, fp_scalar_mul(E, la, G2), l ** (b - a), fp_scalar_mul(E, la, Pl),
                      Factorization(l ** (b - a), ((l, b - a),)))
            if j0 is None:
                raise InternalInconsistency(f"point outside structure mod {E.p}")
        rest = fp_add(E, Pl, fp_scalar_mul(E, -j0, G2))
        h = fp_scalar_mul(E, l ** (b - a), G2)
        u1 = fp_scalar_mul(E, l ** (a - 1), G1)
        u2 = fp_scalar_mul(E, l ** (a - 1), h)
        x = y = 0
        for t in range(a):
            R = fp_add(E, rest, fp_neg(E, fp_add(E, fp_scalar_mul(E, x, G1), fp_scalar_mul(E, y, h))))
            R = fp_scalar_mul(E, l ** (a - 1 - t), R)
            digits = _pair_digits(E, R, u1, u2, l, table_cap)
            if digits is None:
                raise InternalInconsistency(f"2-D search failed mod {E.p}")
            x += digits[0] * l**t
            y += digits[1] * l**t
        i_parts.append((x, la))
        j_parts.append(((j0 + l ** (b - a) * y) % l**b, l**b))
    i = crt(i_parts)[0] if i_parts else 0
    j = crt(j_parts)[0] if j_parts else 0
    if fp_add(E, fp_scalar_mul(E, i, S.g1), fp_scalar_mul(E, j, S.g2)) != P:
        raise InternalInconsistency(f"coordinates do not reproduce the point mod {E.p}")
    return i % S.d1, j % S.d2


@dataclass(frozen=True)
class LocalMembership:
    """Outcome of testing target in <gens> inside E(F_p).

    `coset` is the set of coefficient vectors c with sum c_i*gens_i ==
    target (it always contains d2*Z^r), or None when no such c exists.
    """

    p: int
    coset: AffineSolutionSet | None
    modulus: int
    target_coords: tuple[int, int]
    gen_coords: tuple[tuple[int, int], ...]

    @property
    def solvable(self) -> bool:
        return self.coset is not None


def local_membership(E: CurveFp, S: GroupStructure, target, gens: Sequence) -> LocalMembership:
    t = coordinates(E, S, target)
    gc = [coordinates(E, S, g) for g in gens]
    A = [[c[0] for c in gc], [c[1] for c in gc]]
    coset = solve_congruence_system(A, list(t), [S.d1, S.d2], r=len(gens))
    return LocalMembership(E.p, coset, S.d2, t, tuple(gc))
