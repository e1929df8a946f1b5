"""Exact arithmetic on E(Q) for y^2 = x^3 + a*x + b with integer a, b."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Sequence, Union

from .arith import factor, is_prime
from .ec_finite import CurveFp

MAZUR_ORDER_BOUND = 12
MAZUR_GROUP_BOUND = 16


@dataclass(frozen=True)
class CurveQ:
    a: int
    b: int
    discriminant: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "discriminant", -16 * (4 * self.a**3 + 27 * self.b**2))
        if self.discriminant == 0:
            raise ValueError(f"singular curve y^2 = x^3 + {self.a}x + {self.b}")

    def contains(self, P: "PointQ") -> bool:
        if P is None:
            return True
        x, y = P
        return y * y == x**3 + self.a * x + self.b

    def reduce(self, p: int) -> CurveFp:
        return CurveFp(p, self.a % p, self.b % p)

    def __str__(self):
        return f"y^2 = x^3 + {self.a}x + {self.b}"


# A rational point is None (the point at infinity) or an (x, y) pair of
# Fractions; Fraction keeps lowest terms with a positive denominator.
PointQ = Union[None, tuple]
INFINITY: PointQ = None


def point(x, y) -> tuple[Fraction, Fraction]:
    return Fraction(x), Fraction(y)


def neg(P: PointQ) -> PointQ:
    if P is None:
        return None
    return P[0], -P[1]


def add(E: CurveQ, P: PointQ, Q: PointQ) -> PointQ:
    if P is None:
        return Q
    if Q is None:
        return P
    x1, y1 = P
    x2, y2 = Q
    if x1 == x2:
        if y1 != y2 or y1 == 0:
            return None
        lam = (3 * x1 * x1 + E.a) / (2 * y1)
    else:
        lam = (y2 - y1) / (x2 - x1)
    x3 = lam * lam - x1 - x2
    return x3, lam * (x1 - x3) - y1


def scalar_mul(E: CurveQ, n: int, P: PointQ) -> PointQ:
    if n < 0:
        n, P = -n, neg(P)
    R = None
    while n:
        if n & 1:
            R = add(E, R, P)
        n >>= 1
        if n:
            P = add(E, P, P)
    return R


def linear_combination(E: CurveQ, coeffs: Sequence[int], points: Sequence[PointQ]) -> PointQ:
    if len(coeffs) != len(points):
        raise ValueError("coefficient and point counts differ")
    R = None
    for c, P in zip(coeffs, points):
        if c:
            R = add(E, R, scalar_mul(E, c, P))
    return R


def torsion_order(E: CurveQ, P: PointQ, bound: int = MAZUR_ORDER_BOUND) -> int | None:
    """Order of P if it is at most `bound`, else None."""
    R = P
    for n in range(1, bound + 1):
        if R is None:
            return n
        R = add(E, R, P)
    return None


def good_primes(E: CurveQ, bound: int, start: int = 5) -> Iterator[int]:
    """Primes 5 <= p <= bound not dividing the discriminant, ascending."""
    for p in range(max(start, 5), bound + 1):
        if is_prime(p) and E.discriminant % p:
            yield p


def reduce_point(E: CurveQ, P: PointQ, p: int):
    """Image of P in E(F_p) via projective coordinates (X : Y : Z)."""
    if P is None:
        return None
    x, y = P
    # x = X/Z, y = Y/Z with Z = lcm of denominators; for points on the curve
    # den(x) = d^2, den(y) = d^3, so Z = d^3.
    Z = math.lcm(x.denominator, y.denominator)
    X = x.numerator * (Z // x.denominator)
    Y = y.numerator * (Z // y.denominator)
    if Z % p == 0:
        return None
    zinv = pow(Z, -1, p)
    return X * zinv % p, Y * zinv % p


@dataclass(frozen=True)
class TorsionGroup:
    points: tuple
    order: int


def _divisors(n: int) -> list[int]:
    divs = [1]
    for q, e in factor(n):
        divs = [d * q**k for d in divs for k in range(e + 1)]
    return sorted(divs)


def _integer_roots(a: int, b: int) -> list[int]:
    """Integer roots x of x^3 + a x + b = 0."""
    if b == 0:
        roots = {0}
        s = math.isqrt(-a) if a <= 0 else -1
        if s >= 0 and s * s == -a:
            roots |= {s, -s}
        return sorted(roots)
    return sorted(x for d in _divisors(abs(b)) for x in (d, -d) if x**3 + a * x + b == 0)


def torsion_subgroup(E: CurveQ) -> TorsionGroup:
    """Rational torsion via Lutz-Nagell candidates confirmed by order checks."""
    D = abs(E.discriminant)
    ys = [0]
    for d in _divisors(D):
        s = math.isqrt(d)
        if s * s == d:
            ys.append(s)
    found = [None]
    for y in ys:
        for x in _integer_roots(E.a, E.b - y * y):
            for yy in {y, -y}:
                P = point(x, yy)
                if torsion_order(E, P) is not None:
                    found.append(P)
    order = len(found)
    assert order <= MAZUR_GROUP_BOUND, "torsion exceeds Mazur's bound"
    return TorsionGroup(tuple(found), order)
