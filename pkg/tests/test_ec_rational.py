from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import MORDELL_17_POINTS, P1, P2
from lindep.arith import is_prime
from lindep.ec_finite import fp_add
from lindep.ec_rational import (
    CurveQ,
    add,
    good_primes,
    linear_combination,
    neg,
    point,
    reduce_point,
    scalar_mul,
    torsion_order,
    torsion_subgroup,
)


def test_singular_curve_rejected():
    with pytest.raises(ValueError):
        CurveQ(0, 0)
    with pytest.raises(ValueError):
        CurveQ(-3, 2)  # (x - 1)^2 (x + 2)


def test_discriminants():
    assert CurveQ(0, 17).discriminant == -124848 == -(2**4) * 3**3 * 17**2
    assert CurveQ(-1, 0).discriminant == 64


def test_add_examples(e17):
    assert add(e17, P1, None) == P1
    assert add(e17, None, P1) == P1
    assert add(e17, P1, P2) == point(Fraction(1, 4), Fraction(-33, 8))
    assert Fraction(-33, 8) ** 2 == Fraction(1, 4) ** 3 + 17
    assert add(e17, P1, neg(P1)) is None
    E = CurveQ(0, -2)
    assert add(E, point(3, 5), point(3, 5)) == point(Fraction(129, 100), Fraction(-383, 1000))
    assert E.contains(point(Fraction(129, 100), Fraction(-383, 1000)))


def test_doubling_two_torsion_point():
    E = CurveQ(-1, 0)
    assert add(E, point(0, 0), point(0, 0)) is None


def test_scalar_mul_examples(e17):
    assert scalar_mul(e17, 0, P1) is None
    assert scalar_mul(e17, -1, P1) == point(-2, -3)
    assert scalar_mul(e17, 2, P1) == add(e17, P1, P1)
    assert scalar_mul(e17, 5, P1) == add(e17, scalar_mul(e17, 3, P1), scalar_mul(e17, 2, P1))
    assert scalar_mul(e17, -3, P2) == neg(scalar_mul(e17, 3, P2))


def test_linear_combination_examples(e17):
    assert linear_combination(e17, (0, 0), [P1, P2]) is None
    assert linear_combination(e17, (1,), [P1]) == P1
    assert linear_combination(e17, (1, 1), [P1, P2]) == point(Fraction(1, 4), Fraction(-33, 8))
    with pytest.raises(ValueError):
        linear_combination(e17, (1,), [P1, P2])


small = st.integers(-3, 3)


@settings(max_examples=60, deadline=None)
@given(small, small, small, small, small, small)
def test_group_law_axioms(a1, b1, a2, b2, a3, b3):
    E = CurveQ(0, 17)
    P = linear_combination(E, (a1, b1), [P1, P2])
    Q = linear_combination(E, (a2, b2), [P1, P2])
    R = linear_combination(E, (a3, b3), [P1, P2])
    for X in (P, Q, R, add(E, P, Q)):
        assert E.contains(X)
    assert add(E, P, Q) == add(E, Q, P)
    assert add(E, add(E, P, Q), R) == add(E, P, add(E, Q, R))
    assert add(E, P, neg(P)) is None
    assert add(E, P, None) == P
    # linearity of linear_combination in the coefficients
    assert add(E, P, Q) == linear_combination(E, (a1 + a2, b1 + b2), [P1, P2])


def test_points_have_canonical_form(e17):
    P = scalar_mul(e17, 3, P1)
    for c in P:
        assert isinstance(c, Fraction) and c.denominator > 0


@pytest.mark.parametrize(
    "ab, bound, expected",
    [((0, 17), 20, [5, 7, 11, 13, 19]), ((-1, 0), 12, [5, 7, 11]), ((0, 17), 4, []), ((-1, 0), 4, [])],
)
def test_good_primes(ab, bound, expected):
    assert list(good_primes(CurveQ(*ab), bound)) == expected


def test_good_primes_by_division(fixture_curve):
    got = list(good_primes(fixture_curve, 300))
    assert got == [p for p in range(5, 301) if is_prime(p) and fixture_curve.discriminant % p]


def test_reduce_point_examples(e17):
    assert reduce_point(e17, None, 5) is None
    assert reduce_point(e17, P1, 5) == (3, 3)
    E5 = e17.reduce(5)
    S = add(e17, P1, P2)
    assert reduce_point(e17, S, 5) == fp_add(E5, reduce_point(e17, P1, 5), reduce_point(e17, P2, 5))


def test_reduce_point_to_infinity_when_denominator_vanishes(e17):
    # x(P1 + P2) = 1/4, so it reduces to infinity only at p = 2 (never used);
    # 2*P2 has denominator divisible by 5 if and only if the reduction has order dividing 2.
    for k in range(1, 7):
        Q = scalar_mul(e17, k, P2)
        for p in good_primes(e17, 60):
            img = reduce_point(e17, Q, p)
            assert (img is None) == (Q[0].denominator % p == 0)


@pytest.mark.parametrize("p", [p for p in range(5, 200) if is_prime(p) and (-124848) % p])
def test_reduction_is_homomorphism(e17, p):
    Ep = e17.reduce(p)
    pts = MORDELL_17_POINTS + [scalar_mul(e17, 3, P1), add(e17, P1, scalar_mul(e17, -2, P2))]
    for P in pts:
        for Q in pts[:4]:
            lhs = reduce_point(e17, add(e17, P, Q), p)
            rhs = fp_add(Ep, reduce_point(e17, P, p), reduce_point(e17, Q, p))
            assert lhs == rhs
            assert Ep.contains(lhs)


@pytest.mark.parametrize(
    "ab, order",
    [((0, -2), 1), ((0, 1), 6), ((-1, 0), 4), ((0, 17), 1), ((0, 3), 1)],
)
def test_torsion_orders(ab, order):
    T = torsion_subgroup(CurveQ(*ab))
    assert T.order == order == len(set(T.points))


def test_torsion_points_explicit():
    T = torsion_subgroup(CurveQ(0, 1))
    assert set(T.points) == {None, point(2, 3), point(2, -3), point(0, 1), point(0, -1), point(-1, 0)}
    T = torsion_subgroup(CurveQ(-1, 0))
    assert set(T.points) == {None, point(0, 0), point(1, 0), point(-1, 0)}


@pytest.mark.parametrize("ab", [(0, 1), (-1, 0), (0, -432), (-43, 166), (0, 17)])
def test_torsion_group_closed(ab):
    E = CurveQ(*ab)
    T = torsion_subgroup(E)
    pts = set(T.points)
    for P in pts:
        assert T.order % torsion_order(E, P) == 0
        for Q in pts:
            assert add(E, P, Q) in pts


def test_torsion_larger_examples():
    # y^2 = x^3 - 43x + 166 has a rational point of order 7
    assert torsion_subgroup(CurveQ(-43, 166)).order == 7
    # y^2 = x^3 - 432 (the Fermat cubic) has torsion of order 3
    assert torsion_subgroup(CurveQ(0, -432)).order == 3


def test_torsion_injective_under_reduction(fixture_curve):
    """Reduction is injective on torsion at good primes prime to its order."""
    T = torsion_subgroup(fixture_curve)
    for p in good_primes(fixture_curve, 1000):
        if T.order % p == 0:
            continue
        images = {reduce_point(fixture_curve, P, p) for P in T.points}
        assert len(images) == T.order
