import itertools
import math
from fractions import Fraction
from math import comb

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from frobsplit.errors import ParseError, ResourceError
from frobsplit.finitefield import GF, checked_power
from frobsplit.polyfrob import SparsePoly
from frobsplit.splitcrit import (
    ANY,
    INFINITY,
    DivisorP1,
    P1Point,
    fedder_hypersurface,
    find_nonsplit_mu,
    four_point_configuration,
    fst_bounds,
    hasse_invariant,
    legendre_configuration,
    legendre_cubic,
    lemma_polynomial,
    level_split_test,
    nu,
    parse_divisor,
    point_count_legendre,
    split_product_bivariate,
    split_result,
)

ODD_PRIMES = [3, 5, 7, 11, 13, 17, 19, 23, 29]


def _bivariate_split(p, e, delta):
    """Oracle: multiplicities from floors, product expanded in k[s, t]."""
    q = p**e
    mults = [math.floor((q - 1) * c) for _, c in delta.entries]
    if sum(mults) > 2 * (q - 1):
        return False
    return not split_product_bivariate(delta, q, mults).is_zero()


def _poly_value(coeffs, x):
    acc = x.field.zero
    for c in reversed(coeffs):
        acc = acc * x + c
    return acc


def test_p3_half_configuration_is_nonsplit():
    F = GF(3)
    delta = DivisorP1.build(F, [("inf", "1/2"), (0, "1/2"), (-1, "1/2"), (-2, "1/2")])
    assert not level_split_test(3, 1, delta)


def test_single_point_and_zero_divisor_split():
    F = GF(5)
    assert level_split_test(5, 1, DivisorP1.build(F, [("inf", 1)]))
    for p, e in [(2, 3), (5, 2), (7, 1)]:
        assert level_split_test(p, e, DivisorP1(GF(p)))


def test_char_two_floors_vanish():
    # at p = 2 every level floors the half-coefficients to 0
    F4 = GF(2, 2)
    delta = DivisorP1.build(F4, [("inf", "1/2"), (0, "1/2"), (1, "1/2"), (F4.gen, "1/2")])
    res = split_result(2, 1, delta)
    assert res.multiplicities == (0, 0, 0, 0)


def test_witness_monomial_is_real():
    F = GF(7)
    delta = DivisorP1.build(F, [("inf", "1/3"), (2, "2/3"), (5, 1)])
    res = split_result(7, 2, delta)
    assert res.split
    q = res.q
    h = split_product_bivariate(delta, q, res.multiplicities)
    assert h.terms.get(res.witness) is not None


@settings(max_examples=80, deadline=None)
@given(st.data())
def test_univariate_test_agrees_with_bivariate_expansion(data):
    p = data.draw(st.sampled_from([2, 3, 5, 7]))
    e = data.draw(st.integers(1, 2 if p > 3 else 3))
    m = data.draw(st.sampled_from([1, 2]))
    F = GF(p, m)
    k = data.draw(st.integers(1, min(5, F.q + 1)))
    raw = data.draw(st.lists(st.integers(0, F.q), min_size=k, max_size=k, unique=True))
    pts = [INFINITY if r == F.q else P1Point(F.element(r)) for r in raw]
    coeffs = [Fraction(data.draw(st.integers(0, 6)), 6) for _ in pts]
    delta = DivisorP1(F, tuple(zip(pts, coeffs)))
    assert level_split_test(p, e, delta) == _bivariate_split(p, e, delta)


@pytest.mark.parametrize("p", ODD_PRIMES)
def test_level_one_matches_closed_form(p):
    # split iff the coefficient of x^n in (x+1)^n (x+mu)^n is nonzero
    n = (p - 1) // 2
    F = GF(p, 2)
    for mu in F.elements():
        if mu in (F.zero, F.one) or mu == -F.one:
            continue
        closed = sum((comb(n, i) ** 2 * mu**i for i in range(n + 1)), F.zero)
        assert level_split_test(p, 1, four_point_configuration(mu)) == (closed != 0)


def test_lemma_polynomial_examples():
    assert lemma_polynomial(3) == (1, 1)
    assert lemma_polynomial(5) == (1, 4, 1)
    for p in ODD_PRIMES + [97, 101]:
        n = (p - 1) // 2
        c = lemma_polynomial(p)
        assert len(c) == n + 1 and c[n] == 1 and c[0] == 1
        assert c[n - 1] == n * n % p
    with pytest.raises(ValueError):
        lemma_polynomial(2)


def test_mu_examples():
    assert find_nonsplit_mu(2) == ANY
    assert find_nonsplit_mu(3) == GF(3)(2)
    assert find_nonsplit_mu(7) == GF(7)(6)
    mu5 = find_nonsplit_mu(5)
    assert mu5.field.m == 2 and not mu5.in_prime_field()
    assert _poly_value(lemma_polynomial(5), mu5) == 0


@pytest.mark.parametrize("p", ODD_PRIMES)
def test_mu_is_nonsplit_at_two_levels(p):
    mu = find_nonsplit_mu(p)
    assert mu.value not in (0, 1)
    assert _poly_value(lemma_polynomial(p), mu) == 0
    for e in (1, 2):
        assert not level_split_test(p, e, four_point_configuration(mu))


@pytest.mark.parametrize("p", [5, 7, 11, 13, 17, 19, 23, 29, 31])
def test_deuring_correspondence(p):
    F = GF(p)
    c = lemma_polynomial(p)
    for lam in range(2, p):
        supersingular = _poly_value(c, F(lam)) == 0
        assert (hasse_invariant(p, legendre_cubic(F, lam)) == 0) == supersingular
        assert (point_count_legendre(p, lam) == p + 1) == supersingular
        assert level_split_test(p, 1, legendre_configuration(F(lam))) != supersingular
        # x -> -x carries {inf, 0, -1, -mu} to {inf, 0, 1, mu}
        assert (level_split_test(p, 1, four_point_configuration(F(lam)))
                == level_split_test(p, 1, legendre_configuration(F(lam))))


def test_hasse_and_point_count_examples():
    assert hasse_invariant(7, legendre_cubic(GF(7), 6)) == 0
    assert point_count_legendre(7, 6) == 8
    # lambda = 2 at p = 5 is not a root of mu^2 + 4 mu + 1
    assert hasse_invariant(5, legendre_cubic(GF(5), 2)) != 0
    for p in (5, 7, 11, 13):
        for lam in range(2, p):
            assert abs(point_count_legendre(p, lam) - (p + 1)) <= 2 * math.isqrt(p) + 1
    with pytest.raises(ValueError):
        point_count_legendre(7, 1)
    with pytest.raises(ValueError):
        hasse_invariant(3, legendre_cubic(GF(3), 2))


def test_fedder_examples():
    x, y, z = SparsePoly.variables(GF(5), ("x", "y", "z"))
    assert not fedder_hypersurface(5, x**2 + y**3 + z**5)
    assert fedder_hypersurface(5, x * y)
    a, b, c = SparsePoly.variables(GF(2), ("x", "y", "z"))
    assert not fedder_hypersurface(2, a**3 + b**3 + c**3)
    with pytest.raises(ValueError):
        fedder_hypersurface(5, x + 1)


def test_nu_examples():
    F5 = GF(5)
    point = DivisorP1.build(F5, [("inf", 1)])
    assert nu(5, 1, DivisorP1(F5), point) == 4
    assert nu(5, 2, DivisorP1(F5), point) == 24
    F3 = GF(3)
    four = DivisorP1.build(F3, [("inf", 1), (0, 1), (-1, 1), (-2, 1)])
    # s = 1 gives s t (s + t)(s + 2t) = s^3 t + 2 s t^3: no s^2 t^2 term
    assert nu(3, 1, DivisorP1(F3), four) == 0


def test_nu_bracketing_for_single_point():
    F = GF(3)
    point = DivisorP1.build(F, [(1, 1)])
    for e in (1, 2, 3, 4):
        q = 3**e
        assert nu(3, e, DivisorP1(F), point) in (q - 2, q - 1)


def test_fst_examples():
    F5 = GF(5)
    iv = fst_bounds(5, DivisorP1(F5), DivisorP1.build(F5, [("inf", 1)]), 2)
    assert iv.contains(1) and iv.upper <= Fraction(25, 24)
    assert iv.per_e == ((1, 4), (2, 24))
    F3 = GF(3)
    four = DivisorP1.build(F3, [("inf", 1), (0, 1), (-1, 1), (-2, 1)])
    assert (fst_bounds(3, DivisorP1(F3), four, 1).lower,
            fst_bounds(3, DivisorP1(F3), four, 1).upper) == (0, Fraction(1, 2))
    iv3 = fst_bounds(3, DivisorP1(F3), four, 3)
    assert (iv3.lower, iv3.upper) == (Fraction(4, 13), Fraction(9, 26))
    with pytest.raises(ValueError):
        fst_bounds(3, DivisorP1(F3), DivisorP1(F3), 2)


def test_fst_intervals_nest():
    F = GF(3)
    delta = DivisorP1.build(F, [(0, "1/2")])
    D = DivisorP1.build(F, [("inf", 1), (1, 1)])
    prev = None
    for e_max in range(1, 5):
        iv = fst_bounds(3, delta, D, e_max)
        if prev is not None:
            assert prev.lower <= iv.lower <= iv.upper <= prev.upper
        prev = iv


@settings(max_examples=60, deadline=None)
@given(st.data())
def test_splitting_is_monotone(data):
    p = data.draw(st.sampled_from([3, 5, 7]))
    F = GF(p)
    pts = [INFINITY] + [P1Point(F(x)) for x in data.draw(
        st.lists(st.integers(0, p - 1), min_size=3, max_size=3, unique=True))]
    big = [Fraction(data.draw(st.integers(0, 4)), 4) for _ in pts]
    small = [Fraction(data.draw(st.integers(0, int(4 * c))), 4) for c in big]
    e = data.draw(st.integers(1, 2))
    if level_split_test(p, e, DivisorP1(F, tuple(zip(pts, big)))):
        assert level_split_test(p, e, DivisorP1(F, tuple(zip(pts, small))))


def test_parse_divisor():
    d = parse_divisor("1/2@inf, 1/2@0, 1/2@-1, 1/2@ext:1,2", 5)
    assert d.field.m == 2 and d.degree == 2
    assert d.points[3].value == d.field([1, 2])
    assert parse_divisor(d.to_spec(), 5) == d
    for bad in ("1/2", "x@0", "1/2@0,1/3@0", "-1@0"):
        with pytest.raises(ParseError):
            parse_divisor(bad, 5)
    with pytest.raises(ValueError):
        split_result(5, 1, DivisorP1.build(GF(5), [(0, 2)]))


def test_level_ceiling():
    with pytest.raises(ResourceError):
        checked_power(3, 200)
    assert all(level_split_test(2, e, DivisorP1(GF(2))) for e in range(1, 4))


def test_product_combinations_small_field():
    # exhaustive over pairs of points with integer multiplicities at q = 3
    F = GF(3)
    pts = [INFINITY] + [P1Point(F(x)) for x in range(3)]
    for (i, j), (a, b) in itertools.product(itertools.combinations(range(4), 2),
                                            itertools.product(range(3), repeat=2)):
        delta = DivisorP1(F, ((pts[i], Fraction(a, 2)), (pts[j], Fraction(b, 2))))
        assert level_split_test(3, 1, delta) == _bivariate_split(3, 1, delta)


def test_nu_against_bivariate_scan():
    F = GF(3)
    four = DivisorP1.build(F, [("inf", 1), (0, 1), (-1, 1), (-2, 1)])
    for e in (1, 2, 3):
        q = 3**e
        oracle = max(s for s in range(-1, (q - 1) // 2 + 1)
                     if s < 0 or not split_product_bivariate(four, q, [s] * 4).is_zero())
        assert nu(3, e, DivisorP1(F), four) == oracle
