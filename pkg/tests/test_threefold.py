import itertools

import pytest

from frobsplit.finitefield import GF
from frobsplit.polyfrob import SparsePoly
from frobsplit.splitcrit import (
    fedder_hypersurface,
    hasse_invariant,
    point_count_legendre,
)
from frobsplit.threefold import (
    CONE_VARS,
    ConeFamily,
    Verdict,
    blowup_charts,
    canonicity_chain,
    chart_smoothness,
    e8_surface,
    fpure_check_Xn,
    fpure_report,
    projective_singular_point,
    smooth_cubic_check,
    supersingular_family,
)


def _brute_singular_points(f, p):
    """Projective singular points of a ternary form over F_p, by plain loops."""
    grads = [f] + [f.derivative(i) for i in range(3)]
    pts = []
    for v in itertools.product(range(p), repeat=3):
        if not any(v):
            continue
        first = next(c for c in v if c)
        if first != 1:
            continue
        if all(g.evaluate([GF(p)(c) for c in v]) == 0 for g in grads):
            pts.append(v)
    return pts


def test_weierstrass_smoothness_examples():
    rep = smooth_cubic_check(ConeFamily.weierstrass(7, 0, 1, 0))
    assert rep.smooth and rep.discriminant == 27 % 7
    with pytest.raises(ValueError):
        ConeFamily.weierstrass(7, 0, 0, 0)
    x, y, z = SparsePoly.variables(GF(7), ("x", "y", "z"))
    assert projective_singular_point(y * y * z - x**3, GF(7)) == (0, 0, 1)
    with pytest.raises(ValueError):
        ConeFamily.legendre(5, 1, 0)


@pytest.mark.parametrize("p", [7, 11])
def test_smoothness_matches_plain_enumeration(p):
    for lam in range(2, p):
        fam = ConeFamily.legendre(p, lam, 0)
        assert _brute_singular_points(fam.cubic, p) == []
        assert smooth_cubic_check(fam).smooth
    for A, B in [(1, 0), (0, 3), (2, 1)]:
        fam = ConeFamily.weierstrass(p, A, B, 0)
        assert smooth_cubic_check(fam).smooth == (_brute_singular_points(fam.cubic, p) == [])


def test_blowup_chart_equations():
    fam = ConeFamily.legendre(7, 6, 8)
    F = fam.hypersurface()
    mult, charts = blowup_charts(F)
    assert mult == 3
    assert charts[3] == fam.hypersurface(5)
    x, _, _, w = SparsePoly.variables(fam.field, CONE_VARS)
    # chart x: substitute (x, xy, xz, xw) and divide by x^3, done by hand on monomials
    f = fam.cubic
    expected = SparsePoly(fam.field, CONE_VARS, {(a + b + c - 3, b, c, 0): v for (a, b, c), v in f})
    assert charts[0] == expected + x ** 5 * w ** 8


def test_chart_smoothness_brute_force():
    fam = ConeFamily.legendre(7, 6, 5)
    for i in range(3):
        rep = chart_smoothness(fam.cubic, i)
        assert rep["method"] == "brute_force" and rep["smooth"]


@pytest.mark.parametrize("n,expected", [
    (0, [("SMOOTH", 0)]),
    (1, [("SMOOTH", 1)]),
    (2, [("TERMINAL_BASE", 2)]),
    (5, [("CREPANT_STEP", 5), ("TERMINAL_BASE", 2)]),
    (7, [("CREPANT_STEP", 7), ("CREPANT_STEP", 4), ("SMOOTH", 1)]),
])
def test_chain_examples(n, expected):
    assert canonicity_chain(ConeFamily.legendre(7, 6, n)).verdicts == expected


@pytest.mark.parametrize("p", [7, 11, 13])
def test_chain_recursion_invariant(p):
    fam = ConeFamily.legendre(p, 3, 0)
    for n in range(3, 14):
        upper = canonicity_chain(fam.with_n(n)).verdicts
        assert upper == [("CREPANT_STEP", n)] + canonicity_chain(fam.with_n(n - 3)).verdicts


def test_terminal_base_records_valid_shift():
    for p, lam in [(7, 6), (11, 10), (13, 5)]:
        step = canonicity_chain(ConeFamily.legendre(p, lam, 2)).steps[-1]
        assert step.verdict is Verdict.TERMINAL_BASE
        ev = step.evidence
        assert ev["shift"] is not None and any(ev["gamma"])
        assert len(ev["cited"]) == 3


def test_weierstrass_base_needs_no_shift():
    # y^2 z = x^3 + A x z^2 + B z^3: the slice x = 0 is already y^2 z - B z^3
    step = canonicity_chain(ConeFamily.weierstrass(7, 1, 3, 2)).steps[-1]
    assert step.evidence["shift"]["c"] == [0]


def test_chain_rejects_small_characteristic():
    with pytest.raises(ValueError):
        canonicity_chain(ConeFamily.legendre(5, 2, 5))


def test_fpure_examples():
    assert not fpure_check_Xn(ConeFamily.legendre(7, 6, 7))
    assert fpure_check_Xn(ConeFamily.legendre(7, 3, 7))  # 1 + 2*3 + 2*9 + 27 = 3 mod 7
    assert fpure_check_Xn(ConeFamily.legendre(5, 2, 1))
    assert fpure_check_Xn(ConeFamily.legendre(7, 6, 0))
    assert not fedder_hypersurface(5, e8_surface(5))


@pytest.mark.parametrize("p", [5, 7, 11, 13])
def test_four_and_three_variable_tests_agree(p):
    for lam in range(2, p):
        fam = ConeFamily.legendre(p, lam, 0)
        three = fedder_hypersurface(p, fam.cubic)
        for n in (p, p + 1, p + 5):
            assert fedder_hypersurface(p, fam.hypersurface(n)) == three


@pytest.mark.parametrize("p", [5, 7, 11, 13])
def test_ordinarity_triangle(p):
    for lam in range(2, p):
        fam = ConeFamily.legendre(p, lam, p)
        ordinary = hasse_invariant(p, fam.cubic) != 0
        assert (point_count_legendre(p, lam) != p + 1) == ordinary
        rep = fpure_report(fam)
        assert rep.fpure == rep.three_variable == ordinary


@pytest.mark.parametrize("p", [7, 11, 13, 17])
def test_supersingular_family(p):
    fam = supersingular_family(p)
    assert fam.n == p
    assert hasse_invariant(p, fam.cubic) == 0
    assert not fpure_check_Xn(fam)
    assert canonicity_chain(fam).steps[-1].verdict in (Verdict.SMOOTH, Verdict.TERMINAL_BASE)


def test_supersingular_family_over_quadratic_field():
    # p = 13 = 1 mod 4: -1 is not supersingular, so the parameter may leave F_p
    fam = supersingular_family(13)
    assert fam.params[0].value not in (0, 1)
    assert fam.describe()["n"] == 13
