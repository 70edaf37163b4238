import itertools
import random
from fractions import Fraction

import pytest

from frobsplit.errors import IdentityCheckError
from frobsplit.surfcalc import (
    CurveClass,
    blow_up,
    build_del_pezzo_tower,
    cartier_index,
    chain_blowup,
    contract,
    determinant,
    different_coefficients,
    four_point_blowup,
    inertia,
    is_negative_definite,
    p1xp1_model,
    positivity_check,
)

HALF = Fraction(1, 2)


def _charpoly(M):
    """Faddeev-LeVerrier: coefficients of det(xI - M), leading first."""
    n = len(M)
    coeffs = [Fraction(1)]
    Mk = [[Fraction(0)] * n for _ in range(n)]
    for k in range(1, n + 1):
        # Mk = M (Mk + c_{k-1} I)
        prev = [[Mk[i][j] + (coeffs[-1] if i == j else 0) for j in range(n)] for i in range(n)]
        Mk = [[sum(M[i][t] * prev[t][j] for t in range(n)) for j in range(n)] for i in range(n)]
        coeffs.append(-sum(Mk[i][i] for i in range(n)) / k)
    return coeffs


def _negative_definite_by_roots(M):
    # real-rooted, so Descartes' sign count is exact: no positive and no zero eigenvalue
    c = _charpoly(M)
    if c[-1] == 0:
        return False
    signs = [x > 0 for x in c if x != 0]
    return sum(a != b for a, b in itertools.pairwise(signs)) == 0


def _chain_det(entries):
    """Determinant of the tridiagonal matrix with diagonal ``entries`` and -1 off it."""
    a, b = 1, entries[0]
    for x in entries[1:]:
        a, b = b, x * b - a
    return b


def test_p1xp1_examples():
    P = p1xp1_model()
    C = P.curve("C")
    assert P.sq(C) == 2 and P.dot(P.canonical, C) == -4
    D = (P.canonical + P.class_of({"C": 1, "F1": HALF, "F2": HALF, "F3": HALF, "F4": HALF})).scale(2)
    assert P.numerically_trivial(D)
    assert P.sq(P.canonical) == 8


def test_four_point_blowup_makes_disjoint_minus_two_curves():
    S = four_point_blowup()
    F = [S.curve(f"F{i}") for i in range(1, 5)]
    for i, a in enumerate(F):
        for j, b in enumerate(F):
            assert S.dot(a, b) == (-2 if i == j else 0)
    assert S.sq(S.canonical) == 4 and S.rank == 6


def test_blow_up_off_tracked_curves():
    P = p1xp1_model()
    Q = blow_up(P, {})
    for t in P.tracked:
        assert Q.sq(Q.curve(t.label)) == P.sq(t)
    assert Q.sq(Q.canonical) == P.sq(P.canonical) - 1
    with pytest.raises(ValueError):
        blow_up(P, {"C": -1})


def test_blow_up_strict_transform_arithmetic():
    rng = random.Random(1)
    S = four_point_blowup()
    labels = [t.label for t in S.tracked]
    for _ in range(20):
        mults = {lb: rng.randrange(0, 3) for lb in rng.sample(labels, 3)}
        T = blow_up(S, mults)
        for a in labels:
            for b in labels:
                expected = S.dot(S.curve(a), S.curve(b)) - mults.get(a, 0) * mults.get(b, 0)
                assert T.dot(T.curve(a), T.curve(b)) == expected


def test_minus_one_contraction_has_discrepancy_one():
    P = p1xp1_model()
    Q = blow_up(P, {"C": 1}, label="E")
    cd = contract(Q, ["E"])
    assert cd.discrepancies == {"E": 1}
    assert cd.target.rank == 2


def test_minus_one_contraction_different_by_direct_adjunction():
    # C through the centre: the log pullback of K + C is K + C + 0 E, so no different
    Q = blow_up(p1xp1_model(), {"C": 1}, label="E")
    cd = contract(Q, ["E"])
    c = cd.coefficients(Q.canonical + Q.curve("C"))["E"]
    # (K + C + c E).E = -1 + 1 - c = 0 by hand
    assert c == 0
    assert different_coefficients(cd, "C") == {("E",): 0}


def test_contracting_nothing():
    P = p1xp1_model()
    cd = contract(P, [])
    assert different_coefficients(cd, "C") == {}
    assert cartier_index(cd, "C") == 1


def test_four_minus_two_curves_give_half_different():
    S = four_point_blowup()
    psi = contract(S, ["F1", "F2", "F3", "F4"])
    diff = different_coefficients(psi, "C")
    assert sorted(diff.values()) == [HALF] * 4
    assert cartier_index(psi, "C") == 2
    assert all(v == 0 for v in psi.discrepancies.values())


def test_contraction_rejects_non_negative_definite():
    P = p1xp1_model()
    with pytest.raises(IdentityCheckError):
        contract(P, ["C"])


def test_positivity_examples():
    Q = blow_up(p1xp1_model(), {}, label="E")
    assert not positivity_check(Q, Q.curve("E")).passed
    S = four_point_blowup()
    psi = contract(S, ["F1", "F2", "F3", "F4"])
    assert positivity_check(psi.target, psi.target.curve("C")).passed


@pytest.mark.parametrize("n", [4, 5, 6, 9])
def test_projection_formula(n):
    rng = random.Random(n)
    Sb = chain_blowup(four_point_blowup(), n)
    h = contract(Sb, ["F2", "F3", "F4", *[f"E{i}" for i in range(n - 1, 0, -1)], "F1"])
    for _ in range(10):
        A = CurveClass(tuple(Fraction(rng.randrange(-3, 4)) for _ in range(Sb.dim)))
        B = CurveClass(tuple(Fraction(rng.randrange(-3, 4)) for _ in range(Sb.dim)))
        pA, pB = h.pullback(A), h.pullback(B)
        for E in h.classes:
            assert Sb.dot(pA, E) == 0
        assert Sb.dot(pA, pB) == Sb.dot(pA, B)
        assert h.pullback(pA) == pA


@pytest.mark.parametrize("n", [4, 7])
def test_adjunction_on_smooth_models(n):
    for M in (p1xp1_model(), four_point_blowup(), chain_blowup(four_point_blowup(), n)):
        for t in M.tracked:
            assert M.dot(M.canonical, t) + M.sq(t) == -2


def test_negative_definite_matches_eigenvalue_signs():
    rng = random.Random(2)
    for _ in range(300):
        n = rng.randrange(1, 7)
        A = [[Fraction(rng.randrange(-3, 4)) for _ in range(n)] for _ in range(n)]
        M = [[A[i][j] + A[j][i] - (rng.randrange(0, 6) if i == j else 0) for j in range(n)]
             for i in range(n)]
        assert is_negative_definite(M) == _negative_definite_by_roots(M)
        pos, neg, zero = inertia(M)
        assert pos + neg + zero == n
        assert (neg == n) == is_negative_definite(M)
    assert determinant([[2, 1], [1, 2]]) == 3


@pytest.mark.parametrize("n", range(4, 13))
def test_tower_closed_forms(n):
    rep = build_del_pezzo_tower(n)
    # contracted chain seen from E_n: diagonal (2, ..., 2, 3) of length n
    chain = [2] * (n - 1) + [3]
    E_Y2 = -1 + Fraction(_chain_det(chain[1:]), _chain_det(chain))
    assert rep.E_Y_squared == E_Y2 == Fraction(-2, 2 * n + 1)
    # C meets the three contracted (-2)-curves F2, F3, F4 once each
    assert rep.C_Y_squared == (2 - n) + 3 * HALF == Fraction(7, 2) - n
    assert rep.a == 1 / -E_Y2
    # K_Y . C_Y = -C_Y^2 - 1/2 (C_Y . E_Y), with C_Y . E_Y = 1
    b = -(-rep.C_Y_squared - HALF) / rep.C_Y_squared
    assert rep.b == b
    assert 0 < rep.one_minus_b <= rep.bound == 2 / (n - Fraction(7, 2))
    assert rep.log_degree == HALF
    assert rep.C_Z_squared == 2 + 4 * HALF
    assert rep.cartier_index == 2
    assert set(rep.different.values()) == {HALF} and len(rep.different) == 4
    assert rep.ranks == {"P1xP1": 2, "S": 6, "Sbar": 6 + n, "Y": 3, "Z": 2, "X": 2}
    assert rep.canonical_squares == {"P1xP1": 8, "S": 4, "Sbar": 4 - n}
    assert all(rep.checks.values())
    assert rep.positivity["C_Z"].passed and rep.positivity["f_*E_Y"].passed


def test_tower_examples():
    assert build_del_pezzo_tower(4).C_Y_squared == Fraction(-1, 2)
    r10 = build_del_pezzo_tower(10)
    assert r10.one_minus_b <= Fraction(2) / Fraction(13, 2)
    with pytest.raises(ValueError):
        build_del_pezzo_tower(3)


def test_tower_json_is_serialisable():
    import json

    body = build_del_pezzo_tower(5).to_json()
    assert json.loads(json.dumps(body))["C_Y_squared"] == "-3/2"
