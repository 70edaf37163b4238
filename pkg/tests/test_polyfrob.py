from math import comb

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from frobsplit.errors import ResourceError
from frobsplit.finitefield import GF
from frobsplit.polyfrob import (
    SparsePoly,
    coefficient_of,
    in_frobenius_power,
    naive_power_residue,
    poly_from_json,
    poly_mul,
    poly_to_json,
    pow_mod_frobpower,
    reduce_mod_frobpower,
    substitute_linear,
)

XYZ = ("x", "y", "z")


def _vars(p, names=XYZ, m=1):
    F = GF(p, m)
    return F, SparsePoly.variables(F, names)


def test_multiplication_examples():
    _, (x,) = _vars(2, ("x",))
    assert poly_mul(x + 1, x + 1) == x**2 + 1
    F3, (x,) = _vars(3, ("x",))
    assert poly_mul(x + 1, x + 2) == x**2 + 2
    assert poly_mul(SparsePoly.zero(F3, ("x",)), x + 1).is_zero()


def test_reduction_examples():
    _, (x, y, z) = _vars(2)
    assert reduce_mod_frobpower(x**3 + y**3 + z**3, 2).is_zero()
    assert reduce_mod_frobpower(x * y * z, 2) == x * y * z
    assert reduce_mod_frobpower(x**2 + x * y, 2) == x * y
    assert in_frobenius_power(x**3 + y**2, 2)


def test_e8_power_vanishes():
    _, (x, y, z) = _vars(5)
    assert pow_mod_frobpower(x**2 + y**3 + z**5, 4, 5).is_zero()


def test_fermat_cubic_char_two():
    _, (x, y, z) = _vars(2)
    assert pow_mod_frobpower(x**3 + y**3 + z**3, 1, 2).is_zero()


def test_zero_power_is_one():
    F, (x, y, z) = _vars(7)
    assert pow_mod_frobpower(x * y + z**9, 0, 7) == SparsePoly.constant(F, XYZ, 1)


def test_coefficient_extraction():
    _, (x,) = _vars(3, ("x",))
    assert coefficient_of((x + 1) * (x + 2), [1]) == 0
    _, (x,) = _vars(7, ("x",))
    f = (x + 1) ** 2 * (x + 6) ** 2
    assert coefficient_of(f, [2]) == sum(comb(2, i) ** 2 * 6**i for i in range(3)) % 7
    assert coefficient_of(f, [9]) == 0


def test_linear_substitution_examples():
    _, (x, y, z) = _vars(7)
    f = y**2 * z + x**3
    ident = [[1, 0, 0], [0, 1, 0], [0, 0, 1]]
    assert substitute_linear(f, ident) == f
    g = substitute_linear(f, [[1, 0, 1], [0, 1, 0], [0, 0, 1]])
    assert g == y**2 * z + (x + z) ** 3
    assert coefficient_of(g, [0, 0, 3]) == 1
    _, (a, b) = _vars(7, ("x", "y"))
    assert substitute_linear(a, [[0, 1], [1, 0]]) == b
    with pytest.raises(ValueError):
        substitute_linear(f, [[1, 0, 0], [1, 0, 0], [0, 0, 1]])


def test_dense_and_sparse_agree_over_extension():
    F, (x, y, z) = _vars(3, m=2)
    t = F.gen
    f = x**2 + t * y * z + (t + 1) * z**2 + x * y
    for method in ("dense", "sparse", "auto"):
        assert pow_mod_frobpower(f, 5, 9, method=method) == naive_power_residue(f, 5, 9)


def test_term_budget_is_enforced():
    _, (x, y, z) = _vars(7)
    with pytest.raises(ResourceError):
        pow_mod_frobpower(x + y + z + 1, 6, 7, method="sparse", budget=10)


def test_json_roundtrip():
    F, (x, y, z) = _vars(5, m=2)
    f = x**3 * F.gen + y * z + 2
    assert poly_from_json(poly_to_json(f)) == f


# ---------------------------------------------------------------------------
# property tests

@st.composite
def sparse_polys(draw, p=None, nvars=None, max_terms=6, max_exp=4):
    p = draw(st.sampled_from([2, 3, 5, 7])) if p is None else p
    r = draw(st.integers(1, 4)) if nvars is None else nvars
    names = ("x", "y", "z", "w")[:r]
    terms = draw(st.dictionaries(
        st.tuples(*[st.integers(0, max_exp)] * r), st.integers(1, p - 1), max_size=max_terms))
    return SparsePoly(GF(p), names, terms)


@settings(max_examples=60, deadline=None)
@given(st.data())
def test_pruned_power_matches_naive(data):
    f = data.draw(sparse_polys())
    p = f.field.p
    k = data.draw(st.integers(0, p - 1))
    assert pow_mod_frobpower(f, k, p) == naive_power_residue(f, k, p)


@settings(max_examples=60, deadline=None)
@given(st.data())
def test_ring_axioms(data):
    p = data.draw(st.sampled_from([2, 3, 5, 7]))
    r = data.draw(st.integers(1, 3))
    a, b, c = (data.draw(sparse_polys(p=p, nvars=r, max_terms=4)) for _ in range(3))
    assert poly_mul(a, b) == poly_mul(b, a)
    assert poly_mul(poly_mul(a, b), c) == poly_mul(a, poly_mul(b, c))
    assert poly_mul(a, b + c) == poly_mul(a, b) + poly_mul(a, c)


@settings(max_examples=40, deadline=None)
@given(st.data())
def test_frobenius_ideal_stable_under_linear_change(data):
    p = data.draw(st.sampled_from([2, 3, 5]))
    f = data.draw(sparse_polys(p=p, nvars=3, max_terms=4, max_exp=2 * p))
    M = data.draw(st.lists(st.lists(st.integers(0, p - 1), min_size=3, max_size=3),
                           min_size=3, max_size=3))
    try:
        g = substitute_linear(f, M)
    except ValueError:
        return  # singular draw
    assert in_frobenius_power(f, p) == in_frobenius_power(g, p)
