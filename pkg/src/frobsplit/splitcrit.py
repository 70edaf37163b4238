"""Frobenius-splitting criteria on P^1 and for hypersurfaces.

Global splitting of ``(P^1, Delta)`` at level ``e`` is decided on the cone
``k[s, t]``: with ``d_i = floor((p^e - 1) a_i)`` and ``l_i`` the linear form
vanishing at the i-th point, the map splits iff
``prod l_i^{d_i}`` is not in ``(s^q, t^q)`` for ``q = p^e``.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .config import get_settings
from .errors import InternalError, ParseError, ResourceError
from .finitefield import (
    GF,
    FqElem,
    check_prime,
    checked_power,
    parse_element,
    roots_in_ext,
)
from .polyfrob import (
    SparsePoly,
    coefficient_of,
    pow_mod_frobpower,
    reduce_mod_frobpower,
)

ANY = "ANY"


# ---------------------------------------------------------------------------
# divisors on P^1


@dataclass(frozen=True)
class P1Point:
    """A closed point of P^1: a field value ``s/t`` or the point at infinity."""

    value: FqElem | None = None

    @classmethod
    def infinity(cls) -> P1Point:
        return cls(None)

    @property
    def is_infinity(self) -> bool:
        return self.value is None

    def __str__(self):
        if self.value is None:
            return "inf"
        if self.value.field.m == 1:
            return str(self.value.value)
        return "ext:" + ",".join(str(c) for c in self.value.coeffs)


INFINITY = P1Point.infinity()


def _as_fraction(c) -> Fraction:
    if isinstance(c, Fraction):
        return c
    if isinstance(c, float):
        raise TypeError("use exact rationals (Fraction or 'a/b' strings), not floats")
    return Fraction(c)


@dataclass(frozen=True)
class DivisorP1:
    """Finite formal sum of distinct points of P^1 with non-negative rational coefficients."""

    field: GF
    entries: tuple[tuple[P1Point, Fraction], ...] = ()

    def __post_init__(self):
        settings = get_settings()
        if self.field.m > settings.max_extension_degree:
            raise ValueError(
                f"points over F_{self.field.p}^{self.field.m} exceed the configured "
                f"extension degree {settings.max_extension_degree}")
        seen = set()
        clean = []
        for pt, c in self.entries:
            c = _as_fraction(c)
            if c < 0:
                raise ValueError(f"negative coefficient {c} at {pt}")
            if pt.value is not None:
                pt = P1Point(self.field(pt.value))
            key = None if pt.value is None else pt.value.value
            if key in seen:
                raise ValueError(f"point {pt} appears twice")
            seen.add(key)
            clean.append((pt, c))
        object.__setattr__(self, "entries", tuple(clean))

    @classmethod
    def build(cls, field: GF, pairs: Iterable[tuple[object, object]]) -> DivisorP1:
        """``pairs`` of (point, coefficient); a point is ``"inf"``, an int or an FqElem."""
        entries = []
        for pt, c in pairs:
            if isinstance(pt, P1Point):
                point = pt
            elif pt == "inf" or pt is None:
                point = INFINITY
            else:
                point = P1Point(field(pt))
            entries.append((point, _as_fraction(c)))
        return cls(field, tuple(entries))

    @property
    def degree(self) -> Fraction:
        return sum((c for _, c in self.entries), Fraction(0))

    @property
    def points(self) -> tuple[P1Point, ...]:
        return tuple(pt for pt, _ in self.entries)

    def scaled(self, k) -> DivisorP1:
        k = _as_fraction(k)
        return DivisorP1(self.field, tuple((pt, c * k) for pt, c in self.entries))

    def __add__(self, other: DivisorP1) -> DivisorP1:
        if other.field != self.field:
            raise ValueError("divisors over different fields")
        acc: dict = {}
        order = []
        for pt, c in self.entries + other.entries:
            key = None if pt.value is None else pt.value.value
            if key not in acc:
                order.append((key, pt))
                acc[key] = Fraction(0)
            acc[key] += c
        return DivisorP1(self.field, tuple((pt, acc[key]) for key, pt in order))

    def is_zero(self) -> bool:
        return all(c == 0 for _, c in self.entries)

    def is_integral_after(self, k: int) -> bool:
        return all((c * k).denominator == 1 for _, c in self.entries)

    def to_spec(self) -> str:
        return ",".join(f"{c}@{pt}" for pt, c in self.entries)

    def to_json(self) -> list:
        return [[str(pt), str(c)] for pt, c in self.entries]


def parse_divisor(spec: str, p: int, m: int | None = None) -> DivisorP1:
    """Parse ``"1/2@inf,1/2@0,1@-1,1/3@ext:1,2"`` into a divisor.

    Integer points are reduced mod p.  ``ext:c0,c1,...`` gives coordinates in
    the canonical modulus of F_{p^m}; ``m`` defaults to the longest such list.
    """
    check_prime(p)
    raw_entries: list[list[str]] = []
    for piece in spec.split(","):
        piece = piece.strip()
        if not piece:
            continue
        if "@" in piece:
            coeff, _, point = piece.partition("@")
            raw_entries.append([coeff.strip(), point.strip()])
        elif raw_entries and raw_entries[-1][1].startswith("ext:"):
            raw_entries[-1][1] += "," + piece
        else:
            raise ParseError(f"expected COEFF@POINT, got {piece!r}")
    ext_len = max((len(pt[4:].split(",")) for _, pt in raw_entries if pt.startswith("ext:")),
                  default=1)
    if m is None:
        m = ext_len
    elif ext_len > m:
        raise ParseError(f"ext point with {ext_len} coordinates in F_{p}^{m}")
    F = GF(p, m)
    pairs = []
    for coeff, point in raw_entries:
        try:
            c = Fraction(coeff)
        except (ValueError, ZeroDivisionError) as exc:
            raise ParseError(f"bad coefficient {coeff!r}") from exc
        if point.lower() in ("inf", "infinity"):
            pairs.append((INFINITY, c))
        else:
            pairs.append((P1Point(parse_element(point, F)), c))
    try:
        return DivisorP1(F, tuple(pairs))
    except ValueError as exc:
        raise ParseError(str(exc)) from exc


# ---------------------------------------------------------------------------
# dense univariate helpers: arrays of shape (m, L) holding F_p digits


def _conv(a: np.ndarray, b: np.ndarray, p: int) -> np.ndarray:
    if len(a) == 0 or len(b) == 0:
        return np.zeros(0, dtype=np.int64)
    if min(len(a), len(b)) * (p - 1) ** 2 >= 2**62:
        out = np.convolve(a.astype(object), b.astype(object))
        return (out % p).astype(np.int64)
    return np.convolve(a, b) % p


def _umul(A: np.ndarray, B: np.ndarray, field: GF, keep: int | None = None) -> np.ndarray:
    p, m, mod = field.p, field.m, field.modulus
    L = A.shape[1] + B.shape[1] - 1
    if keep is not None:
        L = min(L, keep)
    prod = [np.zeros(L, dtype=np.int64) for _ in range(2 * m - 1)]
    for i in range(m):
        if not A[i].any():
            continue
        for j in range(m):
            if not B[j].any():
                continue
            prod[i + j] = (prod[i + j] + _conv(A[i], B[j], p)[:L]) % p
    for k in range(2 * m - 2, m - 1, -1):
        c = prod[k]
        for j in range(m):
            if mod[j]:
                prod[k - m + j] = (prod[k - m + j] - c * mod[j]) % p
    return np.stack(prod[:m])


def _binomial_row(d: int, p: int) -> np.ndarray:
    """``C(d, i) mod p`` for ``i = 0..d`` via Lucas' theorem."""
    i = np.arange(d + 1, dtype=np.int64)
    out = np.ones(d + 1, dtype=np.int64)
    dd = d
    while dd:
        dj = dd % p
        row = np.array([math.comb(dj, k) % p for k in range(p)], dtype=np.int64)
        out = out * row[i % p] % p
        i //= p
        dd //= p
    return out


def _linear_power(field: GF, root: FqElem, d: int) -> np.ndarray:
    """Digits of ``(x - root)^d`` as an (m, d+1) array."""
    m = field.m
    binom = _binomial_row(d, field.p)
    neg = (-root).value
    powers = np.empty(d + 1, dtype=np.int64)
    if neg == 0:
        powers[:] = 0
        powers[d] = 1  # only x^d survives
        idx = powers
    else:
        acc = 1
        # coefficient of x^i is C(d, i) * (-root)^(d - i)
        for k in range(d + 1):
            powers[d - k] = acc
            acc = field.mul(acc, neg)
        idx = powers
    out = np.zeros((m, d + 1), dtype=np.int64)
    if m == 1:
        out[0] = idx * binom % field.p
        return out
    for i in np.nonzero(binom)[0]:
        v = field.mul(int(idx[i]), int(binom[i]))
        out[:, i] = field.digits(v)
    return out


# ---------------------------------------------------------------------------
# level-e splitting


@dataclass(frozen=True)
class SplitResult:
    split: bool
    q: int
    multiplicities: tuple[int, ...]
    degree: int
    # (a, b): exponents of a surviving monomial s^a t^b, if split
    witness: tuple[int, int] | None = None
    witness_coefficient: FqElem | None = None
    reason: str = ""


def _split_by_multiplicities(field: GF, q: int, points: Sequence[P1Point],
                             mults: Sequence[int]) -> SplitResult:
    """Decide ``prod l_i^{d_i} not in (s^q, t^q)`` for integer multiplicities."""
    mults = tuple(int(d) for d in mults)
    D = sum(mults)
    if D > 2 * (q - 1):
        return SplitResult(False, q, mults, D, reason=f"degree {D} > 2(q-1) = {2 * (q - 1)}")
    budget = get_settings().term_budget
    if q > budget:
        raise ResourceError(f"q = {q} exceeds the term budget {budget}")
    d_inf = 0
    g = np.zeros((field.m, 1), dtype=np.int64)
    g[0, 0] = 1
    shift = 0
    for pt, d in zip(points, mults):
        if d == 0:
            continue
        if pt.is_infinity:
            d_inf += d
        elif pt.value.value == 0:
            shift += d
        else:
            g = _umul(g, _linear_power(field, pt.value, d), field, keep=q)
    # h = t^{d_inf} * x^shift * g(x) dehomogenised at t = 1; monomial s^a t^{D-a}
    lo = max(0, D - (q - 1))
    hi = q - 1
    support = np.nonzero(np.any(g != 0, axis=0))[0] + shift
    hits = support[(support >= lo) & (support <= hi)]
    if len(hits) == 0:
        return SplitResult(False, q, mults, D,
                           reason=f"every coefficient of s^a t^{{{D}-a}}, {lo} <= a <= {hi}, vanishes")
    a = int(hits[0])
    coeff = field.from_digits([int(v) for v in g[:, a - shift]])
    return SplitResult(True, q, mults, D, witness=(a, D - a),
                       witness_coefficient=FqElem(field, coeff), reason="surviving monomial")


def split_result(p: int, e: int, delta: DivisorP1) -> SplitResult:
    """Full outcome of the level-``e`` test, including the witness monomial."""
    check_prime(p)
    if delta.field.p != p:
        raise ValueError(f"divisor lives over characteristic {delta.field.p}, not {p}")
    if e < 1:
        raise ValueError("level e must be >= 1")
    for pt, c in delta.entries:
        if not 0 <= c <= 1:
            raise ValueError(f"coefficient {c} at {pt} is outside [0, 1]")
    q = checked_power(p, e)
    mults = [math.floor((q - 1) * c) for _, c in delta.entries]
    return _split_by_multiplicities(delta.field, q, delta.points, mults)


def level_split_test(p: int, e: int, delta: DivisorP1) -> bool:
    """Whether ``O -> F^e_* O(floor((p^e - 1) delta))`` splits on P^1."""
    return split_result(p, e, delta).split


def split_product_bivariate(delta: DivisorP1, q: int, mults: Sequence[int]) -> SparsePoly:
    """``prod l_i^{d_i}`` in ``k[s, t]`` reduced mod ``(s^q, t^q)``; independent cross-check."""
    F = delta.field
    s, t = SparsePoly.variables(F, ("s", "t"))
    h = SparsePoly.constant(F, ("s", "t"), 1)
    for pt, d in zip(delta.points, mults):
        form = t if pt.is_infinity else s - t * pt.value
        h = reduce_mod_frobpower(h * pow_mod_frobpower(form, d, q), q)
    return h


# ---------------------------------------------------------------------------
# the four-point configuration


def lemma_polynomial(p: int) -> tuple[int, ...]:
    """``sum_i C(n, i)^2 mu^i`` over F_p with ``n = (p - 1)/2``, low degree first."""
    check_prime(p)
    if p == 2:
        raise ValueError("the polynomial is defined for odd p only")
    n = (p - 1) // 2
    return tuple(math.comb(n, i) ** 2 % p for i in range(n + 1))


def four_point_configuration(mu: FqElem) -> DivisorP1:
    """``1/2 (inf + 0 + (-1) + (-mu))``."""
    F = mu.field
    half = Fraction(1, 2)
    return DivisorP1(F, ((INFINITY, half), (P1Point(F.zero), half),
                         (P1Point(-F.one), half), (P1Point(-mu), half)))


def legendre_configuration(lam: FqElem) -> DivisorP1:
    """``1/2 (inf + 0 + 1 + lambda)``, the branch locus of ``y^2 = x(x-1)(x-lambda)``."""
    F = lam.field
    half = Fraction(1, 2)
    return DivisorP1(F, ((INFINITY, half), (P1Point(F.zero), half),
                         (P1Point(F.one), half), (P1Point(lam), half)))


def supersingular_parameters(p: int) -> list[FqElem]:
    """Roots of the lemma polynomial other than 0 and 1: in F_p if any, else in F_{p^2}."""
    poly = lemma_polynomial(p)
    roots = [r for r in roots_in_ext(poly, p, 1) if r.value not in (0, 1)]
    if roots:
        return roots
    return [r for r in roots_in_ext(poly, p, 2) if r.value not in (0, 1)]


def preferred_supersingular(p: int) -> FqElem:
    """Deterministic root choice: -1 if it is a root, else the first root found."""
    roots = supersingular_parameters(p)
    if not roots:
        raise InternalError(f"no root of the lemma polynomial in F_{p}^2")
    minus_one = [r for r in roots if r.value == p - 1 and r.field.m == 1]
    return minus_one[0] if minus_one else roots[0]


def find_nonsplit_mu(p: int):
    """A parameter ``mu`` making ``1/2(inf + 0 + (-1) + (-mu))`` non-split at level 1.

    Returns :data:`ANY` for ``p = 2``.  For odd ``p`` the choice is
    deterministic: ``mu = -1`` when it is a root (always so for
    ``p = 3 mod 4``), otherwise the root of smallest index, searching F_p
    before F_{p^2}.
    """
    check_prime(p)
    if p == 2:
        return ANY
    mu = preferred_supersingular(p)
    if level_split_test(p, 1, four_point_configuration(mu)):
        raise InternalError(f"mu = {mu} is a root but the configuration splits")
    return mu


# ---------------------------------------------------------------------------
# cubics, Hasse invariant, point counts


def legendre_cubic(field: GF, lam) -> SparsePoly:
    """``y^2 z - x (x - z)(x - lambda z)`` in variables x, y, z."""
    x, y, z = SparsePoly.variables(field, ("x", "y", "z"))
    lam = field(lam)
    return y * y * z - x * (x - z) * (x - z * lam)


def weierstrass_cubic(field: GF, A, B) -> SparsePoly:
    """``y^2 z - x^3 - A x z^2 - B z^3`` in variables x, y, z."""
    x, y, z = SparsePoly.variables(field, ("x", "y", "z"))
    return y * y * z - x * x * x - x * z * z * field(A) - z * z * z * field(B)


def hasse_invariant(p: int, cubic: SparsePoly) -> FqElem:
    """Coefficient of ``(xyz)^(p-1)`` in ``cubic^(p-1)``; zero iff the curve is supersingular."""
    check_prime(p)
    if p <= 3:
        raise ValueError("the Hasse invariant is computed here for p > 3 only")
    if cubic.field.p != p:
        raise ValueError(f"cubic is over characteristic {cubic.field.p}, not {p}")
    if cubic.nvars != 3 or cubic.is_zero() or not cubic.is_homogeneous(3):
        raise ValueError("expected a homogeneous cubic in three variables")
    residue = pow_mod_frobpower(cubic, p - 1, p)
    return coefficient_of(residue, (p - 1,) * 3)


def point_count_legendre(p: int, lam) -> int:
    """Projective points of ``y^2 = x(x-1)(x-lambda)`` over F_p, brute force."""
    check_prime(p)
    if p < 5:
        raise ValueError("p must be at least 5")
    if isinstance(lam, FqElem):
        if lam.field.p != p or not lam.in_prime_field():
            raise ValueError("lambda must lie in F_p")
        lam = lam.value
    lam %= p
    if lam in (0, 1):
        raise ValueError("lambda must avoid 0 and 1")
    squares = [0] * p
    for y in range(p):
        squares[y * y % p] += 1
    count = 1
    for x in range(p):
        count += squares[x * (x - 1) * (x - lam) % p]
    return count


def fedder_hypersurface(p: int, f: SparsePoly) -> bool:
    """F-purity of ``{f = 0}`` at the origin: ``f^(p-1)`` not in ``(x_1^p, ..., x_r^p)``."""
    check_prime(p)
    if f.field.p != p:
        raise ValueError(f"polynomial is over characteristic {f.field.p}, not {p}")
    if f.constant_term():
        raise ValueError("the origin does not lie on the hypersurface")
    return not pow_mod_frobpower(f, p - 1, p).is_zero()


# ---------------------------------------------------------------------------
# nu(e) and F-split threshold bounds


def nu(p: int, e: int, delta: DivisorP1, d: DivisorP1) -> int:
    """Largest ``s >= 0`` with ``(p^e - 1) delta + s D`` split at level ``e``; -1 if none.

    Every ``s`` up to the degree bound is tested and the passing set must be
    an initial segment, which is checked.
    """
    check_prime(p)
    if delta.field != d.field:
        raise ValueError("delta and D must share a field")
    if d.is_zero():
        raise ValueError("D must be a nonzero effective divisor")
    if not d.is_integral_after(1):
        raise ValueError("D must have integer coefficients")
    q = checked_power(p, e)
    if not delta.is_integral_after(q - 1):
        raise ValueError(f"(p^e - 1) delta is not integral at e = {e}")
    F = delta.field
    # merged support with base multiplicities and D multiplicities
    keys, pts = [], []
    for pt, _ in delta.entries + d.entries:
        key = None if pt.is_infinity else pt.value.value
        if key not in keys:
            keys.append(key)
            pts.append(pt)
    base = [0] * len(keys)
    step = [0] * len(keys)
    for pt, c in delta.entries:
        base[keys.index(None if pt.is_infinity else pt.value.value)] += int(c * (q - 1))
    for pt, c in d.entries:
        step[keys.index(None if pt.is_infinity else pt.value.value)] += int(c)
    base_deg, step_deg = sum(base), sum(step)
    s_max = (2 * (q - 1) - base_deg) // step_deg if base_deg <= 2 * (q - 1) else -1
    passing = []
    for s in range(s_max, -1, -1):
        mults = [b + s * k for b, k in zip(base, step)]
        passing.append((s, _split_by_multiplicities(F, q, pts, mults).split))
    best = next((s for s, ok in passing if ok), -1)
    # splitting is monotone in s: everything below the largest passing s passes
    if best >= 0 and not all(ok for s, ok in passing if s <= best):
        raise InternalError(f"splitting is not monotone in s at p={p}, e={e}")
    return best


@dataclass(frozen=True)
class FstInterval:
    lower: Fraction
    upper: Fraction
    per_e: tuple[tuple[int, int], ...] = field(default_factory=tuple)
    skipped: tuple[int, ...] = ()

    def contains(self, c) -> bool:
        return self.lower <= _as_fraction(c) <= self.upper

    def to_json(self) -> dict:
        return {
            "lower": str(self.lower),
            "upper": str(self.upper),
            "per_e": [{"e": e, "nu": v} for e, v in self.per_e],
            "skipped_levels": list(self.skipped),
        }


def fst_bounds(p: int, delta: DivisorP1, d: DivisorP1, e_max: int) -> FstInterval:
    """Bracket the F-split threshold of ``(P^1, delta)`` along ``D`` using levels ``1..e_max``.

    Uses ``nu(e) <= (p^e - 1) c <= nu(e) + 1`` at every level where
    ``(p^e - 1) delta`` is integral.
    """
    if e_max < 1:
        raise ValueError("e_max must be >= 1")
    if d.is_zero():
        raise ValueError("D must be a nonzero effective divisor")
    per_e, skipped = [], []
    lower, upper = None, None
    for e in range(1, e_max + 1):
        q = checked_power(p, e)
        if not delta.is_integral_after(q - 1):
            skipped.append(e)
            continue
        v = nu(p, e, delta, d)
        if v < 0:
            raise ValueError(f"(P^1, delta) is not split at level {e}")
        per_e.append((e, v))
        lo, hi = Fraction(v, q - 1), Fraction(v + 1, q - 1)
        lower = lo if lower is None else max(lower, lo)
        upper = hi if upper is None else min(upper, hi)
    if lower is None:
        raise ValueError(f"no level e <= {e_max} makes (p^e - 1) delta integral")
    if lower > upper:
        raise InternalError(f"empty threshold interval [{lower}, {upper}]")
    return FstInterval(lower, upper, tuple(per_e), tuple(skipped))
