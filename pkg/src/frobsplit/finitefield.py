"""Exact arithmetic in F_p and F_{p^m}, plus root finding for univariate polynomials.

Elements of F_{p^m} are stored as a single integer index
``c_0 + c_1 p + ... + c_{m-1} p^{m-1}`` where ``c_0 + c_1 t + ...`` is the
residue modulo the field's monic modulus polynomial.  For ``m == 1`` the index
is just the residue in ``[0, p)``.
"""

from __future__ import annotations

import random
from collections.abc import Iterable, Iterator, Sequence
from functools import cache, lru_cache

import numpy as np

from .config import get_settings
from .errors import ContextMismatchError, ParseError, ResourceError

# Miller-Rabin with these bases is deterministic below 3.3e24.
_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41)

# log/exp tables are built on demand for fields up to this size
TABLE_LIMIT = 2**20
# scalar multiplication switches to tables only where building them is cheap
SCALAR_TABLE_LIMIT = 2**16


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    for b in _MR_BASES:
        if n % b == 0:
            return n == b
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_BASES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def check_prime(p: int) -> int:
    if not isinstance(p, int) or isinstance(p, bool):
        raise TypeError(f"characteristic must be an int, got {type(p).__name__}")
    if not is_prime(p):
        raise ValueError(f"{p} is not prime")
    return p


def prime_factors(n: int) -> list[int]:
    """Distinct prime factors by trial division (only used on small group orders)."""
    out = []
    d = 2
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            while n % d == 0:
                n //= d
        d += 1 if d == 2 else 2
    if n > 1:
        out.append(n)
    return out


def checked_power(p: int, e: int, ceiling: int | None = None) -> int:
    """Return ``p**e``, refusing values above the configured ceiling."""
    if e < 0:
        raise ValueError("level e must be non-negative")
    if ceiling is None:
        ceiling = get_settings().power_ceiling
    # bit-length bound first so huge e never materialises a huge integer
    if e * (p.bit_length() - 1) > ceiling.bit_length():
        raise ResourceError(f"{p}^{e} exceeds the power ceiling {ceiling}")
    q = p**e
    if q > ceiling:
        raise ResourceError(f"{p}^{e} = {q} exceeds the power ceiling {ceiling}")
    return q


# ---------------------------------------------------------------------------
# univariate polynomials as lists of raw coefficients (low degree first)


class _PrimeOps:
    """Raw-integer arithmetic in F_p, same interface as :class:`GF`."""

    __slots__ = ("p", "q")

    def __init__(self, p: int):
        self.p = p
        self.q = p

    def add(self, a, b):
        return (a + b) % self.p

    def sub(self, a, b):
        return (a - b) % self.p

    def neg(self, a):
        return -a % self.p

    def mul(self, a, b):
        return a * b % self.p

    def inv(self, a):
        if a % self.p == 0:
            raise ZeroDivisionError("inverse of zero")
        return pow(a, self.p - 2, self.p)


def _trim(a: list) -> list:
    while a and a[-1] == 0:
        a.pop()
    return a


def _padd(F, a, b):
    n = max(len(a), len(b))
    out = [F.add(a[i] if i < len(a) else 0, b[i] if i < len(b) else 0) for i in range(n)]
    return _trim(out)


def _psub(F, a, b):
    n = max(len(a), len(b))
    out = [F.sub(a[i] if i < len(a) else 0, b[i] if i < len(b) else 0) for i in range(n)]
    return _trim(out)


def _pmul(F, a, b):
    if not a or not b:
        return []
    out = [0] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        if ai == 0:
            continue
        for j, bj in enumerate(b):
            if bj:
                out[i + j] = F.add(out[i + j], F.mul(ai, bj))
    return _trim(out)


def _pdivmod(F, a, b):
    if not b:
        raise ZeroDivisionError("polynomial division by zero")
    a = list(a)
    inv_lead = F.inv(b[-1])
    db = len(b) - 1
    quot = [0] * max(len(a) - db, 0)
    for k in range(len(a) - 1, db - 1, -1):
        c = a[k]
        if c == 0:
            continue
        c = F.mul(c, inv_lead)
        quot[k - db] = c
        for j in range(db + 1):
            a[k - db + j] = F.sub(a[k - db + j], F.mul(c, b[j]))
    return _trim(quot), _trim(a[:db] if db else [])


def _pmod(F, a, b):
    return _pdivmod(F, a, b)[1]


def _monic(F, a):
    if not a:
        return a
    inv = F.inv(a[-1])
    return [F.mul(c, inv) for c in a]


def _pgcd(F, a, b):
    a, b = _trim(list(a)), _trim(list(b))
    while b:
        a, b = b, _pmod(F, a, b)
    return _monic(F, a)


def _ppowmod(F, base, k: int, mod):
    result = [1]
    base = _pmod(F, base, mod)
    while k:
        if k & 1:
            result = _pmod(F, _pmul(F, result, base), mod)
        k >>= 1
        if k:
            base = _pmod(F, _pmul(F, base, base), mod)
    return result


def _x_to_qpower(F, p: int, k: int, mod):
    """X^(p^k) mod ``mod`` by k successive p-th powers."""
    x = _pmod(F, [0, 1], mod)
    for _ in range(k):
        x = _ppowmod(F, x, p, mod)
    return x


def is_irreducible(poly: Sequence[int], p: int) -> bool:
    """Rabin's test for a monic polynomial over F_p (coefficients low degree first)."""
    F = _PrimeOps(p)
    f = _trim([c % p for c in poly])
    m = len(f) - 1
    if m < 1:
        return False
    f = _monic(F, f)
    if m == 1:
        return True
    if _psub(F, _x_to_qpower(F, p, m, f), [0, 1]):
        return False
    for r in prime_factors(m):
        h = _psub(F, _x_to_qpower(F, p, m // r, f), [0, 1])
        if len(_pgcd(F, f, h)) != 1:
            return False
    return True


@cache
def find_irreducible(p: int, m: int) -> tuple[int, ...]:
    """Lexicographically smallest monic irreducible polynomial of degree ``m`` over F_p.

    Candidates ``t^m + c_{m-1} t^{m-1} + ... + c_0`` are ordered by the vector
    ``(c_{m-1}, ..., c_0)``.  Returns coefficients low degree first, including
    the leading 1.
    """
    check_prime(p)
    if m < 1:
        raise ValueError("degree must be at least 1")
    for n in range(p**m):
        low = []
        for _ in range(m):
            n, c = divmod(n, p)
            low.append(c)
        cand = low + [1]
        if is_irreducible(cand, p):
            return tuple(cand)
    raise AssertionError("an irreducible polynomial of every degree exists")


# ---------------------------------------------------------------------------
# fields and elements


class GF:
    """The finite field F_p[t]/(modulus).

    Two ``GF`` objects are the same field iff they share ``p`` and the modulus;
    elements of distinct fields never mix.
    """

    __slots__ = ("_pow_p", "m", "modulus", "p", "q")

    def __init__(self, p: int, m: int = 1, modulus: Sequence[int] | None = None):
        check_prime(p)
        if modulus is None:
            modulus = find_irreducible(p, m)
        else:
            modulus = tuple(int(c) % p for c in modulus)
            m = len(modulus) - 1
            if m < 1 or modulus[-1] != 1:
                raise ValueError("modulus must be monic of degree >= 1")
            if not is_irreducible(modulus, p):
                raise ValueError(f"modulus {modulus} is reducible over F_{p}")
        self.p = p
        self.m = m
        self.modulus = tuple(modulus)
        self.q = p**m
        self._pow_p = tuple(p**i for i in range(m))

    # identity -------------------------------------------------------------
    def __eq__(self, other):
        return isinstance(other, GF) and self.p == other.p and self.modulus == other.modulus

    def __hash__(self):
        return hash(("GF", self.p, self.modulus))

    def __repr__(self):
        if self.m == 1:
            return f"GF({self.p})"
        return f"GF({self.p}^{self.m}, modulus={format_poly(self.modulus, 't')})"

    @property
    def is_prime_field(self) -> bool:
        return self.m == 1

    # digit encoding -------------------------------------------------------
    def digits(self, a: int) -> list[int]:
        out = []
        for _ in range(self.m):
            a, c = divmod(a, self.p)
            out.append(c)
        return out

    def from_digits(self, cs: Sequence[int]) -> int:
        if len(cs) > self.m:
            raise ValueError(f"too many coordinates for F_{self.p}^{self.m}")
        return sum((c % self.p) * w for c, w in zip(cs, self._pow_p))

    # raw arithmetic on indices -------------------------------------------
    def add(self, a: int, b: int) -> int:
        if self.m == 1:
            return (a + b) % self.p
        p, out, w = self.p, 0, 1
        for _ in range(self.m):
            a, ca = divmod(a, p)
            b, cb = divmod(b, p)
            out += ((ca + cb) % p) * w
            w *= p
        return out

    def neg(self, a: int) -> int:
        if self.m == 1:
            return -a % self.p
        return self.from_digits([-c for c in self.digits(a)])

    def sub(self, a: int, b: int) -> int:
        return self.add(a, self.neg(b))

    def mul(self, a: int, b: int) -> int:
        if self.m == 1:
            return a * b % self.p
        if a == 0 or b == 0:
            return 0
        if self.q <= SCALAR_TABLE_LIMIT:
            t = _tables(self)
            return int(t.exp[(int(t.log[a]) + int(t.log[b])) % (self.q - 1)])
        return self._poly_mul(a, b)

    def _poly_mul(self, a: int, b: int) -> int:
        p, m, mod = self.p, self.m, self.modulus
        da, db = self.digits(a), self.digits(b)
        prod = [0] * (2 * m - 1)
        for i, x in enumerate(da):
            if x:
                for j, y in enumerate(db):
                    prod[i + j] += x * y
        for k in range(2 * m - 2, m - 1, -1):
            c = prod[k] % p
            if c:
                for j in range(m):
                    prod[k - m + j] -= c * mod[j]
        return self.from_digits(prod[:m])

    def pow(self, a: int, k: int) -> int:
        if k < 0:
            return self.pow(self.inv(a), -k)
        if self.m == 1:
            return pow(a, k, self.p)
        if a == 0:
            return 1 if k == 0 else 0
        if self.q <= SCALAR_TABLE_LIMIT:
            t = _tables(self)
            return int(t.exp[(int(t.log[a]) * k) % (self.q - 1)])
        result, base = 1, a
        while k:
            if k & 1:
                result = self.mul(result, base)
            k >>= 1
            if k:
                base = self.mul(base, base)
        return result

    def inv(self, a: int) -> int:
        if a == 0:
            raise ZeroDivisionError(f"division by zero in {self!r}")
        if self.m == 1:
            return pow(a, self.p - 2, self.p)
        return self.pow(a, self.q - 2)

    # element construction -------------------------------------------------
    def __call__(self, value) -> FqElem:
        if isinstance(value, FqElem):
            if value.field == self:
                return value
            if value.field.p == self.p and value.field.m == 1:
                return FqElem(self, value.value)
            raise ContextMismatchError(f"cannot coerce {value!r} into {self!r}")
        if isinstance(value, bool):
            raise TypeError("bool is not a field element")
        if isinstance(value, int):
            return FqElem(self, value % self.p)
        if isinstance(value, (tuple, list)):
            return FqElem(self, self.from_digits([int(c) for c in value]))
        raise TypeError(f"cannot build a field element from {type(value).__name__}")

    def element(self, index: int) -> FqElem:
        if not 0 <= index < self.q:
            raise ValueError(f"index {index} out of range for {self!r}")
        return FqElem(self, index)

    @property
    def zero(self) -> FqElem:
        return FqElem(self, 0)

    @property
    def one(self) -> FqElem:
        return FqElem(self, 1)

    @property
    def gen(self) -> FqElem:
        """The class of ``t``; for ``m == 1`` this is the root of ``t + c_0``."""
        if self.m == 1:
            return FqElem(self, -self.modulus[0] % self.p)
        return FqElem(self, self.p)

    def elements(self) -> Iterator[FqElem]:
        for i in range(self.q):
            yield FqElem(self, i)

    def coerce_raw(self, value) -> int:
        """Raw index of ``value`` (int, digit sequence or element of this field)."""
        return self(value).value

    def tables(self) -> FieldTables:
        return _tables(self)


class FqElem:
    """An element of a specific :class:`GF`.  Immutable."""

    __slots__ = ("field", "value")

    def __init__(self, field: GF, value: int):
        object.__setattr__(self, "field", field)
        object.__setattr__(self, "value", int(value))

    def __setattr__(self, name, value):
        raise AttributeError("FqElem is immutable")

    @property
    def coeffs(self) -> tuple[int, ...]:
        return tuple(self.field.digits(self.value))

    def _other(self, other) -> int:
        if isinstance(other, FqElem):
            if other.field != self.field:
                if other.field.p == self.field.p and other.field.m == 1:
                    return other.value
                if self.field.m == 1 and other.field.p == self.field.p:
                    # let the extension-field operand embed F_p
                    return NotImplemented
                raise ContextMismatchError(f"mixing {self.field!r} with {other.field!r}")
            return other.value
        if isinstance(other, int) and not isinstance(other, bool):
            return other % self.field.p
        return NotImplemented

    def __add__(self, other):
        o = self._other(other)
        if o is NotImplemented:
            return o
        return FqElem(self.field, self.field.add(self.value, o))

    __radd__ = __add__

    def __sub__(self, other):
        o = self._other(other)
        if o is NotImplemented:
            return o
        return FqElem(self.field, self.field.sub(self.value, o))

    def __rsub__(self, other):
        o = self._other(other)
        if o is NotImplemented:
            return o
        return FqElem(self.field, self.field.sub(o, self.value))

    def __mul__(self, other):
        o = self._other(other)
        if o is NotImplemented:
            return o
        return FqElem(self.field, self.field.mul(self.value, o))

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._other(other)
        if o is NotImplemented:
            return o
        return FqElem(self.field, self.field.mul(self.value, self.field.inv(o)))

    def __rtruediv__(self, other):
        o = self._other(other)
        if o is NotImplemented:
            return o
        return FqElem(self.field, self.field.mul(o, self.field.inv(self.value)))

    def __neg__(self):
        return FqElem(self.field, self.field.neg(self.value))

    def __pow__(self, k: int):
        return FqElem(self.field, self.field.pow(self.value, int(k)))

    def inv(self) -> FqElem:
        return FqElem(self.field, self.field.inv(self.value))

    def __eq__(self, other):
        if isinstance(other, FqElem):
            if other.field != self.field:
                if other.field.p == self.field.p and 1 in (self.field.m, other.field.m):
                    return self.value == other.value
                raise ContextMismatchError(f"comparing {self.field!r} with {other.field!r}")
            return self.value == other.value
        if isinstance(other, int) and not isinstance(other, bool):
            return self.value == other % self.field.p
        return NotImplemented

    def __hash__(self):
        # prime-subfield elements compare equal across extensions of F_p
        return hash((self.field.p, self.value))

    def __bool__(self):
        return self.value != 0

    def __int__(self):
        return self.value

    def in_prime_field(self) -> bool:
        return self.value < self.field.p

    def __repr__(self):
        return f"FqElem({self}, {self.field!r})"

    def __str__(self):
        if self.field.m == 1:
            return str(self.value)
        return format_poly(self.coeffs, "t") or "0"


def format_poly(coeffs: Sequence[int], var: str = "x") -> str:
    """Human-readable form of a coefficient list (low degree first)."""
    parts = []
    for i in range(len(coeffs) - 1, -1, -1):
        c = coeffs[i]
        if c == 0:
            continue
        if i == 0:
            mono = ""
        elif i == 1:
            mono = var
        else:
            mono = f"{var}^{i}"
        if mono and c == 1:
            parts.append(mono)
        elif mono:
            parts.append(f"{c}{var}" if i == 1 else f"{c}{mono}")
        else:
            parts.append(str(c))
    return " + ".join(parts)


# ---------------------------------------------------------------------------
# vectorised tables


class FieldTables:
    """Log/exp tables for vectorised arithmetic on arrays of element indices."""

    def __init__(self, field: GF):
        q, p, m = field.q, field.p, field.m
        self.field = field
        self.q, self.p, self.m = q, p, m
        idx = np.arange(q, dtype=np.int64)
        digits = np.empty((q, m), dtype=np.int64)
        rest = idx.copy()
        for j in range(m):
            digits[:, j] = rest % p
            rest //= p
        self.digits = digits
        self.weights = np.array([p**j for j in range(m)], dtype=np.int64)
        g = _primitive_element(field)
        exp = np.empty(q - 1, dtype=np.int64)
        x = 1
        for i in range(q - 1):
            exp[i] = x
            x = field._poly_mul(x, g) if m > 1 else x * g % p
        log = np.full(q, -1, dtype=np.int64)
        log[exp] = np.arange(q - 1, dtype=np.int64)
        self.exp = exp
        self.log = log
        self.generator = g

    def add(self, a, b):
        if self.m == 1:
            return (a + b) % self.p
        return ((self.digits[a] + self.digits[b]) % self.p) @ self.weights

    def neg(self, a):
        if self.m == 1:
            return (-a) % self.p
        return ((-self.digits[a]) % self.p) @ self.weights

    def mul(self, a, b):
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        if self.m == 1:
            return a * b % self.p
        la, lb = self.log[a], self.log[b]
        out = self.exp[(la + lb) % (self.q - 1)]
        return np.where((a == 0) | (b == 0), 0, out)

    def pow(self, a, k: int):
        a = np.asarray(a, dtype=np.int64)
        if k == 0:
            return np.ones_like(a)
        out = self.exp[(self.log[a] * k) % (self.q - 1)]
        return np.where(a == 0, 0, out)

    def horner(self, coeffs: Sequence[int], x):
        """Evaluate a polynomial with raw coefficients at every index in ``x``."""
        x = np.asarray(x, dtype=np.int64)
        acc = np.full_like(x, coeffs[-1] if coeffs else 0)
        for c in reversed(coeffs[:-1]):
            acc = self.add(self.mul(acc, x), np.full_like(x, c))
        return acc


def _primitive_element(field: GF) -> int:
    order = field.q - 1
    if order == 1:
        return 1
    factors = prime_factors(order)
    for g in range(2 if field.m == 1 else field.p, field.q):
        if all(_slow_pow(field, g, order // r) != 1 for r in factors):
            return g
    # m == 1 and q == 2 handled above; p = 3 has generator 2
    raise AssertionError("multiplicative group is cyclic")


def _slow_pow(field: GF, a: int, k: int) -> int:
    if field.m == 1:
        return pow(a, k, field.p)
    result, base = 1, a
    while k:
        if k & 1:
            result = field._poly_mul(result, base)
        k >>= 1
        if k:
            base = field._poly_mul(base, base)
    return result


@lru_cache(maxsize=32)
def _tables_cached(p: int, modulus: tuple[int, ...]) -> FieldTables:
    return FieldTables(GF(p, modulus=modulus))


def _tables(field: GF) -> FieldTables:
    if field.q > TABLE_LIMIT:
        raise ResourceError(f"log tables for a field of size {field.q} exceed {TABLE_LIMIT}")
    return _tables_cached(field.p, field.modulus)


# ---------------------------------------------------------------------------
# root finding


def _as_prime_coeffs(g, p: int) -> list[int]:
    out = []
    for c in g:
        if isinstance(c, FqElem):
            if c.field.p != p or not c.in_prime_field():
                raise ContextMismatchError("coefficients must lie in the prime field F_p")
            out.append(c.value)
        else:
            out.append(int(c) % p)
    return _trim(out)


def roots_in_ext(g: Sequence, p: int, m: int, field: GF | None = None) -> list[FqElem]:
    """Distinct roots in F_{p^m} of a polynomial ``g`` over F_p (coefficients low first).

    Returns the roots sorted by index.  The field is the canonical
    ``GF(p, m)`` unless ``field`` (of the same size) is given.
    """
    check_prime(p)
    if field is None:
        field = GF(p, m)
    elif field.p != p or field.m != m:
        raise ContextMismatchError(f"{field!r} is not F_{p}^{m}")
    Fp = _PrimeOps(p)
    gp = _as_prime_coeffs(g, p)
    if not gp:
        raise ValueError("the zero polynomial has every element as a root")
    if len(gp) == 1:
        return []
    settings = get_settings()
    # h = gcd(g, X^(p^m) - X) collects exactly the roots in F_{p^m}
    xq = _x_to_qpower(Fp, p, m, gp)
    h = _pgcd(Fp, gp, _psub(Fp, xq, [0, 1]))
    if len(h) <= 1:
        return []
    if field.q <= settings.exhaustive_root_limit:
        if field.m == 1:
            xs = np.arange(p, dtype=np.int64)
            acc = np.zeros(p, dtype=object if p > 3_000_000_000 else np.int64)
            for c in reversed(h):
                acc = (acc * xs + c) % p
            hits = np.nonzero(acc == 0)[0]
        elif field.q <= TABLE_LIMIT:
            t = _tables(field)
            vals = t.horner(h, np.arange(field.q, dtype=np.int64))
            hits = np.nonzero(vals == 0)[0]
        else:
            hits = [x for x in range(field.q) if _eval_raw(field, h, x) == 0]
        return [FqElem(field, int(i)) for i in hits]
    rng = random.Random(f"roots:{p}:{m}:{tuple(gp)}")
    found = _split_linear(field, h, rng, settings.splitting_iterations)
    return sorted((FqElem(field, r) for r in set(found)), key=int)


def _eval_raw(field: GF, coeffs: Sequence[int], x: int) -> int:
    acc = 0
    for c in reversed(coeffs):
        acc = field.add(field.mul(acc, x), c)
    return acc


def _split_linear(F: GF, h: list[int], rng: random.Random, budget: int) -> list[int]:
    """Roots of a monic squarefree ``h`` that splits into linear factors over F."""
    h = _monic(F, h)
    if len(h) == 2:
        return [F.neg(h[0])]
    for _ in range(budget):
        a = rng.randrange(F.q)
        if F.p == 2:
            # absolute trace of a*X down to F_2
            base = _pmod(F, [0, a], h)
            w, term = list(base), list(base)
            for _ in range(F.m - 1):
                term = _pmod(F, _pmul(F, term, term), h)
                w = _padd(F, w, term)
            d = _pgcd(F, h, w)
        else:
            w = _ppowmod(F, [a, 1], (F.q - 1) // 2, h)
            d = _pgcd(F, h, _psub(F, w, [1]))
        if 1 < len(d) < len(h):
            rest, rem = _pdivmod(F, h, d)
            assert not rem
            return (_split_linear(F, d, rng, budget)
                    + _split_linear(F, rest, rng, budget))
    raise ResourceError(f"equal-degree splitting did not converge in {budget} iterations")


# ---------------------------------------------------------------------------
# serialisation


def field_to_json(field: GF) -> dict:
    return {"p": field.p, "m": field.m, "modulus": list(field.modulus)}


def field_from_json(data: dict) -> GF:
    return GF(int(data["p"]), modulus=[int(c) for c in data["modulus"]])


def elem_to_json(x: FqElem) -> dict:
    return {"field": field_to_json(x.field), "coeffs": list(x.coeffs)}


def elem_from_json(data: dict) -> FqElem:
    field = field_from_json(data["field"])
    return field([int(c) for c in data["coeffs"]])


def parse_element(text: str, field: GF) -> FqElem:
    """Parse ``"3"``, ``"-1"`` or ``"ext:c0,c1,..."`` into an element of ``field``."""
    text = text.strip()
    try:
        if text.startswith("ext:"):
            cs = [int(c) for c in text[4:].split(",") if c.strip() != ""]
            if not cs or len(cs) > field.m:
                raise ParseError(f"{text!r} needs 1..{field.m} coordinates")
            return field(cs)
        return field(int(text))
    except ValueError as exc:
        raise ParseError(f"cannot parse field element {text!r}") from exc


def iter_prime_field(p: int) -> Iterable[int]:
    return range(p)
