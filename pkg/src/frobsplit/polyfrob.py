"""Sparse multivariate polynomials over F_{p^m} and reduction modulo Frobenius powers.

The ideal ``(x_1^q, ..., x_r^q)`` is monomial, so membership of ``f`` is decided
by deleting every term with some exponent ``>= q``: ``f`` lies in the ideal iff
nothing survives.  Because the ideal absorbs multiplication by anything,
pruning may be interleaved with every product of a power computation.
"""

from __future__ import annotations

from collections.abc import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .config import get_settings
from .errors import ContextMismatchError, ResourceError
from .finitefield import GF, FqElem, field_from_json, field_to_json

Monomial = tuple[int, ...]

# packed keys (16 data bits + 1 carry bit per variable) are used below these bounds
_PACK_EXP_LIMIT = 2**16
_PACK_MAX_VARS = 4
_PACK_WIDTH = 17


class SparsePoly:
    """Polynomial as a map from exponent vectors to nonzero coefficients.

    Coefficients are stored as raw element indices of ``field``; the public
    accessors hand out :class:`FqElem` values.
    """

    __slots__ = ("field", "names", "terms")

    def __init__(self, field: GF, names: Sequence[str], terms: Mapping | None = None):
        names = tuple(names)
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate variable names in {names}")
        clean: dict[Monomial, int] = {}
        for exps, c in (terms or {}).items():
            exps = tuple(int(a) for a in exps)
            if len(exps) != len(names):
                raise ValueError(f"exponent vector {exps} does not match variables {names}")
            if any(a < 0 for a in exps):
                raise ValueError(f"negative exponent in {exps}")
            raw = field.coerce_raw(c)
            if raw:
                prev = clean.get(exps)
                raw = raw if prev is None else field.add(prev, raw)
                if raw:
                    clean[exps] = raw
                else:
                    clean.pop(exps, None)
        object.__setattr__(self, "field", field)
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "terms", clean)

    @classmethod
    def _raw(cls, field: GF, names: tuple[str, ...], terms: dict[Monomial, int]) -> SparsePoly:
        # trusted constructor: terms already clean
        obj = cls.__new__(cls)
        object.__setattr__(obj, "field", field)
        object.__setattr__(obj, "names", names)
        object.__setattr__(obj, "terms", terms)
        return obj

    def __setattr__(self, name, value):
        raise AttributeError("SparsePoly is immutable")

    # construction helpers --------------------------------------------------
    @classmethod
    def variables(cls, field: GF, names: Sequence[str]) -> tuple[SparsePoly, ...]:
        names = tuple(names)
        r = len(names)
        return tuple(
            cls._raw(field, names, {tuple(1 if j == i else 0 for j in range(r)): 1})
            for i in range(r)
        )

    @classmethod
    def constant(cls, field: GF, names: Sequence[str], c=1) -> SparsePoly:
        names = tuple(names)
        return cls(field, names, {(0,) * len(names): c})

    @classmethod
    def zero(cls, field: GF, names: Sequence[str]) -> SparsePoly:
        return cls._raw(field, tuple(names), {})

    @classmethod
    def monomial(cls, field: GF, names: Sequence[str], exps: Sequence[int], c=1) -> SparsePoly:
        return cls(field, names, {tuple(exps): c})

    # basic protocol ---------------------------------------------------------
    @property
    def nvars(self) -> int:
        return len(self.names)

    def is_zero(self) -> bool:
        return not self.terms

    def __len__(self):
        return len(self.terms)

    def __iter__(self) -> Iterator[tuple[Monomial, FqElem]]:
        for exps in sorted(self.terms):
            yield exps, FqElem(self.field, self.terms[exps])

    def items(self) -> list[tuple[Monomial, FqElem]]:
        return list(self)

    def _check(self, other: SparsePoly):
        if other.field != self.field or other.names != self.names:
            raise ContextMismatchError(
                f"polynomials over {self.field!r}{self.names} and {other.field!r}{other.names}")

    def _lift(self, other) -> SparsePoly:
        if isinstance(other, SparsePoly):
            self._check(other)
            return other
        if isinstance(other, (int, FqElem)) and not isinstance(other, bool):
            return SparsePoly.constant(self.field, self.names, self.field(other))
        return NotImplemented

    def __eq__(self, other):
        if isinstance(other, SparsePoly):
            return (self.field == other.field and self.names == other.names
                    and self.terms == other.terms)
        if isinstance(other, (int, FqElem)) and not isinstance(other, bool):
            return self == self._lift(other)
        return NotImplemented

    def __hash__(self):
        return hash((self.field, self.names, frozenset(self.terms.items())))

    def __add__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        F = self.field
        out = dict(self.terms)
        for e, c in other.terms.items():
            v = F.add(out.get(e, 0), c)
            if v:
                out[e] = v
            else:
                out.pop(e, None)
        return SparsePoly._raw(F, self.names, out)

    __radd__ = __add__

    def __neg__(self):
        F = self.field
        return SparsePoly._raw(F, self.names, {e: F.neg(c) for e, c in self.terms.items()})

    def __sub__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        return other + (-self)

    def __mul__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        return poly_mul(self, other)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative powers are not polynomials")
        result = SparsePoly.constant(self.field, self.names, 1)
        base = self
        while k:
            if k & 1:
                result = poly_mul(result, base)
            k >>= 1
            if k:
                base = poly_mul(base, base)
        return result

    # structure --------------------------------------------------------------
    def total_degree(self) -> int:
        return max((sum(e) for e in self.terms), default=-1)

    def order(self) -> int:
        """Lowest total degree of a term, i.e. the multiplicity at the origin."""
        return min((sum(e) for e in self.terms), default=-1)

    def is_homogeneous(self, degree: int | None = None) -> bool:
        degs = {sum(e) for e in self.terms}
        if len(degs) > 1:
            return False
        return degree is None or not degs or degs == {degree}

    def constant_term(self) -> FqElem:
        return FqElem(self.field, self.terms.get((0,) * self.nvars, 0))

    def derivative(self, var: int | str) -> SparsePoly:
        i = self.names.index(var) if isinstance(var, str) else var
        F = self.field
        out: dict[Monomial, int] = {}
        for e, c in self.terms.items():
            if e[i] == 0:
                continue
            v = F.mul(c, e[i] % F.p)
            if v:
                ne = e[:i] + (e[i] - 1,) + e[i + 1:]
                out[ne] = v
        return SparsePoly._raw(F, self.names, out)

    def specialize(self, var: int | str, value) -> SparsePoly:
        """Set one variable to a constant (the variable stays in ``names``)."""
        i = self.names.index(var) if isinstance(var, str) else var
        F = self.field
        v = F.coerce_raw(value)
        out: dict[Monomial, int] = {}
        for e, c in self.terms.items():
            w = F.mul(c, F.pow(v, e[i]))
            if w:
                ne = e[:i] + (0,) + e[i + 1:]
                s = F.add(out.get(ne, 0), w)
                if s:
                    out[ne] = s
                else:
                    out.pop(ne, None)
        return SparsePoly._raw(F, self.names, out)

    def evaluate(self, values: Sequence) -> FqElem:
        F = self.field
        vals = [F.coerce_raw(v) for v in values]
        if len(vals) != self.nvars:
            raise ValueError("wrong number of values")
        acc = 0
        for e, c in self.terms.items():
            term = c
            for v, a in zip(vals, e):
                if a:
                    term = F.mul(term, F.pow(v, a))
            acc = F.add(acc, term)
        return FqElem(F, acc)

    def __repr__(self):
        return f"SparsePoly({self}, vars={self.names}, {self.field!r})"

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for e in sorted(self.terms, key=lambda e: (-sum(e), tuple(-a for a in e))):
            c = FqElem(self.field, self.terms[e])
            mono = "*".join(
                n if a == 1 else f"{n}^{a}" for n, a in zip(self.names, e) if a)
            cs = str(c)
            if self.field.m > 1 and c.value >= self.field.p:
                cs = f"({cs})"
            if not mono:
                parts.append(cs)
            elif c.value == 1:
                parts.append(mono)
            else:
                parts.append(f"{cs}*{mono}")
        return " + ".join(parts)


# ---------------------------------------------------------------------------
# multiplication


def _pack_ok(nvars: int, *maxima: int) -> bool:
    return nvars <= _PACK_MAX_VARS and all(m < _PACK_EXP_LIMIT for m in maxima)


def _pack(e: Monomial) -> int:
    k = 0
    for a in reversed(e):
        k = (k << _PACK_WIDTH) | a
    return k


def _unpack(k: int, r: int) -> Monomial:
    mask = (1 << _PACK_WIDTH) - 1
    out = []
    for _ in range(r):
        out.append(k & mask)
        k >>= _PACK_WIDTH
    return tuple(out)


def _max_exp(terms) -> int:
    return max((max(e) if e else 0 for e in terms), default=0)


def poly_mul(a: SparsePoly, b: SparsePoly, budget: int | None = None) -> SparsePoly:
    """Exact product.  Raises :class:`ResourceError` if ``|a|*|b|`` exceeds the budget."""
    a._check(b)
    F, r = a.field, a.nvars
    if not a.terms or not b.terms:
        return SparsePoly.zero(F, a.names)
    if budget is None:
        budget = get_settings().term_budget
    if len(a.terms) * len(b.terms) > budget:
        raise ResourceError(
            f"product of {len(a.terms)} x {len(b.terms)} terms exceeds the term budget {budget}")
    ta, tb = a.terms, b.terms
    if len(ta) > len(tb):
        ta, tb = tb, ta
    prime = F.m == 1
    p = F.p
    if _pack_ok(r, _max_exp(ta), _max_exp(tb)):
        pa = [(_pack(e), c) for e, c in ta.items()]
        pb = [(_pack(e), c) for e, c in tb.items()]
        acc: dict[int, int] = {}
        get = acc.get
        if prime:
            # accumulate unreduced integers, reduce once at the end
            for ka, ca in pa:
                for kb, cb in pb:
                    k = ka + kb
                    acc[k] = get(k, 0) + ca * cb
            out = {}
            for k, v in acc.items():
                v %= p
                if v:
                    out[_unpack(k, r)] = v
        else:
            for ka, ca in pa:
                for kb, cb in pb:
                    k = ka + kb
                    acc[k] = F.add(get(k, 0), F.mul(ca, cb))
            out = {_unpack(k, r): v for k, v in acc.items() if v}
        return SparsePoly._raw(F, a.names, out)
    acc2: dict[Monomial, int] = {}
    for ea, ca in ta.items():
        for eb, cb in tb.items():
            e = tuple(x + y for x, y in zip(ea, eb))
            if prime:
                acc2[e] = acc2.get(e, 0) + ca * cb
            else:
                acc2[e] = F.add(acc2.get(e, 0), F.mul(ca, cb))
    if prime:
        out = {e: v % p for e, v in acc2.items() if v % p}
    else:
        out = {e: v for e, v in acc2.items() if v}
    return SparsePoly._raw(F, a.names, out)


# ---------------------------------------------------------------------------
# Frobenius-power ideals


def reduce_mod_frobpower(f: SparsePoly, q: int) -> SparsePoly:
    """Delete every term having some exponent ``>= q``.

    The result is zero iff ``f`` lies in ``(x_1^q, ..., x_r^q)``.
    """
    if q < 1:
        raise ValueError("q must be at least 1")
    out = {e: c for e, c in f.terms.items() if all(a < q for a in e)}
    return SparsePoly._raw(f.field, f.names, out)


def in_frobenius_power(f: SparsePoly, q: int) -> bool:
    return reduce_mod_frobpower(f, q).is_zero()


def _mulmod_sparse(a: SparsePoly, b: SparsePoly, q: int, budget: int) -> SparsePoly:
    prod = poly_mul(a, b, budget)
    red = reduce_mod_frobpower(prod, q)
    if len(red) > budget:
        raise ResourceError(f"intermediate term count {len(red)} exceeds budget {budget}")
    return red


# products with more term pairs than this go through the dense kernel when possible
_DENSE_SWITCH = 50_000


def _mulmod_auto(a: SparsePoly, b: SparsePoly, q: int, budget: int, dense_ok: bool) -> SparsePoly:
    if dense_ok and len(a) * len(b) > _DENSE_SWITCH:
        return _from_dense(_dense_mulmod(_to_dense(a, q), _to_dense(b, q), a.field),
                           a.field, a.names)
    return _mulmod_sparse(a, b, q, budget)


def _dense_supported(field: GF, q: int, r: int, budget: int) -> bool:
    if r == 0:
        return False
    box = q**r
    if box * field.m > budget or box * field.m > 2**31:
        return False
    return field.m * (field.p - 1) ** 2 < 2**40


def _to_dense(f: SparsePoly, q: int) -> np.ndarray:
    F, r = f.field, f.nvars
    arr = np.zeros((F.m,) + (q,) * r, dtype=np.int64)
    for e, c in f.terms.items():
        arr[(slice(None),) + e] = F.digits(c)
    return arr


def _from_dense(arr: np.ndarray, field: GF, names: tuple[str, ...]) -> SparsePoly:
    support = np.argwhere(np.any(arr != 0, axis=0))
    out = {}
    for pos in support:
        e = tuple(int(a) for a in pos)
        out[e] = field.from_digits([int(v) for v in arr[(slice(None),) + e]])
    return SparsePoly._raw(field, names, out)


def _scalar_matrix(field: GF, c_digits: Sequence[int]) -> np.ndarray:
    """Matrix over F_p of multiplication by the element with these digits."""
    m = field.m
    c = field.from_digits(c_digits)
    mat = np.empty((m, m), dtype=np.int64)
    for j in range(m):
        mat[:, j] = field.digits(field.mul(c, field.p**j))
    return mat


def _dense_mulmod(A: np.ndarray, B: np.ndarray, field: GF) -> np.ndarray:
    """Product of two dense residues, truncated to the box ``[0, q)^r``.

    Loops over the nonzero positions of the sparser operand and adds a scaled,
    shifted copy of the other one.
    """
    p, m = field.p, field.m
    nzA = np.argwhere(np.any(A != 0, axis=0))
    nzB = np.argwhere(np.any(B != 0, axis=0))
    if len(nzA) < len(nzB):
        A, B, nzB = B, A, nzA
    q = A.shape[1]
    acc = np.zeros_like(A)
    # each update adds at most m*(p-1)^2 to an entry
    per_add = m * (p - 1) ** 2
    limit = max(1, ((2**62) // max(per_add, 1)) - 1)
    pending = 0
    for pos in nzB:
        pos = tuple(int(x) for x in pos)
        dst = (slice(None),) + tuple(slice(s, None) for s in pos)
        src = (slice(None),) + tuple(slice(0, q - s) for s in pos)
        coeff = B[(slice(None),) + pos]
        if m == 1:
            acc[dst] += int(coeff[0]) * A[src]
        else:
            mat = _scalar_matrix(field, [int(v) for v in coeff])
            acc[dst] += np.tensordot(mat, A[src], axes=1)
        pending += 1
        if pending >= limit:
            acc %= p
            pending = 0
    acc %= p
    return acc


def pow_mod_frobpower(f: SparsePoly, k: int, q: int, method: str = "auto",
                      budget: int | None = None) -> SparsePoly:
    """``reduce_mod_frobpower(f**k, q)`` by square-and-multiply with pruning after every product.

    ``method`` is ``"dense"`` (numpy residues on the box ``[0, q)^r``),
    ``"sparse"`` (dictionary products) or ``"auto"``.
    """
    if k < 0:
        raise ValueError("k must be non-negative")
    if q < 1:
        raise ValueError("q must be at least 1")
    if budget is None:
        budget = get_settings().term_budget
    F, r = f.field, f.nvars
    if k == 0:
        return SparsePoly.constant(F, f.names, 1)
    base = reduce_mod_frobpower(f, q)
    if base.is_zero():
        return base
    if method == "auto":
        dense_ok = _dense_supported(F, q, r, budget)
        result = base
        for bit in bin(k)[3:]:
            result = _mulmod_auto(result, result, q, budget, dense_ok)
            if bit == "1":
                result = _mulmod_auto(result, base, q, budget, dense_ok)
            if result.is_zero():
                break
        return result
    if method == "dense":
        if r == 0 or q**r * F.m > budget:
            raise ResourceError(f"dense residue box {q}^{r} exceeds the term budget {budget}")
        B = _to_dense(base, q)
        R = B.copy()
        for bit in bin(k)[3:]:
            R = _dense_mulmod(R, R, F)
            if bit == "1":
                R = _dense_mulmod(R, B, F)
        return _from_dense(R, F, f.names)
    if method != "sparse":
        raise ValueError(f"unknown method {method!r}")
    result = base
    for bit in bin(k)[3:]:
        result = _mulmod_sparse(result, result, q, budget)
        if bit == "1":
            result = _mulmod_sparse(result, base, q, budget)
        if result.is_zero():
            break
    return result


def naive_power_residue(f: SparsePoly, k: int, q: int) -> SparsePoly:
    """Full expansion of ``f**k`` by repeated multiplication, reduced only at the end."""
    result = SparsePoly.constant(f.field, f.names, 1)
    for _ in range(k):
        result = poly_mul(result, f)
    return reduce_mod_frobpower(result, q)


def coefficient_of(f: SparsePoly, m: Sequence[int]) -> FqElem:
    m = tuple(int(a) for a in m)
    if len(m) != f.nvars:
        raise ValueError(f"monomial {m} has the wrong length for variables {f.names}")
    return FqElem(f.field, f.terms.get(m, 0))


# ---------------------------------------------------------------------------
# linear substitution


def _det_raw(field: GF, rows: list[list[int]]) -> int:
    a = [list(r) for r in rows]
    n = len(a)
    det = 1
    for col in range(n):
        piv = next((i for i in range(col, n) if a[i][col]), None)
        if piv is None:
            return 0
        if piv != col:
            a[col], a[piv] = a[piv], a[col]
            det = field.neg(det)
        det = field.mul(det, a[col][col])
        inv = field.inv(a[col][col])
        for i in range(col + 1, n):
            if a[i][col]:
                factor = field.mul(a[i][col], inv)
                a[i] = [field.sub(x, field.mul(factor, y)) for x, y in zip(a[i], a[col])]
    return det


def substitute_linear(f: SparsePoly, M: Sequence[Sequence]) -> SparsePoly:
    """Replace variable ``i`` by ``sum_j M[i][j] * x_j``.

    ``M`` must be an invertible square matrix over the field of ``f``.
    """
    F, r = f.field, f.nvars
    rows = [[F.coerce_raw(c) for c in row] for row in M]
    if len(rows) != r or any(len(row) != r for row in rows):
        raise ValueError(f"substitution matrix must be {r}x{r}")
    if _det_raw(F, rows) == 0:
        raise ValueError("substitution matrix is singular")
    xs = SparsePoly.variables(F, f.names)
    forms = []
    for row in rows:
        form = SparsePoly.zero(F, f.names)
        for c, x in zip(row, xs):
            if c:
                form = form + x * FqElem(F, c)
        forms.append(form)
    powers: dict[tuple[int, int], SparsePoly] = {}

    def power(i: int, a: int) -> SparsePoly:
        key = (i, a)
        if key not in powers:
            powers[key] = forms[i] ** a
        return powers[key]

    out = SparsePoly.zero(F, f.names)
    for e, c in f.terms.items():
        term = SparsePoly.constant(F, f.names, FqElem(F, c))
        for i, a in enumerate(e):
            if a:
                term = poly_mul(term, power(i, a))
        out = out + term
    return out


# ---------------------------------------------------------------------------
# serialisation


def poly_to_json(f: SparsePoly) -> dict:
    return {
        "field": field_to_json(f.field),
        "vars": list(f.names),
        "terms": [[list(e), list(c.coeffs)] for e, c in f],
    }


def poly_from_json(data: dict) -> SparsePoly:
    field = field_from_json(data["field"])
    terms = {tuple(e): field([int(x) for x in c]) for e, c in data["terms"]}
    return SparsePoly(field, data["vars"], terms)


def polynomial(field: GF, names: Sequence[str], terms: Iterable[tuple[Sequence[int], object]]
               ) -> SparsePoly:
    """Build a polynomial from ``(exponents, coefficient)`` pairs, summing repeats."""
    out = SparsePoly.zero(field, names)
    for e, c in terms:
        out = out + SparsePoly.monomial(field, names, e, field(c) if not isinstance(c, FqElem) else c)
    return out
