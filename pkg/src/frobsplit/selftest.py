"""Invariant suite behind ``frobsplit selftest``.

Each property returns ``(passed, detail)``.  The checks are desk-scale and
deterministic (fixed seeds).
"""

from __future__ import annotations

import random
import time
from collections.abc import Callable
from dataclasses import dataclass
from fractions import Fraction

from .certificate import delpezzo_certificate, replay, threefold_certificate, validate
from .finitefield import GF, roots_in_ext
from .polyfrob import SparsePoly, naive_power_residue, pow_mod_frobpower
from .splitcrit import (
    INFINITY,
    DivisorP1,
    P1Point,
    find_nonsplit_mu,
    four_point_configuration,
    fst_bounds,
    hasse_invariant,
    legendre_configuration,
    legendre_cubic,
    lemma_polynomial,
    level_split_test,
    point_count_legendre,
)
from .surfcalc import build_del_pezzo_tower
from .threefold import ConeFamily, canonicity_chain, fpure_report


@dataclass(frozen=True)
class PropertyResult:
    name: str
    passed: bool
    detail: str
    seconds: float


def _field_axioms():
    rng = random.Random(7)
    for p, m in ((2, 3), (3, 2), (5, 2), (7, 1), (13, 2)):
        F = GF(p, m)
        for _ in range(50):
            a, b, c = (F.element(rng.randrange(F.q)) for _ in range(3))
            if (a + b) * c != a * c + b * c or a * (b * c) != (a * b) * c:
                return False, f"distributivity or associativity fails in F_{p}^{m}"
            if a and a * a.inv() != F.one:
                return False, f"inverse fails in F_{p}^{m}"
            if a ** F.q != a:
                return False, f"a^q != a in F_{p}^{m}"
    return True, "5 fields, 50 triples each"


def _random_poly(rng, F, names, terms, max_exp):
    return SparsePoly(F, names, {tuple(rng.randrange(max_exp + 1) for _ in names): rng.randrange(1, F.p)
                                 for _ in range(terms)})


def _frobenius_prune():
    rng = random.Random(11)
    for trial in range(30):
        p = rng.choice((2, 3, 5, 7))
        names = ("x", "y", "z", "w")[: rng.randrange(1, 5)]
        f = _random_poly(rng, GF(p), names, rng.randrange(1, 5), 3)
        k = rng.randrange(1, p)
        if pow_mod_frobpower(f, k, p) != naive_power_residue(f, k, p):
            return False, f"trial {trial}: pruned and naive powers differ for {f}"
    return True, "30 random polynomials"


def _lemma_polynomial():
    for p in (3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97):
        n = (p - 1) // 2
        c = lemma_polynomial(p)
        if n >= 1 and c[n - 1] != n * n % p:
            return False, f"p={p}: subleading coefficient {c[n - 1]} != n^2"
        if list(c) != list(reversed(c)):
            return False, f"p={p}: not palindromic"
    return True, "odd p <= 97"


def _deuring():
    for p in (5, 7, 11, 13, 17, 19, 23, 29, 31):
        F = GF(p)
        for lam in range(2, p):
            h = hasse_invariant(p, legendre_cubic(F, lam)) == 0
            count = point_count_legendre(p, lam) == p + 1
            nonsplit = not level_split_test(p, 1, legendre_configuration(F(lam)))
            if not (h == count == nonsplit):
                return False, f"p={p} lambda={lam}: hasse={h} count={count} nonsplit={nonsplit}"
    return True, "p in 5..31, all lambda"


def _lemma_configuration():
    for p in (3, 5, 7, 11, 13, 17, 19, 23, 29):
        mu = find_nonsplit_mu(p)
        if mu.value in (0, 1):
            return False, f"p={p}: mu = {mu}"
        if level_split_test(p, 2, four_point_configuration(mu)):
            return False, f"p={p}: the configuration splits at level 2"
    return True, "p in 3..29"


def _monotonicity():
    rng = random.Random(3)
    for _ in range(40):
        p = rng.choice((3, 5, 7))
        F = GF(p)
        pts = rng.sample(range(p), 3)
        big = [Fraction(rng.randrange(0, 5), 4) for _ in range(4)]
        small = [Fraction(rng.randrange(0, int(4 * c) + 1), 4) for c in big]

        def mk(cs, F=F, pts=pts):
            return DivisorP1(F, tuple([(P1Point(F(x)), c) for x, c in zip(pts, cs[:3])]
                                      + [(INFINITY, cs[3])]))

        e = rng.randrange(1, 3)
        if level_split_test(p, e, mk(big)) and not level_split_test(p, e, mk(small)):
            return False, f"p={p} e={e}: {big} splits but {small} does not"
    return True, "40 random pairs"


def _fst_nesting():
    rng = random.Random(5)
    for _ in range(10):
        p = rng.choice((3, 5))
        F = GF(p)
        pts = rng.sample(range(p), 2)
        D = DivisorP1.build(F, [(x, rng.randrange(1, 3)) for x in pts])
        prev = None
        for e_max in (1, 2, 3):
            iv = fst_bounds(p, DivisorP1(F), D, e_max)
            if prev is not None and not (prev.lower <= iv.lower and iv.upper <= prev.upper):
                return False, f"p={p}: interval at e_max={e_max} is not nested"
            prev = iv
    return True, "10 random configurations"


def _tower():
    for n in range(4, 9):
        build_del_pezzo_tower(n)
    return True, "n in 4..8"


def _canonicity():
    for p in (7, 11):
        for n in range(13):
            chain = canonicity_chain(ConeFamily.legendre(p, p - 1, n))
            expected = "SMOOTH" if n % 3 in (0, 1) else "TERMINAL_BASE"
            if chain.steps[-1].verdict.value != expected or len(chain.steps) != n // 3 + 1:
                return False, f"p={p} n={n}: {chain.verdicts}"
    return True, "p in {7, 11}, n in 0..12"


def _ordinarity():
    for p in (5, 7, 11, 13):
        F = GF(p)
        for lam in range(2, p):
            ordinary = hasse_invariant(p, legendre_cubic(F, lam)) != 0
            for n in (p, p + 1, p + 5):
                rep = fpure_report(ConeFamily.legendre(p, lam, n))
                if rep.fpure != ordinary:
                    return False, f"p={p} lambda={lam} n={n}: fpure={rep.fpure}, ordinary={ordinary}"
    return True, "p in {5, 7, 11, 13}"


def _certificates():
    for p in (2, 3, 5, 7, 11):
        for cert in (delpezzo_certificate(p, 4), threefold_certificate(p)):
            body = cert.to_json()
            errs = validate(body)
            if errs:
                return False, f"p={p} {cert.command}: {errs[0]}"
            bad = [r.node_id for r in replay(body) if not (r.identical and r.holds)]
            if bad:
                return False, f"p={p} {cert.command}: replay differs at {bad}"
    return True, "p in {2, 3, 5, 7, 11}"


def _roots():
    for p in (5, 7, 13):
        poly = lemma_polynomial(p)
        roots = roots_in_ext(poly, p, 2)
        if len(roots) != len(poly) - 1:
            return False, f"p={p}: expected {len(poly) - 1} roots in F_{p}^2, got {len(roots)}"
    return True, "supersingular polynomials split over F_p^2"


PROPERTIES: dict[str, Callable[[], tuple[bool, str]]] = {
    "field-axioms": _field_axioms,
    "frobenius-prune": _frobenius_prune,
    "lemma-polynomial": _lemma_polynomial,
    "lemma-configuration": _lemma_configuration,
    "deuring": _deuring,
    "split-monotonicity": _monotonicity,
    "fst-nesting": _fst_nesting,
    "supersingular-roots": _roots,
    "surface-tower": _tower,
    "canonicity-recursion": _canonicity,
    "ordinarity-triangle": _ordinarity,
    "certificate-replay": _certificates,
}


def run(filter_text: str | None = None) -> list[PropertyResult]:
    results = []
    for name, fn in PROPERTIES.items():
        if filter_text and filter_text.lower() not in name:
            continue
        t0 = time.perf_counter()
        try:
            ok, detail = fn()
        except Exception as exc:  # noqa: BLE001 - report, never crash the table
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        results.append(PropertyResult(name, ok, detail, time.perf_counter() - t0))
    return results
