"""Exact intersection-lattice calculus on surfaces.

A model stores every class in an ambient basis with a rational Gram matrix.
Blow-ups extend the ambient basis; contractions never leave it: the contracted
surface is represented by the orthogonal complement of the contracted curves,
and each downstairs class is stored as its numerical pullback.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import IdentityCheckError

Vector = tuple[Fraction, ...]
Matrix = tuple[tuple[Fraction, ...], ...]


# ---------------------------------------------------------------------------
# exact linear algebra


def _frac_matrix(rows) -> Matrix:
    return tuple(tuple(Fraction(v) for v in row) for row in rows)


def determinant(M: Sequence[Sequence[Fraction]]) -> Fraction:
    A = [list(map(Fraction, row)) for row in M]
    n = len(A)
    det = Fraction(1)
    for c in range(n):
        piv = next((r for r in range(c, n) if A[r][c] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != c:
            A[c], A[piv] = A[piv], A[c]
            det = -det
        det *= A[c][c]
        for r in range(c + 1, n):
            f = A[r][c] / A[c][c]
            if f:
                for k in range(c, n):
                    A[r][k] -= f * A[c][k]
    return det


def solve(M: Sequence[Sequence[Fraction]], b: Sequence[Fraction]) -> list[Fraction]:
    """Solve ``M x = b`` for square non-singular ``M``."""
    n = len(M)
    A = [list(map(Fraction, row)) + [Fraction(b[i])] for i, row in enumerate(M)]
    for c in range(n):
        piv = next((r for r in range(c, n) if A[r][c] != 0), None)
        if piv is None:
            raise ValueError("singular matrix")
        A[c], A[piv] = A[piv], A[c]
        inv = 1 / A[c][c]
        A[c] = [v * inv for v in A[c]]
        for r in range(n):
            if r != c and A[r][c]:
                f = A[r][c]
                A[r] = [v - f * w for v, w in zip(A[r], A[c])]
    return [A[r][n] for r in range(n)]


def leading_minors(M: Sequence[Sequence[Fraction]]) -> list[Fraction]:
    return [determinant([row[:k] for row in M[:k]]) for k in range(1, len(M) + 1)]


def is_negative_definite(M: Sequence[Sequence[Fraction]]) -> bool:
    """Sylvester: the k-th leading minor has sign ``(-1)^k``."""
    return all((m < 0) if k % 2 else (m > 0)
               for k, m in enumerate(leading_minors(M), start=1))


def inertia(M: Sequence[Sequence[Fraction]]) -> tuple[int, int, int]:
    """(positive, negative, zero) counts by symmetric Gaussian elimination."""
    A = [list(map(Fraction, row)) for row in M]
    n = len(A)
    pos = neg = 0
    active = list(range(n))
    while active:
        i = next((k for k in active if A[k][k] != 0), None)
        if i is None:
            # all remaining diagonal entries vanish: fold in an off-diagonal pair
            pair = next(((a, b) for a in active for b in active if a < b and A[a][b] != 0), None)
            if pair is None:
                break
            a, b = pair
            for k in range(n):
                A[a][k] += A[b][k]
            for k in range(n):
                A[k][a] += A[k][b]
            continue
        d = A[i][i]
        if d > 0:
            pos += 1
        else:
            neg += 1
        active.remove(i)
        for r in active:
            f = A[r][i] / d
            if f:
                for k in active:
                    A[r][k] -= f * A[i][k]
        for r in active:
            A[r][i] = A[i][r] = Fraction(0)
    return pos, neg, n - pos - neg


def _independent_subset(vectors: Sequence[Vector]) -> list[int]:
    rows: list[list[Fraction]] = []
    pivots: list[int] = []
    keep = []
    for idx, v in enumerate(vectors):
        w = list(v)
        for row, pc in zip(rows, pivots):
            if w[pc]:
                f = w[pc] / row[pc]
                w = [a - f * b for a, b in zip(w, row)]
        pc = next((k for k, a in enumerate(w) if a != 0), None)
        if pc is not None:
            rows.append(w)
            pivots.append(pc)
            keep.append(idx)
    return keep


# ---------------------------------------------------------------------------
# classes and models


@dataclass(frozen=True)
class CurveClass:
    coords: Vector
    label: str = ""

    def __add__(self, other: CurveClass) -> CurveClass:
        _same_dim(self, other)
        return CurveClass(tuple(a + b for a, b in zip(self.coords, other.coords)))

    def __sub__(self, other: CurveClass) -> CurveClass:
        _same_dim(self, other)
        return CurveClass(tuple(a - b for a, b in zip(self.coords, other.coords)))

    def __neg__(self) -> CurveClass:
        return CurveClass(tuple(-a for a in self.coords), self.label)

    def scale(self, k) -> CurveClass:
        k = Fraction(k)
        return CurveClass(tuple(k * a for a in self.coords))

    __rmul__ = scale

    def named(self, label: str) -> CurveClass:
        return CurveClass(self.coords, label)

    def is_zero(self) -> bool:
        return all(a == 0 for a in self.coords)

    def extended(self, extra: int = 1) -> CurveClass:
        return CurveClass(self.coords + (Fraction(0),) * extra, self.label)


def _same_dim(a: CurveClass, b: CurveClass):
    if len(a.coords) != len(b.coords):
        raise ValueError(f"classes of dimension {len(a.coords)} and {len(b.coords)}")


def class_sum(classes: Iterable[CurveClass], dim: int) -> CurveClass:
    acc = CurveClass((Fraction(0),) * dim)
    for c in classes:
        acc = acc + c
    return acc


@dataclass(frozen=True)
class SurfaceModel:
    """Numerical model of a surface.

    ``labels``/``gram`` describe the ambient lattice.  ``basis`` spans the
    model's own Neron-Severi space inside it (the identity for smooth models
    obtained by blowing up).  ``tracked`` are the curves the model knows about.
    """

    name: str
    labels: tuple[str, ...]
    gram: Matrix
    canonical: CurveClass
    tracked: tuple[CurveClass, ...]
    basis: tuple[Vector, ...] = ()
    smooth: bool = True

    def __post_init__(self):
        n = len(self.labels)
        if len(self.gram) != n or any(len(r) != n for r in self.gram):
            raise ValueError("gram matrix does not match the basis")
        if any(self.gram[i][j] != self.gram[j][i] for i in range(n) for j in range(n)):
            raise ValueError("gram matrix is not symmetric")
        if not self.basis:
            ident = tuple(tuple(Fraction(int(i == j)) for j in range(n)) for i in range(n))
            object.__setattr__(self, "basis", ident)
        names = [t.label for t in self.tracked]
        if len(set(names)) != len(names) or "" in names:
            raise ValueError("tracked curves need distinct non-empty labels")
        for c in (self.canonical, *self.tracked):
            if len(c.coords) != n:
                raise ValueError(f"class {c.label!r} has the wrong dimension")

    @property
    def rank(self) -> int:
        return len(self.basis)

    @property
    def dim(self) -> int:
        return len(self.labels)

    def dot(self, a: CurveClass, b: CurveClass) -> Fraction:
        _same_dim(a, b)
        g = self.gram
        total = Fraction(0)
        for i, ai in enumerate(a.coords):
            if ai:
                row = g[i]
                total += ai * sum((row[j] * bj for j, bj in enumerate(b.coords) if bj), Fraction(0))
        return total

    def sq(self, a: CurveClass) -> Fraction:
        return self.dot(a, a)

    def curve(self, label: str) -> CurveClass:
        for t in self.tracked:
            if t.label == label:
                return t
        raise KeyError(f"no tracked curve {label!r} on {self.name}")

    def class_of(self, combo: Mapping[str, object]) -> CurveClass:
        """Linear combination of tracked curves, e.g. ``{"C": 1, "F1": "1/2"}``."""
        acc = self.zero()
        for label, coeff in combo.items():
            acc = acc + self.curve(label).scale(Fraction(coeff))
        return acc

    def basis_class(self, label: str) -> CurveClass:
        i = self.labels.index(label)
        return CurveClass(tuple(Fraction(int(j == i)) for j in range(self.dim)), label)

    def zero(self) -> CurveClass:
        return CurveClass((Fraction(0),) * self.dim)

    def basis_gram(self) -> list[list[Fraction]]:
        vs = [CurveClass(v) for v in self.basis]
        return [[self.dot(a, b) for b in vs] for a in vs]

    def signature(self) -> tuple[int, int, int]:
        return inertia(self.basis_gram())

    def is_hodge_index(self) -> bool:
        """Signature ``(1, rank - 1)``."""
        return self.signature() == (1, self.rank - 1, 0)

    def numerically_trivial(self, D: CurveClass) -> bool:
        """Zero class that also meets every tracked curve trivially."""
        return D.is_zero() and all(self.dot(D, t) == 0 for t in self.tracked)

    def orthogonal_to_model(self, D: CurveClass) -> bool:
        return all(self.dot(D, CurveClass(v)) == 0 for v in self.basis)


def p1xp1_model() -> SurfaceModel:
    """P^1 x P^1 with the diagonal C and two fibers of each ruling."""
    f1 = CurveClass((Fraction(1), Fraction(0)), "f1")
    f2 = CurveClass((Fraction(0), Fraction(1)), "f2")
    return SurfaceModel(
        name="P1xP1",
        labels=("f1", "f2"),
        gram=_frac_matrix([[0, 1], [1, 0]]),
        canonical=(f1.scale(-2) + f2.scale(-2)).named("K"),
        tracked=((f1 + f2).named("C"), f1.named("F1"), f1.named("F2"),
                 f2.named("F3"), f2.named("F4")),
    )


def blow_up(model: SurfaceModel, mults: Mapping[str, int], label: str | None = None,
            name: str | None = None) -> SurfaceModel:
    """Blow up one point; ``mults`` gives the multiplicity of each tracked curve there."""
    if not model.smooth or model.rank != model.dim:
        raise ValueError("blow-ups are supported on smooth ambient models only")
    for key, m in mults.items():
        model.curve(key)
        if int(m) != m or m < 0:
            raise ValueError(f"multiplicity {m} of {key} must be a non-negative integer")
    if label is None:
        k = 1
        while f"E{k}" in model.labels or any(t.label == f"E{k}" for t in model.tracked):
            k += 1
        label = f"E{k}"
    if label in model.labels:
        raise ValueError(f"label {label!r} already used")
    n = model.dim
    gram = [list(row) + [Fraction(0)] for row in model.gram]
    gram.append([Fraction(0)] * n + [Fraction(-1)])
    E = CurveClass((Fraction(0),) * n + (Fraction(1),), label)
    tracked = []
    for t in model.tracked:
        m = Fraction(int(mults.get(t.label, 0)))
        tracked.append((t.extended() - E.scale(m)).named(t.label))
    tracked.append(E)
    K = (model.canonical.extended() + E).named("K")
    return SurfaceModel(name or f"{model.name}+{label}", model.labels + (label,),
                        _frac_matrix(gram), K, tuple(tracked))


# ---------------------------------------------------------------------------
# contractions


@dataclass(frozen=True)
class ContractionData:
    source: SurfaceModel
    contracted: tuple[str, ...]
    matrix: Matrix
    target: SurfaceModel
    discrepancies: dict[str, Fraction] = field(hash=False)

    @property
    def classes(self) -> tuple[CurveClass, ...]:
        return tuple(self.source.curve(lb) for lb in self.contracted)

    def coefficients(self, D: CurveClass) -> dict[str, Fraction]:
        """``a`` with ``D + sum a_i E_i`` orthogonal to every contracted ``E_i``."""
        rhs = [-self.source.dot(E, D) for E in self.classes]
        a = solve(self.matrix, rhs)
        return dict(zip(self.contracted, a))

    def pullback(self, D: CurveClass) -> CurveClass:
        """Numerical pullback of the pushforward of ``D``."""
        out = D
        for E, a in zip(self.classes, self.coefficients(D).values()):
            if a:
                out = out + E.scale(a)
        return out.named(D.label)

    pushforward = pullback

    def projection_matrix(self) -> Matrix:
        cols = [self.pullback(self.source.basis_class(lb)).coords for lb in self.source.labels]
        return tuple(tuple(cols[j][i] for j in range(len(cols))) for i in range(len(cols)))

    def clusters(self) -> list[tuple[str, ...]]:
        """Connected components of the contracted configuration."""
        labels = list(self.contracted)
        idx = {lb: i for i, lb in enumerate(labels)}
        parent = list(range(len(labels)))

        def find(i):
            while parent[i] != i:
                parent[i] = parent[parent[i]]
                i = parent[i]
            return i

        for i in range(len(labels)):
            for j in range(i + 1, len(labels)):
                if self.matrix[i][j] != 0:
                    parent[find(i)] = find(j)
        groups: dict[int, list[str]] = {}
        for lb in labels:
            groups.setdefault(find(idx[lb]), []).append(lb)
        return [tuple(g) for g in groups.values()]


def contract(model: SurfaceModel, labels: Iterable[str], name: str | None = None) -> ContractionData:
    """Contract a negative definite set of tracked curves."""
    labels = tuple(labels)
    if len(set(labels)) != len(labels):
        raise ValueError("repeated curve in the contracted set")
    classes = [model.curve(lb) for lb in labels]
    M = _frac_matrix([[model.dot(a, b) for b in classes] for a in classes])
    if labels and not is_negative_definite(M):
        raise IdentityCheckError("negative definiteness",
                                 f"intersection matrix of {labels} is not negative definite")
    cd = ContractionData(model, labels, M, model, {})
    K_down = cd.pullback(model.canonical)
    discrepancies = {lb: -a for lb, a in cd.coefficients(model.canonical).items()}
    tracked = tuple(cd.pullback(t) for t in model.tracked if t.label not in labels)
    images = [cd.pullback(CurveClass(v)).coords for v in model.basis]
    basis = tuple(images[i] for i in _independent_subset(images))
    if len(basis) != model.rank - len(labels):
        raise IdentityCheckError("rank bookkeeping", f"contracting {labels} gave rank {len(basis)}")
    target = SurfaceModel(name or f"{model.name}/({','.join(labels)})", model.labels,
                          model.gram, K_down.named("K"), tracked, basis, smooth=not labels)
    return ContractionData(model, labels, M, target, discrepancies)


def log_pullback_coefficients(cd: ContractionData, curve: str) -> dict[str, Fraction]:
    """``c_j`` with ``pullback(K_down + C_down) = K_up + C + sum c_j E_j``."""
    C = cd.source.curve(curve)
    return cd.coefficients(cd.source.canonical + C)


def different_coefficients(cd: ContractionData, curve: str) -> dict[tuple[str, ...], Fraction]:
    """Coefficient of the different of ``curve`` at the image of each cluster meeting it."""
    if curve in cd.contracted:
        raise ValueError(f"{curve} is contracted")
    C = cd.source.curve(curve)
    c = log_pullback_coefficients(cd, curve)
    out = {}
    for cluster in cd.clusters():
        meets = [cd.source.dot(cd.source.curve(lb), C) for lb in cluster]
        if not any(meets):
            continue
        out[cluster] = sum((c[lb] * m for lb, m in zip(cluster, meets)), Fraction(0))
    return out


def cartier_index(cd: ContractionData, curve: str) -> int:
    """Least ``r`` with every log pullback coefficient of ``r (K + C)`` integral."""
    return math.lcm(1, *(v.denominator for v in log_pullback_coefficients(cd, curve).values()))


@dataclass(frozen=True)
class PositivityReport:
    self_intersection: Fraction
    against: tuple[tuple[str, Fraction], ...]

    @property
    def passed(self) -> bool:
        return self.self_intersection > 0 and all(v > 0 for _, v in self.against)

    def to_json(self) -> dict:
        return {
            "self_intersection": str(self.self_intersection),
            "against": {lb: str(v) for lb, v in self.against},
            "passed": self.passed,
            "scope": "tracked curves only",
        }


def positivity_check(model: SurfaceModel, D: CurveClass) -> PositivityReport:
    """``D^2 > 0`` and ``D . T > 0`` for every tracked curve ``T`` of the model."""
    return PositivityReport(model.sq(D),
                            tuple((t.label, model.dot(D, t)) for t in model.tracked))


# ---------------------------------------------------------------------------
# the tower


@dataclass
class TowerReport:
    n: int
    ranks: dict[str, int]
    canonical_squares: dict[str, Fraction]
    C_Y_squared: Fraction
    E_Y_squared: Fraction
    C_Z_squared: Fraction
    a: Fraction
    b: Fraction
    one_minus_b: Fraction
    bound: Fraction
    log_degree: Fraction
    different: dict[str, Fraction]
    cartier_index: int
    discrepancies: dict[str, dict[str, Fraction]]
    positivity: dict[str, PositivityReport]
    checks: dict[str, bool]

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "ranks": dict(self.ranks),
            "canonical_squares": {k: str(v) for k, v in self.canonical_squares.items()},
            "C_Y_squared": str(self.C_Y_squared),
            "E_Y_squared": str(self.E_Y_squared),
            "C_Z_squared": str(self.C_Z_squared),
            "a": str(self.a),
            "b": str(self.b),
            "one_minus_b": str(self.one_minus_b),
            "bound": str(self.bound),
            "log_degree": str(self.log_degree),
            "different": {k: str(v) for k, v in self.different.items()},
            "cartier_index": self.cartier_index,
            "discrepancies": {k: {lb: str(v) for lb, v in d.items()}
                              for k, d in self.discrepancies.items()},
            "positivity": {k: r.to_json() for k, r in self.positivity.items()},
            "checks": dict(self.checks),
        }


def four_point_blowup() -> SurfaceModel:
    """Blow up the four points where F1, F2 meet F3, F4."""
    S = p1xp1_model()
    for i in (1, 2):
        for j in (3, 4):
            S = blow_up(S, {f"F{i}": 1, f"F{j}": 1}, label=f"G{i}{j}")
    return SurfaceModel("S", S.labels, S.gram, S.canonical, S.tracked)


def chain_blowup(S: SurfaceModel, n: int) -> SurfaceModel:
    """Blow up ``n`` times along C, starting at C meet F1."""
    prev = "F1"
    for i in range(1, n + 1):
        S = blow_up(S, {"C": 1, prev: 1}, label=f"E{i}")
        prev = f"E{i}"
    return SurfaceModel("Sbar", S.labels, S.gram, S.canonical, S.tracked)


def build_del_pezzo_tower(n: int) -> TowerReport:
    """Run the full lattice pipeline for a chain of length ``n >= 4``.

    Raises :class:`IdentityCheckError` naming the first identity that fails.
    """
    if int(n) != n or n < 4:
        raise ValueError("n must be an integer >= 4")
    half = Fraction(1, 2)
    checks: dict[str, bool] = {}

    def check(name: str, ok: bool, detail: str = ""):
        checks[name] = bool(ok)
        if not ok:
            raise IdentityCheckError(name, detail or name)

    P = p1xp1_model()
    fibers = ("F1", "F2", "F3", "F4")
    check("P1xP1: 2(K + C + 1/2 sum F) = 0",
          P.numerically_trivial((P.canonical + P.class_of({"C": 1, **{f: half for f in fibers}})).scale(2)))

    S = four_point_blowup()
    check("S: F_i are disjoint (-2)-curves",
          all(S.dot(S.curve(a), S.curve(b)) == (-2 if a == b else 0) for a in fibers for b in fibers))
    check("S: 2(K + C + 1/2 sum F) = 0",
          S.numerically_trivial((S.canonical + S.class_of({"C": 1, **{f: half for f in fibers}})).scale(2)))

    psi = contract(S, fibers, name="Z")
    Z = psi.target
    diff = different_coefficients(psi, "C")
    check("Diff of C_Z is 1/2 at four points",
          len(diff) == 4 and all(v == half for v in diff.values()), str(diff))
    log_coeffs = log_pullback_coefficients(psi, "C")
    check("pullback of K_Z + C_Z = K_S + C + 1/2 sum F",
          all(v == half for v in log_coeffs.values()), str(log_coeffs))
    KC_Z = Z.canonical + Z.curve("C")
    check("Z: 2(K_Z + C_Z) = 0", Z.numerically_trivial(KC_Z.scale(2)))
    index = cartier_index(psi, "C")
    C_Z = Z.curve("C")
    pos_CZ = positivity_check(Z, C_Z)
    check("C_Z positive on tracked curves", pos_CZ.passed)

    Sb = chain_blowup(S, n)
    chain = [f"E{i}" for i in range(1, n + 1)]
    selfs = {lb: Sb.sq(Sb.curve(lb)) for lb in ["C", "F1", *chain]}
    check("Sbar: chain self-intersections",
          selfs["C"] == 2 - n and selfs["F1"] == -3 and selfs[f"E{n}"] == -1
          and all(selfs[e] == -2 for e in chain[:-1]), str(selfs))
    check("Sbar: 2(K + C + 1/2 sum F + 1/2 sum E) = 0",
          Sb.numerically_trivial((Sb.canonical + Sb.class_of(
              {"C": 1, **{f: half for f in fibers}, **{e: half for e in chain}})).scale(2)))
    check("adjunction on tracked curves of Sbar",
          all(Sb.dot(Sb.canonical, t) + Sb.sq(t) == -2 for t in Sb.tracked))

    h = contract(Sb, ["F2", "F3", "F4", *reversed(chain[:-1]), "F1"], name="Y")
    Y = h.target
    C_Y, E_Y, K_Y = Y.curve("C"), Y.curve(f"E{n}"), Y.canonical
    C_Y2, E_Y2 = Y.sq(C_Y), Y.sq(E_Y)
    check("C_Y^2 = 7/2 - n", C_Y2 == Fraction(7, 2) - n, str(C_Y2))
    check("K_Y + C_Y + 1/2 E_Y = 0", Y.numerically_trivial(K_Y + C_Y + E_Y.scale(half)))
    log_degree = -Y.dot(K_Y + C_Y, C_Y)
    check("0 < -(K_Y + C_Y).C_Y <= 2", 0 < log_degree <= 2, str(log_degree))

    g = contract(Y, [f"E{n}"], name="Z'")
    a = g.coefficients(C_Y)[f"E{n}"]
    check("g*C_Z = C_Y + a E_Y with a > 0", a > 0, str(a))
    C_Z_via_g = Y.sq(g.pullback(C_Y))
    check("C_Z^2 agrees along both contractions", C_Z_via_g == Z.sq(C_Z), f"{C_Z_via_g} vs {Z.sq(C_Z)}")

    f = contract(Y, ["C"], name="X")
    X = f.target
    b = -f.discrepancies["C"]
    check("K_Y + b C_Y = f*K_X", (K_Y + C_Y.scale(b) - X.canonical).is_zero())
    bound = Fraction(2) / (n - Fraction(7, 2))
    check("0 < 1 - b <= 2/(n - 7/2)", 0 < 1 - b <= bound, f"1-b = {1 - b}, bound {bound}")
    fE = f.pullback(E_Y)
    pos_fE = positivity_check(X, fE)
    check("f_*E_Y positive on tracked curves", pos_fE.passed)

    contractions = {"psi": psi, "h": h, "g": g, "f": f}
    check("contracted configurations negative definite",
          all(is_negative_definite(cd.matrix) for cd in contractions.values()))
    ranks = {"P1xP1": P.rank, "S": S.rank, "Sbar": Sb.rank, "Y": Y.rank, "Z": g.target.rank,
             "X": X.rank}
    check("rank bookkeeping 2 -> 6 -> 6+n -> 3 -> 2",
          ranks == {"P1xP1": 2, "S": 6, "Sbar": 6 + n, "Y": 3, "Z": 2, "X": 2}, str(ranks))
    check("models have signature (1, rank - 1)",
          all(M.is_hodge_index() for M in (P, S, Sb, Y, Z, g.target, X)))
    squares = {"P1xP1": P.sq(P.canonical), "S": S.sq(S.canonical), "Sbar": Sb.sq(Sb.canonical)}
    check("K^2 drops by one per blow-up",
          squares == {"P1xP1": 8, "S": 4, "Sbar": 4 - n}, str(squares))

    return TowerReport(
        n=n,
        ranks=ranks,
        canonical_squares=squares,
        C_Y_squared=C_Y2,
        E_Y_squared=E_Y2,
        C_Z_squared=Z.sq(C_Z),
        a=a,
        b=b,
        one_minus_b=1 - b,
        bound=bound,
        log_degree=log_degree,
        different={"+".join(k): v for k, v in diff.items()},
        cartier_index=index,
        discrepancies={name: dict(cd.discrepancies) for name, cd in contractions.items()},
        positivity={"C_Z": pos_CZ, "f_*E_Y": pos_fE},
        checks=checks,
    )
