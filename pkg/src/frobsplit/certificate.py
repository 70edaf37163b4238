"""JSON certificates: a DAG of COMPUTED (replayable) and CITED nodes.

Every COMPUTED node records an operation name and its JSON inputs; the
operation is looked up in :data:`OPS`, so replaying a certificate reruns the
library from scratch and compares the outputs byte for byte.
"""

from __future__ import annotations

import datetime as _dt
import json
from collections.abc import Callable
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from importlib import resources
from typing import Any

import jsonschema

from . import __version__
from . import threefold as tf
from .errors import IdentityCheckError
from .finitefield import GF, elem_from_json, elem_to_json, field_to_json
from .polyfrob import SparsePoly, poly_from_json, poly_to_json
from .splitcrit import (
    ANY,
    fedder_hypersurface,
    find_nonsplit_mu,
    four_point_configuration,
    hasse_invariant,
    lemma_polynomial,
    point_count_legendre,
    split_result,
)
from .surfcalc import build_del_pezzo_tower

SCHEMA_VERSION = "1.0"
COMPUTED = "COMPUTED"
CITED = "CITED"

OPS: dict[str, Callable[..., dict]] = {}


def op(name: str):
    def deco(fn):
        OPS[name] = fn
        return fn
    return deco


def _canon(obj) -> Any:
    """Normalise to plain JSON types (tuples become lists, key order fixed)."""
    return json.loads(json.dumps(obj, sort_keys=True))


def canonical_dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


# ---------------------------------------------------------------------------
# replayable operations


def _family_from_json(data: dict) -> tf.ConeFamily:
    F = GF(data["p"], len(data["modulus"]) - 1, data["modulus"])
    params = tuple(F(list(c)) for c in data["params"])
    return tf.ConeFamily(data["p"], data["form"], params, data["n"])


def _eval_univariate(coeffs, x):
    acc = x.field.zero
    for c in reversed(coeffs):
        acc = acc * x + c
    return acc


@op("find_nonsplit_mu")
def _op_find_mu(p: int) -> dict:
    mu = find_nonsplit_mu(p)
    if mu == ANY:
        return {"mu": ANY, "holds": True}
    return {"mu": elem_to_json(mu), "holds": True}


@op("lemma_root")
def _op_lemma_root(p: int, mu: dict) -> dict:
    x = elem_from_json(mu)
    value = _eval_univariate(lemma_polynomial(p), x)
    return {
        "polynomial": list(lemma_polynomial(p)),
        "value": list(value.coeffs),
        "avoids_0_1": x.value not in (0, 1),
        "holds": value == 0 and x.value not in (0, 1),
    }


@op("four_point_split")
def _op_four_point_split(p: int, e: int, mu: dict) -> dict:
    delta = four_point_configuration(elem_from_json(mu))
    res = split_result(p, e, delta)
    return {
        "divisor": delta.to_json(),
        "multiplicities": list(res.multiplicities),
        "split": res.split,
        "reason": res.reason,
        "holds": not res.split,
    }


@lru_cache(maxsize=32)
def _tower_json(n: int) -> str:
    return canonical_dumps(build_del_pezzo_tower(n).to_json())


@op("del_pezzo_tower")
def _op_tower(n: int) -> dict:
    report = json.loads(_tower_json(n))
    return {"report": report, "holds": all(report["checks"].values())}


_TOWER_IDENTITIES = {
    "C_Y_squared": lambda r, n: (r["C_Y_squared"], Fraction(r["C_Y_squared"]) == Fraction(7, 2) - n),
    "different": lambda r, n: (r["different"],
                               len(r["different"]) == 4
                               and all(Fraction(v) == Fraction(1, 2) for v in r["different"].values())),
    "b_bound": lambda r, n: ({"b": r["b"], "one_minus_b": r["one_minus_b"], "bound": r["bound"]},
                             0 < Fraction(r["one_minus_b"]) <= Fraction(r["bound"])),
    "log_degree": lambda r, n: (r["log_degree"], 0 < Fraction(r["log_degree"]) <= 2),
    "positivity_C_Z": lambda r, n: (r["positivity"]["C_Z"], r["positivity"]["C_Z"]["passed"]),
    "positivity_fE_Y": lambda r, n: (r["positivity"]["f_*E_Y"], r["positivity"]["f_*E_Y"]["passed"]),
    "numerically_trivial": lambda r, n: (
        {k: v for k, v in r["checks"].items() if "= 0" in k},
        all(v for k, v in r["checks"].items() if "= 0" in k)),
}


@op("tower_identity")
def _op_tower_identity(n: int, identity: str) -> dict:
    report = json.loads(_tower_json(n))
    value, ok = _TOWER_IDENTITIES[identity](report, n)
    return {"value": value, "holds": bool(ok)}


@op("cartier_index")
def _op_cartier(p: int, n: int, expect_prime_to_p: bool) -> dict:
    index = json.loads(_tower_json(n))["cartier_index"]
    prime = index % p != 0
    return {"index": index, "prime_to_p": prime, "holds": prime == expect_prime_to_p}


@op("fedder")
def _op_fedder(poly: dict, expect: bool) -> dict:
    f = poly_from_json(poly)
    fpure = fedder_hypersurface(f.field.p, f)
    return {"fpure": fpure, "holds": fpure == expect}


@op("projective_smoothness")
def _op_proj_smooth(poly: dict, degrees: list) -> dict:
    f = poly_from_json(poly)
    found = [{"q": f.field.p ** m,
              "singular_point": _maybe_list(tf.projective_singular_point(f, GF(f.field.p, m)))}
             for m in degrees]
    return {"fields": found, "holds": all(r["singular_point"] is None for r in found)}


def _maybe_list(x):
    return None if x is None else list(x)


@op("cubic_smoothness")
def _op_cubic_smooth(family: dict) -> dict:
    rep = tf.smooth_cubic_check(_family_from_json(family))
    return {"report": rep.to_json(), "holds": rep.smooth}


@op("hasse_invariant")
def _op_hasse(family: dict, expect_zero: bool) -> dict:
    fam = _family_from_json(family)
    h = hasse_invariant(fam.p, fam.cubic)
    return {"value": list(h.coeffs), "holds": (h == 0) == expect_zero}


@op("point_count")
def _op_point_count(p: int, lam: int) -> dict:
    count = point_count_legendre(p, lam)
    return {"count": count, "holds": count == p + 1}


@op("canonicity_chain")
def _op_chain(family: dict) -> dict:
    chain = tf.canonicity_chain(_family_from_json(family))
    data = chain.to_json()
    ok = all(s["evidence"].get("shift", True) is not None for s in data["steps"])
    return {"chain": data, "verdicts": [[v, n] for v, n in chain.verdicts], "holds": ok}


@op("fpure_check")
def _op_fpure(family: dict, expect: bool) -> dict:
    rep = tf.fpure_report(_family_from_json(family))
    return {"report": rep.to_json(), "holds": rep.fpure == expect}


# ---------------------------------------------------------------------------
# certificate assembly


@dataclass
class Certificate:
    command: str
    parameters: dict
    nodes: list[dict] = field(default_factory=list)
    fields: list[dict] = field(default_factory=list)
    conclusion: str | None = None

    def _add(self, node: dict) -> str:
        ids = {n["id"] for n in self.nodes}
        if node["id"] in ids:
            raise ValueError(f"duplicate node id {node['id']}")
        missing = [d for d in node["depends_on"] if d not in ids]
        if missing:
            raise ValueError(f"node {node['id']} depends on unknown nodes {missing}")
        self.nodes.append(node)
        return node["id"]

    def use_field(self, F: GF):
        entry = field_to_json(F)
        if entry not in self.fields:
            self.fields.append(entry)

    def computed(self, node_id: str, statement: str, op_name: str, inputs: dict,
                 depends_on=(), paper_ref: str = "") -> dict:
        """Run ``op_name`` on ``inputs``, record it, and fail loudly if it does not hold."""
        inputs = _canon(inputs)
        outputs = _canon(OPS[op_name](**inputs))
        node = {
            "id": node_id,
            "kind": COMPUTED,
            "statement": statement,
            "data": {"op": op_name, "inputs": inputs, "outputs": outputs},
            "depends_on": list(depends_on),
            "paper_ref": paper_ref,
        }
        self._add(node)
        if not outputs.get("holds", False):
            raise IdentityCheckError(statement, canonical_dumps(outputs)[:500])
        return outputs

    def cited(self, node_id: str, statement: str, paper_ref: str, depends_on=(), data=None) -> str:
        if not paper_ref:
            raise ValueError("a cited node needs a reference")
        return self._add({
            "id": node_id,
            "kind": CITED,
            "statement": statement,
            "data": _canon(data or {}),
            "depends_on": list(depends_on),
            "paper_ref": paper_ref,
        })

    def conclude(self, node_id: str, statement: str, depends_on, paper_ref: str):
        self.cited(node_id, statement, paper_ref, depends_on)
        self.conclusion = node_id

    def to_json(self, timestamp: str | None = None) -> dict:
        if timestamp is None:
            timestamp = _dt.datetime.now(_dt.timezone.utc).replace(microsecond=0).isoformat()
        return {
            "schema_version": SCHEMA_VERSION,
            "meta": {
                "tool": "frobsplit",
                "version": __version__,
                "command": self.command,
                "p": self.parameters.get("p"),
                "parameters": _canon(self.parameters),
                "fields": self.fields,
                "timestamp": timestamp,
            },
            "nodes": self.nodes,
            "conclusion": self.conclusion,
        }


# ---------------------------------------------------------------------------
# validation and replay


@lru_cache(maxsize=1)
def load_schema() -> dict:
    text = resources.files("frobsplit").joinpath("schema/certificate.schema.json").read_text()
    return json.loads(text)


def validate(cert: dict) -> list[str]:
    """Schema and structural problems of a certificate; empty when valid."""
    errors = [e.message for e in jsonschema.Draft202012Validator(load_schema()).iter_errors(cert)]
    if errors:
        return errors
    seen: set[str] = set()
    for node in cert["nodes"]:
        if node["id"] in seen:
            errors.append(f"duplicate id {node['id']}")
        # nodes are listed in dependency order, which makes the graph acyclic
        for dep in node["depends_on"]:
            if dep not in seen:
                errors.append(f"{node['id']} depends on {dep}, which is not an earlier node")
        seen.add(node["id"])
        if node["kind"] == COMPUTED and node["data"].get("op") not in OPS:
            errors.append(f"{node['id']} uses unknown operation {node['data'].get('op')}")
    if cert.get("conclusion") not in seen:
        errors.append("conclusion is not a node")
    return errors


@dataclass(frozen=True)
class ReplayOutcome:
    node_id: str
    identical: bool
    holds: bool


def replay(cert: dict) -> list[ReplayOutcome]:
    """Rerun every COMPUTED node from its recorded inputs."""
    _tower_json.cache_clear()
    out = []
    for node in cert["nodes"]:
        if node["kind"] != COMPUTED:
            continue
        data = node["data"]
        fresh = _canon(OPS[data["op"]](**data["inputs"]))
        out.append(ReplayOutcome(node["id"], canonical_dumps(fresh) == canonical_dumps(data["outputs"]),
                                 bool(fresh.get("holds"))))
    return out


def body_without_timestamp(cert: dict) -> str:
    body = json.loads(json.dumps(cert))
    body["meta"].pop("timestamp", None)
    return canonical_dumps(body)


# ---------------------------------------------------------------------------
# the two end-to-end pipelines

ADJUNCTION_REF = ("adjunction for global F-splitting: on a plt surface pair (Z, C) with C smooth and "
                  "the Cartier index of K_Z + C prime to p, global F-splitting of (Z, C) forces "
                  "global F-splitting of (C, Diff_C)")
THRESHOLD_REF = ("the F-split threshold is attained: (X, Delta + fst D) is globally F-split; applied "
                 "to (Z, t C_Z) this yields beta < 1 with (Z, beta C_Z) not globally F-split")
PUSH_REF = ("global F-splitting pushes forward along proper birational morphisms of normal "
            "varieties (restrict the splitting to a big open set)")
PULL_REF = ("Hacon-Xu (2015), Prop. 2.11: if (Y, Delta) is globally F-regular and "
            "f^*(K_Y + Delta) = K_X + Delta' with Delta' >= 0, then (X, Delta') is globally F-regular")
FERMAT_REF = "Hara (1998a), Example 5.5: the Fermat cubic surface in characteristic 2"
CONE_REF = "a projective hypersurface is globally F-split iff its affine cone is F-pure at the vertex"
FEDDER_REF = "Fedder (1983), Theorem 1.12: f^(p-1) not in (x_i^p) iff F-pure"
KLT_REF = ("quotient of a smooth surface by contracting a negative definite chain with "
           "discrepancies > -1 is klt; ampleness of -K_X from the positivity report on a Picard rank 2 model")
CREPANT_REF = ("a crepant birational morphism from a variety with canonical singularities "
               "has canonical target")
DEURING_REF = "Deuring: the Legendre curve is supersingular iff its Hasse invariant vanishes"


def _mu_nodes(cert: Certificate, p: int, mu_json: dict | None) -> tuple[dict, list[str]]:
    if mu_json is None:
        mu_json = cert.computed(
            "mu.search", "a root mu of the four-point polynomial makes the configuration non-split",
            "find_nonsplit_mu", {"p": p})["mu"]
        deps = ["mu.search"]
    else:
        deps = []
    cert.computed("mu.root", "mu is a root of sum C(n,i)^2 mu^i with mu not in {0, 1}",
                  "lemma_root", {"p": p, "mu": mu_json}, deps)
    for e in (1, 2):
        cert.computed(f"mu.nonsplit.e{e}",
                      f"(P^1, 1/2(inf + 0 + (-1) + (-mu))) is not F-split at level {e}",
                      "four_point_split", {"p": p, "e": e, "mu": mu_json}, ["mu.root"])
    return mu_json, ["mu.root", "mu.nonsplit.e1", "mu.nonsplit.e2"]


def delpezzo_certificate(p: int, n: int, mu: str | None = None) -> Certificate:
    """Certificate for a klt del Pezzo surface that is not globally F-split."""
    from .finitefield import check_prime, parse_element

    check_prime(p)
    if n < 4:
        raise ValueError("n must be >= 4")
    cert = Certificate("delpezzo", {"p": p, "n": n, "mu": mu})
    if p == 2:
        F = GF(2)
        cert.use_field(F)
        fermat = SparsePoly(F, ("x", "y", "z", "w"),
                            {(3, 0, 0, 0): 1, (0, 3, 0, 0): 1, (0, 0, 3, 0): 1, (0, 0, 0, 3): 1})
        cert.computed("cartier.index", "the Cartier index 2 of K_Z + C_Z is divisible by p = 2, "
                      "so the tower argument does not apply", "cartier_index",
                      {"p": p, "n": n, "expect_prime_to_p": False})
        cert.computed("fermat.smooth", "the Fermat cubic surface has no singular point over F_2, F_4",
                      "projective_smoothness", {"poly": poly_to_json(fermat), "degrees": [1, 2]})
        cert.computed("fermat.cone", "the cone over the Fermat cubic is not F-pure (Fedder)",
                      "fedder", {"poly": poly_to_json(fermat), "expect": False})
        cert.cited("fermat.gfs", "the Fermat cubic surface is not globally F-split", CONE_REF,
                   ["fermat.cone"])
        cert.cited("fermat.literature", "the smooth Fermat cubic surface in characteristic 2 is a "
                   "del Pezzo surface that is not globally F-split", FERMAT_REF, ["fermat.smooth"])
        cert.conclude("conclusion", "X klt del Pezzo, not globally F-split",
                      ["cartier.index", "fermat.gfs", "fermat.literature"],
                      "smooth cubic surfaces are del Pezzo; smooth implies klt")
        return cert

    mu_json = None
    if mu is not None:
        x = parse_element(mu, GF(p, 2) if mu.startswith("ext:") else GF(p))
        mu_json = elem_to_json(x)
    mu_json, mu_deps = _mu_nodes(cert, p, mu_json)
    cert.use_field(elem_from_json(mu_json).field)

    cert.computed("tower", f"lattice tower for chain length n = {n}: every identity holds",
                  "del_pezzo_tower", {"n": n})
    labels = {
        "C_Y_squared": "C_Y^2 = 7/2 - n",
        "different": "Diff of C_Z is 1/2 at each of the four points",
        "b_bound": "K_Y + b C_Y = f*K_X with 0 < 1 - b <= 2/(n - 7/2)",
        "log_degree": "0 < -(K_Y + C_Y).C_Y <= 2",
        "positivity_C_Z": "C_Z is positive on every tracked curve and C_Z^2 > 0",
        "positivity_fE_Y": "f_*E_Y is positive on every tracked curve and has positive square",
        "numerically_trivial": "2(K + C + 1/2 sum F (+ 1/2 sum E)) and K_Y + C_Y + 1/2 E_Y are numerically trivial",
    }
    for key, text in labels.items():
        cert.computed(f"tower.{key}", text, "tower_identity", {"n": n, "identity": key}, ["tower"])
    cert.computed("cartier.index", "the Cartier index of K_Z + C_Z is 2, prime to p",
                  "cartier_index", {"p": p, "n": n, "expect_prime_to_p": True}, ["tower"])
    cert.cited("Z.not_gfs", "(Z, C_Z) is not globally F-split", ADJUNCTION_REF,
               mu_deps + ["tower.different", "cartier.index"])
    cert.cited("beta", "there is a rational 0 < beta < 1, independent of n, with (Z, beta C_Z) not "
               "globally F-split", THRESHOLD_REF, ["Z.not_gfs"])
    cert.cited("Y.not_gfs", "(Y, beta C_Y) is not globally F-split, hence neither is (Y, b C_Y) "
               "once 1 - b < 1 - beta", PUSH_REF, ["beta", "tower.b_bound"])
    cert.cited("X.not_gfs", "X is not globally F-split (pullback along f with K_Y + b C_Y = f*K_X)",
               PULL_REF, ["Y.not_gfs", "tower.b_bound"])
    cert.cited("X.klt_dp", "X is a klt del Pezzo surface", KLT_REF,
               ["tower.positivity_fE_Y", "tower.numerically_trivial", "tower.log_degree"])
    cert.conclude("conclusion", "X klt del Pezzo, not globally F-split, for every chain length n with "
                  "2/(n - 7/2) < 1 - beta", ["X.klt_dp", "X.not_gfs"],
                  "composition of the preceding nodes")
    return cert


def threefold_certificate(p: int) -> Certificate:
    """Certificate for a canonical threefold singularity that is not F-pure."""
    from .finitefield import check_prime

    check_prime(p)
    cert = Certificate("threefold", {"p": p})
    if p <= 5:
        f = tf.e8_surface(p)
        cert.use_field(f.field)
        cert.computed("fedder.e8", f"Fedder((x^2+y^3+z^5)^{p - 1}) = 0 mod (x^{p},y^{p},z^{p},w^{p}): "
                      "not F-pure", "fedder", {"poly": poly_to_json(f), "expect": False},
                      paper_ref=FEDDER_REF)
        cert.cited("canonical.e8", "Spec k[x,y,z,w]/(x^2+y^3+z^5) is canonical", tf.HARA_E8_REF)
        cert.conclude("conclusion", "X canonical, not F-pure", ["fedder.e8", "canonical.e8"],
                      "composition of the preceding nodes")
        return cert

    fam = tf.supersingular_family(p)
    cert.use_field(fam.field)
    fam_json = fam.describe()
    lam = fam.params[0]
    cert.computed("lambda.root", "lambda is a root of the Hasse polynomial with lambda not in {0, 1}",
                  "lemma_root", {"p": p, "mu": elem_to_json(lam)})
    cert.computed("lambda.hasse", "the Hasse invariant of the Legendre cubic vanishes",
                  "hasse_invariant", {"family": fam_json, "expect_zero": True}, ["lambda.root"])
    deps = ["lambda.hasse"]
    if lam.field.m == 1:
        cert.computed("lambda.count", "the Legendre curve has p + 1 points over F_p",
                      "point_count", {"p": p, "lam": lam.value}, ["lambda.root"])
        deps.append("lambda.count")
    cert.cited("supersingular", "the Legendre curve is a supersingular elliptic curve", DEURING_REF, deps)
    cert.computed("cubic.smooth", "the cubic is smooth (closed form and brute force)",
                  "cubic_smoothness", {"family": fam_json})
    cert.computed("chain", f"blow-up recursion for X_{p}: crepant steps down to a smooth or terminal base",
                  "canonicity_chain", {"family": fam_json}, ["cubic.smooth"])
    chain_deps = ["chain"]
    chain = tf.canonicity_chain(fam)
    if chain.steps[-1].verdict == tf.Verdict.TERMINAL_BASE:
        for i, item in enumerate(chain.steps[-1].evidence["cited"]):
            nid = f"chain.base.{i}"
            cert.cited(nid, item["statement"], item["reference"], ["chain"])
            chain_deps.append(nid)
    cert.cited("canonical", f"X_{p} is canonical", CREPANT_REF, chain_deps)
    cert.computed("fpure", f"(f + w^{p})^{p - 1} lies in (x^{p}, y^{p}, z^{p}, w^{p}), and agrees with "
                  "the three-variable test: not F-pure", "fpure_check",
                  {"family": fam_json, "expect": False}, ["supersingular"], paper_ref=FEDDER_REF)
    cert.conclude("conclusion", "X canonical, not F-pure", ["canonical", "fpure"],
                  "composition of the preceding nodes")
    return cert
