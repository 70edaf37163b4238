"""Command-line front end.

Exit codes: 0 success, 1 identity-check failure, 2 resource limit, 3 parse or
usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from collections.abc import Sequence

from . import __version__
from .certificate import (
    delpezzo_certificate,
    replay,
    threefold_certificate,
    validate,
)
from .errors import (
    FrobsplitError,
    IdentityCheckError,
    InternalError,
    ParseError,
    ResourceError,
)
from .finitefield import GF, check_prime, format_poly
from .splitcrit import (
    ANY,
    DivisorP1,
    find_nonsplit_mu,
    four_point_configuration,
    fst_bounds,
    lemma_polynomial,
    parse_divisor,
    split_result,
)

EXIT_OK, EXIT_IDENTITY, EXIT_RESOURCE, EXIT_USAGE = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _write_output(text: str, path: str | None):
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".frobsplit-", suffix=".json")
    with os.fdopen(fd, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _prime(text: str) -> int:
    try:
        p = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer")
    try:
        return check_prime(p)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _positive(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer")
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _field_note(x) -> str:
    F = x.field
    if F.m == 1:
        return f"F_{F.p}"
    return f"F_{F.p}[t]/({format_poly(F.modulus, 't')})"


# ---------------------------------------------------------------------------
# subcommands


def cmd_mu(args) -> int:
    p = args.p
    mu = find_nonsplit_mu(p)
    if mu == ANY:
        F4 = GF(2, 2)
        sample = DivisorP1.build(F4, [("inf", "1/2"), (0, "1/2"), (1, "1/2"), (F4.gen, "1/2")])
        res = split_result(2, 1, sample)
        lines = ["mu: any four distinct points",
                 (f"level 1 on 1/2(inf + 0 + 1 + t) over F_4: {'SPLIT' if res.split else 'NON-SPLIT'}"
                  f" (multiplicities {list(res.multiplicities)})")]
        payload = {"p": p, "mu": ANY, "sample_split_e1": res.split}
    else:
        coeffs = list(mu.coeffs)
        res = split_result(p, 1, four_point_configuration(mu))
        res2 = split_result(p, 2, four_point_configuration(mu))
        lines = [
            f"mu = {mu}   coefficients {coeffs} in {_field_note(mu)}",
            f"lemma polynomial: {format_poly(list(lemma_polynomial(p)), 'mu')}",
            f"level 1: {'SPLIT' if res.split else 'NON-SPLIT'} ({res.reason})",
            f"level 2: {'SPLIT' if res2.split else 'NON-SPLIT'} ({res2.reason})",
        ]
        payload = {"p": p, "mu": coeffs, "modulus": list(mu.field.modulus),
                   "split_e1": res.split, "split_e2": res2.split}
    if args.json:
        _write_output(json.dumps(payload, indent=2) + "\n", args.json)
    print("\n".join(lines))
    return EXIT_OK


def cmd_split(args) -> int:
    delta = parse_divisor(args.divisor, args.p, args.m)
    res = split_result(args.p, args.e, delta)
    if res.split:
        a, b = res.witness
        print(f"SPLIT  witness monomial s^{a} t^{b} with coefficient {res.witness_coefficient}")
    else:
        print(f"NON-SPLIT  {res.reason}")
    print(f"q = {res.q}, multiplicities {list(res.multiplicities)}, degree {res.degree}")
    if args.json:
        payload = {"p": args.p, "e": args.e, "divisor": delta.to_json(), "split": res.split,
                   "witness": None if res.witness is None else list(res.witness),
                   "multiplicities": list(res.multiplicities), "reason": res.reason}
        _write_output(json.dumps(payload, indent=2) + "\n", args.json)
    return EXIT_OK


def cmd_fst(args) -> int:
    delta = parse_divisor(args.delta, args.p, args.m)
    d = parse_divisor(args.d, args.p, delta.field.m)
    if d.field != delta.field:
        delta = parse_divisor(args.delta, args.p, d.field.m)
    try:
        interval = fst_bounds(args.p, delta, d, args.emax)
    except ValueError as exc:
        if isinstance(exc, FrobsplitError):
            raise
        raise ParseError(str(exc)) from exc
    text = json.dumps(interval.to_json(), indent=2) + "\n"
    _write_output(text, args.json)
    if args.json:
        print(f"[{interval.lower}, {interval.upper}]")
    return EXIT_OK


def _emit_certificate(cert, path: str | None) -> int:
    body = cert.to_json()
    errors = validate(body)
    if errors:
        raise InternalError(f"emitted certificate is not schema-valid: {errors[0]}")
    _write_output(json.dumps(body, indent=2) + "\n", path)
    return EXIT_OK


def cmd_delpezzo(args) -> int:
    if args.n < 4:
        raise ParseError("--n must be >= 4")
    return _emit_certificate(delpezzo_certificate(args.p, args.n, args.mu), args.json)


def cmd_threefold(args) -> int:
    return _emit_certificate(threefold_certificate(args.p), args.json)


def cmd_selftest(args) -> int:
    from .selftest import run

    results = run(args.filter)
    if not results:
        print(f"no property matches {args.filter!r}", file=sys.stderr)
        return EXIT_USAGE
    width = max(len(r.name) for r in results)
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"{r.name:<{width}}  {status}  {r.seconds:6.2f}s  {r.detail}")
    failed = [r.name for r in results if not r.passed]
    if failed:
        print(f"failing: {', '.join(failed)}", file=sys.stderr)
        return EXIT_IDENTITY
    return EXIT_OK


def cmd_replay(args) -> int:
    try:
        with open(args.file) as fh:
            cert = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot read certificate: {exc}") from exc
    errors = validate(cert)
    if errors:
        for e in errors:
            print(f"invalid: {e}", file=sys.stderr)
        return EXIT_IDENTITY
    outcomes = replay(cert)
    bad = 0
    for o in outcomes:
        ok = o.identical and o.holds
        bad += not ok
        print(f"{o.node_id:<28} {'identical' if o.identical else 'DIFFERS':<10} "
              f"{'holds' if o.holds else 'FAILS'}")
    print(f"{len(outcomes) - bad}/{len(outcomes)} computed nodes reproduced")
    return EXIT_OK if bad == 0 else EXIT_IDENTITY


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="frobsplit", description=(
        "Frobenius-splitting criteria, F-split threshold bounds and certificates for a "
        "non-globally-F-split klt del Pezzo surface and a non-F-pure canonical threefold."))
    parser.add_argument("--version", action="version", version=f"frobsplit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def with_json(sp, what="result"):
        sp.add_argument("--json", metavar="FILE", default=None,
                        help=f"write the {what} as JSON to FILE (default: stdout)")

    sp = sub.add_parser("mu", help="find mu making the four-point half-configuration non-split")
    sp.add_argument("--p", type=_prime, required=True)
    with_json(sp)
    sp.set_defaults(func=cmd_mu)

    sp = sub.add_parser("split", help="level-e splitting test for (P^1, Delta)")
    sp.add_argument("--p", type=_prime, required=True)
    sp.add_argument("--e", type=_positive, required=True)
    sp.add_argument("--divisor", required=True, metavar="SPEC",
                    help='comma-separated COEFF@POINT, POINT = inf | integer | ext:c0,c1,...')
    sp.add_argument("--m", type=_positive, default=None, help="extension degree of the point field")
    with_json(sp)
    sp.set_defaults(func=cmd_split)

    sp = sub.add_parser("fst", help="F-split threshold interval from levels 1..emax")
    sp.add_argument("--p", type=_prime, required=True)
    sp.add_argument("--delta", required=True, metavar="SPEC")
    sp.add_argument("--d", required=True, metavar="SPEC")
    sp.add_argument("--emax", type=_positive, required=True)
    sp.add_argument("--m", type=_positive, default=None)
    with_json(sp, "interval")
    sp.set_defaults(func=cmd_fst)

    sp = sub.add_parser("delpezzo", help="certificate: klt del Pezzo surface, not globally F-split")
    sp.add_argument("--p", type=_prime, required=True)
    sp.add_argument("--n", type=int, required=True, help="chain length, at least 4")
    sp.add_argument("--mu", default=None, help="use this mu instead of searching (integer or ext:c0,c1)")
    with_json(sp, "certificate")
    sp.set_defaults(func=cmd_delpezzo)

    sp = sub.add_parser("threefold", help="certificate: canonical threefold, not F-pure")
    sp.add_argument("--p", type=_prime, required=True)
    with_json(sp, "certificate")
    sp.set_defaults(func=cmd_threefold)

    sp = sub.add_parser("selftest", help="run the invariant suite")
    sp.add_argument("--filter", default=None, help="run only properties whose name contains this")
    sp.set_defaults(func=cmd_selftest)

    sp = sub.add_parser("replay", help="validate a certificate and rerun its computed nodes")
    sp.add_argument("file")
    sp.set_defaults(func=cmd_replay)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except IdentityCheckError as exc:
        print(f"identity check failed: {exc.identity}", file=sys.stderr)
        if exc.detail:
            print(exc.detail, file=sys.stderr)
        return EXIT_IDENTITY
    except ResourceError as exc:
        print(f"resource limit: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except InternalError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_IDENTITY
    except (ParseError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
