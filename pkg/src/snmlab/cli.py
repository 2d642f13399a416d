"""Command-line front end: ``snmlab <subcommand> ...``.

Property verdicts are data: only I/O and parse problems give a nonzero exit,
except ``repro``, which exits 1 when any claim fails.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction

from . import __version__
from .audit import (ManipulationWitness, derive_lower_bound, expand_tournament,
                    snm_audit)
from .core import (TournamentError, gen_balanced, gen_kryptonite, gen_random,
                   gen_rseb_cover_example, read_trn, to_json, to_trn)
from .lp import CertificateFailure, fraction_str, solve_slp
from .rules import evaluate, parse_rule
from .structure import (banks_set, check_condorcet_consistent, check_cover_consistent,
                        check_monotone)


class UsageError(Exception):
    pass


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _table(header: list[str], rows: list[list[str]]) -> str:
    widths = [max(len(r[i]) for r in [header, *rows]) for i in range(len(header))]
    fmt = lambda r: "  ".join(c.rjust(w) for c, w in zip(r, widths))
    return "\n".join([fmt(header), *map(fmt, rows)]) + "\n"


# ---------------------------------------------------------------- subcommands

def cmd_gen(args) -> int:
    if args.family == "balanced":
        if args.k is None:
            raise UsageError("gen balanced needs --k")
        T = gen_balanced(args.k)
    elif args.family == "kryptonite":
        if args.n is None:
            raise UsageError("gen kryptonite needs --n")
        T = gen_kryptonite(args.n)
    elif args.family == "rseb-cover-example":
        T = gen_rseb_cover_example()
    else:
        if args.n is None:
            raise UsageError("gen random needs --n")
        T = gen_random(args.n, args.seed)
    _emit(to_json(T) + "\n" if args.json else to_trn(T), args.out)
    return 0


def cmd_eval(args) -> int:
    rule = parse_rule(args.rule)
    T = read_trn(args.trn)
    ev = evaluate(T, rule)
    probs = list(ev.distribution)
    if args.json:
        out = {"rule": str(rule), "method": ev.method.lower(), "n": T.n}
        if ev.method == "EXACT":
            out["distribution"] = [fraction_str(p) for p in probs]
        else:
            out["distribution"] = probs
            out["half_widths_99"] = list(ev.half_widths)
            out["samples"] = ev.sample_count
            if ev.renormalized:
                out["renormalized"] = True
        print(json.dumps(out, indent=2))
        return 0
    if ev.method == "EXACT":
        rows = [[str(i + 1), fraction_str(p)] for i, p in enumerate(probs)]
        print(_table(["team", "probability"], rows), end="")
    else:
        rows = [[str(i + 1), f"{p:.6f}", f"{h:.6f}"]
                for i, (p, h) in enumerate(zip(probs, ev.half_widths))]
        print(_table(["team", "estimate", "99% +-"], rows), end="")
        print(f"{ev.sample_count} samples" + (" (renormalized)" if ev.renormalized else ""))
    return 0


def cmd_slp(args) -> int:
    T = read_trn(args.trn)
    try:
        cert = solve_slp(T)
    except CertificateFailure as exc:
        print(f"certificate failed: {exc}")
        return 0
    data = {
        "value": "1/1",
        "distribution": cert.solution.to_json(),
        "tight": sorted(i + 1 for i in cert.tight_constraints),
        "support": sorted(i + 1 for i in cert.support),
        "support_rank": cert.support_rank,
        "nullity": cert.nullity,
        "unique": cert.nullity == 1,
    }
    if args.json:
        print(json.dumps(data, indent=2))
    else:
        print("value   1")
        print("p       " + " ".join(data["distribution"]))
        print("support " + " ".join(map(str, data["support"])))
        print("tight   " + " ".join(map(str, data["tight"])))
        print(f"rank of skew matrix on support: {cert.support_rank} (nullity {cert.nullity}, unique)")
    return 0


def cmd_audit(args) -> int:
    rule = parse_rule(args.rule)
    workers = args.threads or os.cpu_count() or 1
    report = snm_audit(rule, args.n, args.k, canonical_only=not args.labeled, workers=workers)
    if args.witness_out and report.witness is not None:
        with open(args.witness_out, "w") as fh:
            fh.write(report.witness.to_json(args.n, args.k) + "\n")
    if args.json:
        print(report.to_json())
        return 0
    mode = "labeled" if args.labeled else "canonical"
    print(f"rule {rule}  n={args.n}  k<={args.k}  ({mode}, {report.tournaments_scanned} tournaments, "
          f"{report.wall_time:.1f}s)")
    print(f"max gain {fraction_str(report.max_gain)}")
    w = report.witness
    if w is not None:
        print(f"witness coalition {sorted(i + 1 for i in w.S)}: "
              f"{fraction_str(w.mass_before)} -> {fraction_str(w.mass_after)}")
        print("T:\n" + to_trn(w.T) + "T':\n" + to_trn(w.T_prime), end="")
    return 0


def cmd_check(args) -> int:
    if args.property == "banks":
        if not args.trn:
            raise UsageError("check banks needs --trn")
        T = read_trn(args.trn)
        rep = banks_set(T)
        out = {"banks_set": sorted(i + 1 for i in rep.banks_set),
               "witnesses": {str(v + 1): [c + 1 for c in ch] for v, ch in rep.witnesses.items()}}
        print(json.dumps(out, indent=2) if args.json
              else "Banks set: " + " ".join(map(str, out["banks_set"])))
        return 0
    if args.rule is None or args.n is None:
        raise UsageError(f"check {args.property} needs --rule and --n")
    rule = parse_rule(args.rule)
    fn = {"cover": check_cover_consistent, "monotone": check_monotone,
          "condorcet": check_condorcet_consistent}[args.property]
    rep = fn(rule, args.n)
    if args.json:
        print(rep.to_json())
    else:
        print(f"{args.property} {rule} n={args.n}: {rep.verdict} ({rep.checked} tournaments)")
        if rep.counterexample:
            print(json.dumps(rep.counterexample["details"]))
            print(rep.counterexample["trn"], end="")
    return 0


def cmd_expand(args) -> int:
    T = read_trn(args.trn)
    _emit(to_trn(expand_tournament(T, args.z)), args.out)
    return 0


def _parse_epsilon(text: str):
    if text in ("estimate", "reference"):
        return text
    try:
        value = Fraction(text)
    except ValueError:
        raise UsageError(f"--epsilon must be a number, 'reference' or 'estimate', got {text!r}") from None
    if value <= 0:
        raise UsageError("--epsilon must be positive")
    return value


def cmd_bounds(args) -> int:
    with open(args.witness) as fh:
        wit = ManipulationWitness.from_json(fh.read())
    eps = _parse_epsilon(args.epsilon)
    params = derive_lower_bound(wit, eps)  # GainTooSmall is an input error
    out = json.loads(params.to_json())
    if eps == "estimate":
        out["reference"] = json.loads(derive_lower_bound(wit, "reference").to_json())
    print(json.dumps(out, indent=2))
    return 0


def cmd_repro(args) -> int:
    from .repro import run_claims, to_csv, to_table

    results = run_claims(args.claims)
    csv_text = to_csv(results)
    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write(csv_text)
    else:
        sys.stdout.write(csv_text + "\n")
    print(to_table(results))
    return 0 if all(r.passed for r in results) else 1


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="snmlab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="write a generated tournament")
    g.add_argument("family", choices=["balanced", "kryptonite", "rseb-cover-example", "random"])
    g.add_argument("--k", type=int)
    g.add_argument("--n", type=int)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", "-o")
    g.add_argument("--json", action="store_true", help="JSON export instead of .trn")
    g.set_defaults(func=cmd_gen)

    e = sub.add_parser("eval", help="winning distribution of a rule")
    e.add_argument("rule", help="e.g. slp, rkoth:exact, rseb:mc=100000,seed=1")
    e.add_argument("trn")
    e.add_argument("--json", action="store_true")
    e.set_defaults(func=cmd_eval)

    s = sub.add_parser("slp", help="solve SLP exactly and print its certificate")
    s.add_argument("trn")
    s.add_argument("--json", action="store_true")
    s.set_defaults(func=cmd_slp)

    a = sub.add_parser("audit", help="largest coalition gain over all tournaments")
    a.add_argument("--rule", required=True)
    a.add_argument("--n", type=int, required=True)
    a.add_argument("--k", type=int, required=True)
    a.add_argument("--labeled", action="store_true", help="scan labeled tournaments")
    a.add_argument("--threads", type=int, default=None, help="worker processes (default: all cores)")
    a.add_argument("--json", action="store_true")
    a.add_argument("--witness-out", help="write the witness bundle JSON here")
    a.set_defaults(func=cmd_audit)

    c = sub.add_parser("check", help="property sweeps and the Banks set")
    c.add_argument("property", choices=["cover", "monotone", "condorcet", "banks"])
    c.add_argument("--rule")
    c.add_argument("--n", type=int)
    c.add_argument("--trn", help="tournament file (banks)")
    c.add_argument("--json", action="store_true")
    c.set_defaults(func=cmd_check)

    x = sub.add_parser("expand", help="replace each team by a balanced group")
    x.add_argument("trn")
    x.add_argument("--z", type=int, required=True)
    x.add_argument("--out", "-o")
    x.set_defaults(func=cmd_expand)

    b = sub.add_parser("bounds", help="lower-bound parameters from a witness bundle")
    b.add_argument("witness")
    b.add_argument("--epsilon", default="reference", help="a value, 'reference' (0.0016) or 'estimate'")
    b.set_defaults(func=cmd_bounds)

    r = sub.add_parser("repro", help="recompute the headline claims")
    r.add_argument("claims", nargs="*", help="claim ids or prefixes (default: all)")
    r.add_argument("--csv", help="write the CSV here instead of standard output")
    r.set_defaults(func=cmd_repro)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (OSError, TournamentError, ValueError, KeyError, UsageError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"snmlab {args.command}: {msg}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
