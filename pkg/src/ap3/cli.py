"""Command-line front end: ``ap3 <command> ...``.

Exit codes: 0 pass, 1 hard failure, 2 usage or parse error, 3 soft-bound
flag, 4 internal cross-check failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from fractions import Fraction
from pathlib import Path

from ap3 import cache
from ap3.kernels import KernelError, build_weight
from ap3.oscillation import oscillation_table, prime_two_thirds_experiment
from ap3.rho_search import BudgetExceededError, rho_descent, rho_exact_sets
from ap3.transfer import TransferError, transfer_pipeline
from ap3.verify import SUITES, run_suite
from ap3.zn_core import (
    TRANSFORM_TOL,
    CrossCheckError,
    ResidueSet,
    lambda3_direct,
    lambda3_exact,
    lambda3_spectral,
    load_input,
    progression_count,
)

EXIT_OK, EXIT_HARD, EXIT_USAGE, EXIT_SOFT, EXIT_CROSSCHECK = 0, 1, 2, 3, 4


class UsageError(Exception):
    pass


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2)


def _read_json(path: str) -> dict:
    try:
        text = sys.stdin.read() if path == "-" else Path(path).read_text()
        return json.loads(text)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc


def cmd_lambda3(args) -> int:
    try:
        obj = load_input(_read_json(args.input))
    except (ValueError, KeyError, TypeError) as exc:
        raise UsageError(str(exc)) from exc
    fn = obj.as_function() if isinstance(obj, ResidueSet) else obj
    direct = lambda3_direct(fn)
    try:
        spectral = lambda3_spectral(fn, tol=args.tol)
    except CrossCheckError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_CROSSCHECK
    residual = abs(direct - spectral)
    N = fn.modulus
    out = {"modulus": N, "lambda3": direct, "cross_check_residual": residual}
    if isinstance(obj, ResidueSet):
        count = progression_count(obj)
        out["exact"] = str(lambda3_exact(obj))
        out["progressions"] = count
        out["lambda3_nontrivial"] = (count - len(obj)) / N ** 2
    else:
        out["lambda3_nontrivial"] = direct - float((fn.values ** 3).sum()) / N ** 2
    if args.json:
        print(dumps(out))
    elif args.exact and isinstance(obj, ResidueSet):
        print(out["exact"])
    else:
        print(f"{direct!r}")
        print(f"residual {residual:.3e}", file=sys.stderr)
    return EXIT_CROSSCHECK if residual >= args.tol else EXIT_OK


def _parse_density(text: str) -> Fraction:
    try:
        q = Fraction(text)
    except ValueError as exc:
        raise UsageError(f"bad density {text!r}") from exc
    if not 0 < q <= 1:
        raise UsageError(f"density must lie in (0, 1], got {text}")
    return q


def cmd_rho(args) -> int:
    q = _parse_density(args.upsilon)
    params = {"N": args.N, "upsilon": str(q), "mode": args.mode,
              "restarts": args.restarts, "budget": args.budget}
    key = cache.param_hash("rho", params, args.seed)
    hit = None if args.no_cache else cache.lookup(key)
    if hit is not None and hit.param_hash == key:
        result = hit.result
    else:
        if args.mode == "exact":
            try:
                res = rho_exact_sets(args.N, q, budget=args.budget)
            except BudgetExceededError as exc:
                raise UsageError(str(exc)) from exc
        else:
            res = rho_descent(args.N, q, restarts=args.restarts, seed=args.seed,
                              threads=args.threads)
        result = res.to_json()
        cache.append("rho", params, args.seed, result)
    if args.json:
        print(dumps(result))
    else:
        v = result["value"]
        shown = f"{v['num']}/{v['den']}" if isinstance(v, dict) else repr(v)
        print(f"rho N={args.N} upsilon={q} mode={args.mode}: {shown}")
        print(f"hash {key}")
    return EXIT_OK


def cmd_transfer(args) -> int:
    try:
        f = load_input(_read_json(args.input))
    except (ValueError, KeyError, TypeError) as exc:
        raise UsageError(str(exc)) from exc
    if isinstance(f, ResidueSet):
        f = f.as_function()
    if args.p is not None and f.modulus != args.p:
        raise UsageError(f"input has modulus {f.modulus}, --p says {args.p}")
    try:
        res = transfer_pipeline(f, args.r, args.eps, allow_small_r=args.allow_small_r)
    except (ValueError, KernelError) as exc:
        raise UsageError(str(exc)) from exc
    except TransferError as exc:
        payload = {"error": str(exc),
                   "audit": exc.audit.to_json() if exc.audit else []}
        print(dumps(payload))
        return EXIT_HARD
    result = res.to_json()
    if args.dump_kernel:
        Path(args.dump_kernel).write_text(dumps(res.weight.to_json()))
    cache.append("transfer", {"input": f.to_json(), "r": args.r, "eps": args.eps},
                 args.seed, result)
    print(dumps(result))
    return EXIT_SOFT if res.soft_violations else EXIT_OK


def cmd_kernel(args) -> int:
    targets = [int(x) for x in args.targets.split(",") if x.strip()] if args.targets else []
    try:
        w = build_weight(args.p, targets, args.eps)
    except KernelError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_HARD
    payload = w.to_json(include_spectra=bool(args.dump_kernel))
    if args.dump_kernel:
        Path(args.dump_kernel).write_text(dumps(payload))
    print(dumps({"checks": w.checks, "window_halfwidth": w.window_halfwidth,
                 "targets": list(w.targets), "inverses": list(w.inverses)}))
    return EXIT_OK


def _rows_to_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def cmd_oscillate(args) -> int:
    if args.table:
        if args.odd_max is None:
            raise UsageError("--table needs --odd-max")
        rows = oscillation_table(args.odd_max, exact_max=args.exact_max, seed=args.seed)
        if args.json:
            print(dumps(rows))
        else:
            sys.stdout.write(_rows_to_csv(rows))
        return EXIT_OK
    if args.p is None:
        raise UsageError("give --p or --table")
    try:
        report = prime_two_thirds_experiment(args.p, seed=args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    print(dumps(report))
    exact_ok = (report["middle_term_identity"] and report["lambda_T_eq_lambda_S"]
                and report["lambda_A_direct_match"] and report["size_S_ok"])
    if not exact_ok:
        return EXIT_HARD
    return EXIT_OK if report["lambda_A_above_threshold"] else EXIT_SOFT


def cmd_verify(args) -> int:
    try:
        results = run_suite(args.suite, args.trials, args.seed)
    except KeyError as exc:
        raise UsageError(str(exc)) from exc
    summary = {"suite": args.suite, "seed": args.seed, "trials": args.trials,
               "results": [r.to_json() for r in results]}
    code = max((r.exit_code for r in results if r.exit_code != EXIT_SOFT), default=0)
    if code == EXIT_OK and any(r.exit_code == EXIT_SOFT for r in results):
        code = EXIT_SOFT
    summary["exit_code"] = code
    cache.append("verify", {"suite": args.suite, "trials": args.trials}, args.seed, summary)
    if args.json:
        print(dumps(summary))
    else:
        for r in results:
            status = {0: "PASS", 1: "FAIL", 3: "SOFT"}[r.exit_code]
            print(f"{status} {r.name}: trials={r.trials} "
                  f"hard={len(r.hard_failures)} soft={len(r.soft_flags)}")
    return code


def cmd_cache(args) -> int:
    if args.action == "list":
        for rec in cache.records():
            print(f"{rec.param_hash} {rec.command} seed={rec.seed} t={rec.timestamp:.0f}")
        return EXIT_OK
    if args.action == "clear":
        n = cache.clear()
        print(f"cleared {n} records")
        return EXIT_OK
    if not args.hash:
        raise UsageError("cache show needs a hash")
    rec = cache.lookup(args.hash)
    if rec is None:
        print(f"no record with hash {args.hash}", file=sys.stderr)
        return EXIT_USAGE
    print(dumps(rec.__dict__))
    return EXIT_OK


def _global_flags(parser, suppress: bool):
    default = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    parser.add_argument("--seed", type=int, default=default(0))
    parser.add_argument("--threads", type=int, default=default(1))
    parser.add_argument("--json", action="store_true", default=default(False))
    parser.add_argument("--tol", type=float, default=default(TRANSFORM_TOL))
    parser.add_argument("--csv", action="store_true", default=default(False))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ap3", description=__doc__.splitlines()[0])
    _global_flags(parser, suppress=False)
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, suppress=True)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("lambda3", parents=[common], help="evaluate Lambda_3 of a JSON input")
    p.add_argument("input")
    p.add_argument("--exact", action="store_true")
    p.set_defaults(func=cmd_lambda3)

    p = sub.add_parser("rho", parents=[common], help="minimize Lambda_3 at a density")
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--upsilon", required=True)
    p.add_argument("--mode", choices=("exact", "descent"), default="exact")
    p.add_argument("--restarts", type=int, default=4)
    p.add_argument("--budget", type=int, default=10 ** 8)
    p.add_argument("--no-cache", action="store_true")
    p.set_defaults(func=cmd_rho)

    p = sub.add_parser("transfer", parents=[common], help="run the Z_p to Z_r pipeline")
    p.add_argument("--p", type=int)
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--allow-small-r", action="store_true")
    p.add_argument("--dump-kernel")
    p.set_defaults(func=cmd_transfer)

    p = sub.add_parser("kernel", parents=[common], help="build a smoothing weight")
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--targets", default="")
    p.add_argument("--dump-kernel")
    p.set_defaults(func=cmd_kernel)

    p = sub.add_parser("oscillate", parents=[common], help="density-2/3 experiments")
    p.add_argument("--p", type=int)
    p.add_argument("--table", action="store_true")
    p.add_argument("--odd-max", type=int)
    p.add_argument("--exact-max", type=int, default=21)
    p.set_defaults(func=cmd_oscillate)

    p = sub.add_parser("verify", parents=[common], help="run property suites")
    p.add_argument("suite", choices=SUITES + ("all",))
    p.add_argument("--trials", type=int, default=100)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("cache", parents=[common], help="inspect stored run records")
    p.add_argument("action", choices=("list", "clear", "show"))
    p.add_argument("hash", nargs="?")
    p.set_defaults(func=cmd_cache)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
