"""``oblivious-crn`` command line.

Exit codes: 0 success or verified, 1 refuted or validation failure,
2 usage or parse error, 3 capped.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Callable, Sequence

from . import __version__
from .builtins import BUILTINS, UnknownBuiltin, builtin_1d, builtin_function
from .compiler import CompileError, compile_1d, compile_1d_leaderless, compile_spec
from .crn import CrnError, format_crn, is_output_monotonic, is_output_oblivious, monotonic_to_oblivious, parse_crn
from .funcspec import NotNondecreasingError, SpecError, extract_eventual_1d, format_rational, scaling_limit
from .simulator import convergence_stats, simulate
from .specio import SpecFileError, SpecValidationError, parse_semilinear_file, parse_spec_file
from .verifier import Caps, dickson_search, verify_window

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_CAPPED = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _ints(text: str) -> list[int]:
    try:
        values = [int(v) for v in text.split(",")]
    except ValueError:
        raise UsageError(f"expected comma-separated integers, got {text!r}") from None
    if any(v < 0 for v in values):
        raise UsageError(f"negative entry in {text!r}")
    return values


def _broadcast(text: str, d: int) -> tuple[int, ...]:
    values = _ints(text)
    if len(values) == 1:
        return tuple(values * d)
    if len(values) != d:
        raise UsageError(f"{text!r} has {len(values)} entries, expected 1 or {d}")
    return tuple(values)


def _caps(args) -> Caps:
    if args.caps:
        try:
            return Caps.parse(args.caps)
        except ValueError as e:
            raise UsageError(str(e)) from None
    return Caps.from_env()


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _load_crn(path: str | None):
    if not path:
        raise UsageError("--crn is required")
    return parse_crn(Path(path).read_text())


def _function(args, d: int | None = None) -> tuple[Callable, int | None]:
    """Evaluator from ``--spec`` or ``--builtin`` plus its dimension if known."""
    if args.spec and args.builtin:
        raise UsageError("give either --spec or --builtin, not both")
    if args.spec:
        s = parse_spec_file(args.spec)
        return s, s.dimension
    if args.builtin:
        b = builtin_function(args.builtin)
        return b, b.dimension
    raise UsageError("one of --spec or --builtin is required")


def _semilinear(args):
    if args.spec and args.builtin:
        raise UsageError("give either --spec or --builtin, not both")
    if args.spec:
        return parse_semilinear_file(args.spec)
    if args.builtin:
        return builtin_1d(args.builtin)
    raise UsageError("one of --spec or --builtin is required")


# -- verbs -----------------------------------------------------------------


def cmd_compile(args) -> int:
    if not args.spec:
        raise UsageError("--spec is required")
    crn = compile_spec(parse_spec_file(args.spec))
    _emit(format_crn(crn), args.output)
    return EXIT_OK


def _compile_1d_common(args, fn) -> int:
    crn = fn(_semilinear(args))
    _emit(format_crn(crn), args.output)
    return EXIT_OK


def cmd_compile_1d(args) -> int:
    return _compile_1d_common(args, compile_1d)


def cmd_compile_1d_leaderless(args) -> int:
    return _compile_1d_common(args, lambda f: compile_1d_leaderless(f, args.bound))


def cmd_verify(args) -> int:
    crn = _load_crn(args.crn)
    f, d = _function(args)
    if d is not None and d != crn.dimension:
        raise UsageError(f"function has dimension {d}, CRN has {crn.dimension} inputs")
    window = _broadcast(args.window, crn.dimension)
    report = verify_window(crn, f, window, _caps(args), workers=args.workers)
    if args.json:
        print(json.dumps(report.to_json(), sort_keys=True, indent=2))
    else:
        print(report.summary())
        bad = report.first("refuted")
        if bad is not None:
            print(bad.trace_text())
    return {"verified": EXIT_OK, "refuted": EXIT_FAIL, "capped": EXIT_CAPPED}[report.status]


def cmd_simulate(args) -> int:
    crn = _load_crn(args.crn)
    if args.input is None:
        raise UsageError("--input is required")
    x = _broadcast(args.input, crn.dimension)
    f = _function(args)[0] if (args.spec or args.builtin) else None
    if args.runs > 1:
        if f is None:
            raise UsageError("--runs > 1 needs --spec or --builtin to score terminals")
        seeds = [args.seed + k for k in range(args.runs)]
        summary = convergence_stats(crn, x, f, seeds, args.steps)
        if args.json:
            print(summary.dumps())
        else:
            print(
                f"{summary.correct}/{summary.runs} runs converged to Y = {summary.expected} "
                f"(mean {summary.mean_steps:.1f} steps, max {summary.max_steps}); seeds {seeds[0]}..{seeds[-1]}"
            )
        return EXIT_OK if summary.correct == summary.runs else EXIT_FAIL
    trace = simulate(crn, x, args.seed, args.steps)
    if args.output:
        Path(args.output).write_text(trace.to_csv())
    if args.json:
        print(json.dumps(trace.to_json(), sort_keys=True))
    else:
        state = "converged" if trace.converged else "step budget exhausted"
        print(f"seed {trace.seed}: {len(trace.steps)} steps, {state}, terminal {trace.terminal}")
    ok = trace.converged and (f is None or trace.terminal[crn.output] == f(x))
    return EXIT_OK if ok else EXIT_FAIL


def cmd_check_oblivious(args) -> int:
    crn = _load_crn(args.crn)
    oblivious = is_output_oblivious(crn)
    monotonic = is_output_monotonic(crn)
    offending = [str(r) for r in crn.reactions if r.reactant(crn.output)]
    if args.json:
        print(json.dumps({"oblivious": oblivious, "monotonic": monotonic, "consuming": offending}, sort_keys=True))
    else:
        print("output-oblivious" if oblivious else f"not output-oblivious: {len(offending)} reaction(s) consume {crn.output}")
        for r in offending:
            print(f"  {r}")
        if not oblivious:
            print("output-monotonic" if monotonic else "not output-monotonic")
    if args.output and monotonic:
        Path(args.output).write_text(format_crn(monotonic_to_oblivious(crn)))
    return EXIT_OK if oblivious else EXIT_FAIL


def cmd_extract_1d(args) -> int:
    form = extract_eventual_1d(_semilinear(args))
    if args.json:
        print(json.dumps({"n": form.n, "p": form.p, "prefix": list(form.prefix), "deltas": list(form.deltas)}))
    else:
        print(f"n = {form.n}, p = {form.p}, deltas = {list(form.deltas)}, f(0..n) = {list(form.prefix)}")
    return EXIT_OK


def cmd_dickson(args) -> int:
    f, d = _function(args)
    d = d if d is not None else args.dimension
    w = dickson_search(f, d, args.bound)
    if args.json:
        payload = None if w is None else {
            "a": list(w.a), "b": list(w.b), "delta": list(w.delta), "lhs": w.lhs, "rhs": w.rhs,
            "chain": [list(c) for c in w.chain],
        }
        print(json.dumps({"witness": payload, "bound": args.bound}, sort_keys=True))
    elif w is None:
        print(f"no witness within bound {args.bound} (not a proof of computability)")
    else:
        print(f"witness: a = {w.a}, b = {w.b}, delta = {w.delta}")
        print(f"f(a + delta) - f(a) = {w.lhs} > f(b + delta) - f(b) = {w.rhs}")
        print(f"pairwise violating run: {' '.join(map(str, w.chain))}")
        print("heuristic signal only: a finite run does not prove non-computability")
    return EXIT_OK if w is None else EXIT_FAIL


def cmd_scaling_limit(args) -> int:
    if not args.spec:
        raise UsageError("--spec is required")
    grads = scaling_limit(parse_spec_file(args.spec))
    if args.json:
        print(json.dumps({"gradients": [[format_rational(q) for q in g] for g in grads]}))
    else:
        terms = ["(" + ", ".join(format_rational(q) for q in g) + ") . z" for g in grads]
        print("min[" + ", ".join(terms) + "]")
    return EXIT_OK


VERBS = {
    "compile": (cmd_compile, "compile a JSON spec into an output-oblivious CRN"),
    "compile-1d": (cmd_compile_1d, "compile a 1D semilinear function (leader)"),
    "compile-1d-leaderless": (cmd_compile_1d_leaderless, "compile a superadditive 1D function without a leader"),
    "verify": (cmd_verify, "exhaustively check stable computation on a window"),
    "simulate": (cmd_simulate, "run the random serial scheduler"),
    "check-oblivious": (cmd_check_oblivious, "report whether the output is ever consumed"),
    "extract-1d": (cmd_extract_1d, "threshold, period and periodic differences of a 1D function"),
    "dickson": (cmd_dickson, "bounded search for an overproduction-forcing run"),
    "scaling-limit": (cmd_scaling_limit, "gradients of the large-input limit"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="oblivious-crn", description="Compile and check output-oblivious CRNs.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="verb", required=True, metavar="VERB")
    for name, (_, help_text) in VERBS.items():
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.add_argument("--spec", help="JSON spec (or semilinear-1d JSON for 1D verbs)")
        p.add_argument("--crn", help="CRN text file")
        p.add_argument("--builtin", help=f"builtin function: {', '.join(sorted(BUILTINS))}")
        p.add_argument("--window", default="4", help="per-axis bounds, comma separated (default 4)")
        p.add_argument("--input", help="input vector for simulate, comma separated")
        p.add_argument("--caps", help="'configs,count' reach-graph caps")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--runs", type=int, default=1)
        p.add_argument("--steps", type=int, default=10**5, help="step budget per simulation")
        p.add_argument("--bound", type=int, default=None)
        p.add_argument("--dimension", type=int, default=2, help="arity for variadic builtins")
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--json", action="store_true", help="machine-readable output")
        p.add_argument("-o", "--output", help="write the main artifact here")
    return parser


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    if args.verb == "dickson" and args.bound is None:
        args.bound = 5
    handler = VERBS[args.verb][0]
    try:
        return handler(args)
    except (UsageError, UnknownBuiltin, CrnError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except SpecFileError as e:
        print(f"error: {e}", file=sys.stderr)
        if e.witness is not None:
            print(f"witness: {e.witness}", file=sys.stderr)
        return EXIT_FAIL if isinstance(e, SpecValidationError) else EXIT_USAGE
    except (CompileError, NotNondecreasingError) as e:
        print(f"error: {e}", file=sys.stderr)
        if getattr(e, "witness", None) is not None:
            print(f"witness: {e.witness}", file=sys.stderr)
        return EXIT_FAIL
    except (SpecError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FAIL


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
