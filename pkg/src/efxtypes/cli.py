"""Command-line front end: ``efxtypes {gen,solve,verify,oracle,replay}``.

Exit codes: 0 pass, 1 certificate failure, 2 bad input, 3 internal diagnostic.
"""
from __future__ import annotations

import argparse
import random
import sys
from pathlib import Path

from .charity import charity_allocate
from .core import (TWO_THIRDS, ContractError, DiagnosticError, InputError, Instance,
                   check_alpha_efx, check_charity, format_fraction, to_fraction)
from .fewtypes import few_types_allocate
from .oracle import brute_force_exists_alpha_efx, verify_trace
from .serialize import (allocation_from_json, allocation_to_json, dumps, instance_from_json,
                        instance_to_json, load_json)
from .trace import Trace

EXIT_PASS, EXIT_FAIL, EXIT_INPUT, EXIT_INTERNAL = 0, 1, 2, 3


def _rational(text: str):
    try:
        return to_fraction(text)
    except InputError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _sizes(text: str):
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"sizes must be comma-separated integers, got {text!r}")


def _emit(payload, out) -> None:
    text = dumps(payload)
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_gen(args) -> int:
    sizes = args.sizes
    if args.types is not None and args.types != len(sizes):
        raise InputError(f"--types {args.types} does not match {len(sizes)} group sizes")
    if args.goods < 1 or args.max_value < 0 or not sizes:
        raise InputError("need at least one good, one type and a non-negative max value")
    rng = random.Random(args.seed)
    rows = [[rng.randint(0, args.max_value) for _ in range(args.goods)] for _ in sizes]
    _emit(instance_to_json(Instance(rows, sizes)), args.out)
    return EXIT_PASS


def cmd_solve(args) -> int:
    inst = instance_from_json(load_json(args.input))
    trace = Trace()
    try:
        if args.algo == "fewtypes":
            if args.alpha != TWO_THIRDS:
                raise InputError("fewtypes certifies alpha = 2/3 only")
            res = few_types_allocate(inst, trace=trace)
            passed = res.certificate.passed
            payload = {"allocation": allocation_to_json(res.allocation), "alpha": format_fraction(args.alpha),
                       "certificate": res.certificate.to_json(),
                       "case": res.case.value if res.case else None, "trace_file": args.trace}
        else:
            X, report = charity_allocate(inst, args.epsilon, d=args.d, trace=trace)
            passed = report["certificate"]["pass"]
            payload = {"allocation": allocation_to_json(X), "report": report, "trace_file": args.trace}
    except (DiagnosticError, ContractError) as exc:
        path = args.trace or "efxtypes-failure.trace.jsonl"
        bad = getattr(exc, "trace", None) or trace
        bad.write(path)
        print(f"internal error: {exc} (trace written to {path})", file=sys.stderr)
        return EXIT_INTERNAL
    if args.trace:
        trace.write(args.trace)
    _emit(payload, args.out)
    return EXIT_PASS if passed else EXIT_FAIL


def cmd_verify(args) -> int:
    inst = instance_from_json(load_json(args.instance))
    data = load_json(args.allocation)
    if isinstance(data, dict) and "allocation" in data:
        data = data["allocation"]
    X = allocation_from_json(inst, data)
    if args.charity:
        cert = check_charity(X, args.alpha, heavy_epsilon=args.epsilon)
    else:
        cert = check_alpha_efx(X, args.alpha)
        if X.pool:
            cert.passed = False
            cert.violations.append({"pool": sorted(X.pool), "message": "allocation is incomplete"})
    _emit(cert.to_json(), None)
    return EXIT_PASS if cert.passed else EXIT_FAIL


def cmd_oracle(args) -> int:
    inst = instance_from_json(load_json(args.input))
    X = brute_force_exists_alpha_efx(inst, args.alpha, complete_only=args.complete)
    _emit({"alpha": format_fraction(args.alpha), "complete": args.complete, "found": X is not None,
           "allocation": allocation_to_json(X) if X is not None else None}, None)
    return EXIT_PASS if X is not None else EXIT_FAIL


def cmd_replay(args) -> int:
    inst = instance_from_json(load_json(args.instance))
    try:
        trace = Trace.read(args.trace)
    except (OSError, ValueError) as exc:
        raise InputError(f"cannot read trace {args.trace}: {exc}") from exc
    report = verify_trace(trace, inst)
    _emit(report, None)
    return EXIT_PASS if report["pass"] else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="efxtypes", description="Exact approximate-EFX allocations for typed instances.")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a random instance")
    g.add_argument("--types", type=int)
    g.add_argument("--sizes", type=_sizes, required=True, help="group sizes, e.g. 2,1,3")
    g.add_argument("--goods", type=int, required=True)
    g.add_argument("--max-value", type=int, default=20)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out")
    g.set_defaults(func=cmd_gen)

    s = sub.add_parser("solve", help="compute an allocation and its certificate")
    s.add_argument("--algo", choices=("fewtypes", "charity"), default="fewtypes")
    s.add_argument("--alpha", type=_rational, default=TWO_THIRDS)
    s.add_argument("--epsilon", type=_rational, default=to_fraction("1/2"))
    s.add_argument("--d", type=int)
    s.add_argument("--input", required=True)
    s.add_argument("--out")
    s.add_argument("--trace")
    s.set_defaults(func=cmd_solve)

    v = sub.add_parser("verify", help="certify an allocation")
    v.add_argument("--alpha", type=_rational, default=TWO_THIRDS)
    v.add_argument("--charity", action="store_true")
    v.add_argument("--epsilon", type=_rational)
    v.add_argument("--instance", required=True)
    v.add_argument("--allocation", required=True)
    v.set_defaults(func=cmd_verify)

    o = sub.add_parser("oracle", help="brute-force search for an alpha-EFX allocation")
    o.add_argument("--alpha", type=_rational, default=TWO_THIRDS)
    o.add_argument("--complete", action="store_true")
    o.add_argument("--input", required=True)
    o.set_defaults(func=cmd_oracle)

    r = sub.add_parser("replay", help="replay and re-check a trace")
    r.add_argument("--trace", required=True)
    r.add_argument("--instance", required=True)
    r.set_defaults(func=cmd_replay)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_PASS
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (DiagnosticError, ContractError) as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
