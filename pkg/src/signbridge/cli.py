"""Command-line interface: ``signbridge {solve,validate,uniformize,gen,rate}``.

Machine-readable output goes to files or stdout; human summaries go to stderr.
Exit codes for ``solve``: 0 converged, 2 max iterations, 3 diverged, 1 bad input.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace

import numpy as np

from . import io
from .diagnostics import estimate_rate, validate_fixture
from .errors import HypergraphError, OracleFailed, ProblemValidationError, RateUndefined, SignBridgeError
from .hypergraph import uniformize
from .problem import generate_feasible
from .solver import Status, solve_generalized

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_MAX_ITER = 2
EXIT_DIVERGED = 3
EXIT_CHECK_FAILED = 4

_STATUS_EXIT = {Status.CONVERGED: EXIT_OK, Status.MAX_ITERATIONS: EXIT_MAX_ITER, Status.DIVERGED: EXIT_DIVERGED}


def _err(msg):
    print(f"signbridge: {msg}", file=sys.stderr)


def _emit(doc, out):
    text = io.dump_json(doc, out)
    if out is None:
        sys.stdout.write(text)


def cmd_solve(args) -> int:
    try:
        doc = io.load_json(args.problem)
        problem, sparse = io.problem_from_document(doc)
    except io.DocumentError as exc:
        _err(str(exc))
        return EXIT_INPUT
    changes = {}
    if args.tol is not None:
        changes["tolerance"] = args.tol
    if args.max_iter is not None:
        changes["max_iterations"] = args.max_iter
    if args.trace:
        changes["record_trace"] = True
    if args.reduce_support:
        changes["reduce_support"] = True
    try:
        if changes:
            problem = problem.with_options(**changes)
        solution = solve_generalized(problem)
    except ProblemValidationError as exc:
        for v in exc.violations:
            _err(f"{args.problem}: {v}")
        return EXIT_INPUT
    except (SignBridgeError, ValueError) as exc:
        _err(f"{args.problem}: {exc}")
        return EXIT_INPUT

    extra = {}
    if args.oracle:
        from .oracle import oracle_solve

        try:
            ref = oracle_solve(problem.with_options(reduce_support=False))
            gap = float(np.max(np.abs(ref.posterior - solution.posterior), initial=0.0))
            extra["oracle_max_disagreement"] = gap
            print(f"oracle: max entrywise disagreement {gap:.3e}", file=sys.stderr)
        except (OracleFailed, ValueError) as exc:
            extra["oracle_max_disagreement"] = None
            print(f"oracle: inconclusive ({exc})", file=sys.stderr)
    if args.trace:
        io.write_trace_csv(solution.trace, args.trace)
    _emit(io.solution_to_document(solution, sparse=sparse, trace_path=args.trace, extra=extra), args.out)
    print(
        f"status={solution.status.value} sweeps={solution.iterations_used} "
        f"max_residual={max(solution.final_residuals):.3e}",
        file=sys.stderr,
    )
    return _STATUS_EXIT[solution.status]


def cmd_validate(args) -> int:
    try:
        problem, _ = io.problem_from_document(io.load_json(args.problem))
        posterior = io.read_posterior(io.load_json(args.posterior), problem.shape)
    except io.DocumentError as exc:
        _err(str(exc))
        return EXIT_INPUT
    report = validate_fixture(posterior, problem, args.tol)
    for ell, r in enumerate(report.max_residuals()):
        print(f"mode {ell}: max |residual| = {r!r}")
    if report.passed:
        print(f"PASS at tolerance {args.tol!r}")
        return EXIT_OK
    for ell in sorted({f[0] for f in report.failures}):
        idx = [f[1] for f in report.failures if f[0] == ell]
        print(f"FAIL mode {ell}: indices {', '.join(map(str, idx))} (zero-based)")
    return EXIT_CHECK_FAILED


def cmd_uniformize(args) -> int:
    try:
        h = io.hypergraph_from_document(io.load_json(args.hypergraph))
    except (io.DocumentError, HypergraphError, TypeError) as exc:
        _err(str(exc))
        return EXIT_INPUT
    result = uniformize(h)
    _emit(io.uniformization_to_document(result), args.out)
    print(f"virtual nodes: {list(result.virtual_node_ids)}", file=sys.stderr)
    return EXIT_OK


def cmd_gen(args) -> int:
    try:
        if args.order < 1 or args.dim < 1:
            raise ValueError("--order and --dim must be >= 1")
        problem = generate_feasible([args.dim] * args.order, args.density, args.neg_frac, args.seed)
    except (ValueError, SignBridgeError) as exc:
        _err(str(exc))
        return EXIT_INPUT
    _emit(io.problem_to_document(problem), args.out)
    return EXIT_OK


def cmd_rate(args) -> int:
    try:
        trace = io.read_trace_csv(args.trace)
        est = estimate_rate(trace, args.mode, args.burn_in, norm=args.norm)
    except RateUndefined as exc:
        print(f"rate undefined: {exc}")
        return EXIT_OK
    except (io.DocumentError, ValueError) as exc:
        _err(str(exc))
        return EXIT_INPUT
    print(f"slope={est.slope!r}")
    print(f"intercept={est.intercept!r}")
    print(f"r_squared={est.r_squared!r}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="signbridge", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve a problem document")
    p.add_argument("problem")
    p.add_argument("--tol", type=float)
    p.add_argument("--max-iter", type=int)
    p.add_argument("--trace", help="write the convergence trace CSV here")
    p.add_argument("--out", help="solution document path (default: stdout)")
    p.add_argument("--oracle", action="store_true", help="cross-check with the reference optimizer")
    p.add_argument("--reduce-support", action="store_true", help="drop entries forced to zero before iterating")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("validate", help="check a posterior against a problem's marginals")
    p.add_argument("problem")
    p.add_argument("posterior")
    p.add_argument("--tol", type=float, default=1e-9)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("uniformize", help="pad a hypergraph with virtual nodes")
    p.add_argument("hypergraph")
    p.add_argument("--out")
    p.set_defaults(func=cmd_uniformize)

    p = sub.add_parser("gen", help="generate a feasible random problem")
    p.add_argument("--order", type=int, default=2)
    p.add_argument("--dim", type=int, default=4)
    p.add_argument("--density", type=float, default=1.0)
    p.add_argument("--neg-frac", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("rate", help="fit a linear rate to a trace CSV")
    p.add_argument("trace")
    p.add_argument("--mode", type=int, default=0)
    p.add_argument("--burn-in", type=int, default=5)
    p.add_argument("--norm", choices=("inf", "l2"), default="inf")
    p.set_defaults(func=cmd_rate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
