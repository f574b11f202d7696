"""Command-line entry point.

Exit codes: 0 success, 1 input error, 2 solver did not converge (the dump
is still written), 3 oracle mismatch in ``validate``.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import io, validation
from .solver import solve

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NOT_CONVERGED = 2
EXIT_ORACLE = 3

log = logging.getLogger("lrwpan")


def cmd_generate(args) -> int:
    cfg = io.load_config(args.config)
    spec = cfg.topology.get("generator")
    if spec is None:
        raise io.ConfigError("topology.generator", "generate needs a generator spec")
    doc = io.topology_document(io.generate_nodes(spec, args.seed))
    text = json.dumps(doc, indent=1)
    if args.out:
        Path(args.out).write_text(text)
    else:
        print(text)
    return EXIT_OK


def cmd_solve(args) -> int:
    cfg = io.load_config(args.config)
    model = io.build_model(cfg, args.seed)
    sol = solve(model, cfg.solver)
    doc = io.solution_document(model, sol, cfg.solver)
    if args.out:
        for path in io.write_solution(doc, args.out, args.format):
            log.info("wrote %s", path)
    else:
        print(json.dumps(doc, indent=1))
    if not sol.converged:
        print(f"not converged after {sol.iterations} iterations "
              f"(residual {sol.final_residual:.3e})", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    print(f"converged in {sol.iterations} iterations (residual {sol.final_residual:.3e})",
          file=sys.stderr)
    return EXIT_OK


def cmd_validate(args) -> int:
    names = list(validation.SUITES) if args.suite == "all" else [args.suite]
    ok = True
    for name in names:
        report = validation.SUITES[name]()
        print(report.line())
        ok &= report.passed
    return EXIT_OK if ok else EXIT_ORACLE


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lrwpan", description=__doc__.splitlines()[0])
    parser.add_argument("--verbose", "-v", action="store_true", help="print the iteration trace")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="place nodes from the config's generator spec")
    gen.add_argument("--config", required=True)
    gen.add_argument("--out")
    gen.add_argument("--seed", type=int, help="override the generator seed")
    gen.set_defaults(func=cmd_generate)

    sol = sub.add_parser("solve", help="solve the model and write the solution dump")
    sol.add_argument("--config", required=True)
    sol.add_argument("--out")
    sol.add_argument("--format", choices=("json", "csv"), default="json")
    sol.add_argument("--seed", type=int, help="override the generator seed")
    sol.set_defaults(func=cmd_solve)

    val = sub.add_parser("validate", help="check closed forms against brute-force oracles")
    val.add_argument("suite", nargs="?", default="all", choices=(*validation.SUITES, "all"))
    val.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(message)s"))
    log.handlers[:] = [handler]
    log.setLevel(logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except (io.ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
