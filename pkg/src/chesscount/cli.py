"""Command-line front end: solve, oracle, analyze, validate, perft.

Counts are printed as exact decimal integers; in JSON output they are
strings, so consumers never round them through 53-bit floats.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import combinatorics as comb
from .analysis import (check_poset_exactness, cover_edges_text,
                       infer_precedence_poset, poset_dot, solution_set)
from .board import parse_fen, perft
from .poset import Poset
from .problem import ProblemError, load_problem, validate_problem
from .solver import (ALL_PRUNING_RULES, SearchLimits, enumerate_solutions,
                     solve)

TIERS = {"fast": ("fast",), "medium": ("fast", "medium"),
         "all": ("fast", "medium", "long")}


def _problem_paths(paths: list[str]) -> list[Path]:
    out = []
    for raw in paths:
        p = Path(raw)
        if p.is_dir():
            out.extend(sorted(p.glob("*.cep")))
        else:
            out.append(p)
    return out


def _limits_from_args(args) -> SearchLimits:
    pruning = ALL_PRUNING_RULES - frozenset(args.no_prune or ())
    return SearchLimits(
        tt_bytes=args.tt_mb * 1024 * 1024,
        enumerate_limit=args.limit,
        pruning=pruning,
        paranoid_tt=args.paranoid_tt,
    )


def _solve_one(path: Path, args):
    problem = load_problem(path)
    lim = _limits_from_args(args)
    if args.list:
        report = enumerate_solutions(problem, lim)
    else:
        report = solve(problem, lim)
    return problem, report


def cmd_solve(args) -> int:
    paths = _problem_paths(args.paths)
    tiers = TIERS[args.tier]
    failures = mismatches = 0
    outputs = []
    for path in paths:
        try:
            problem = load_problem(path)
        except (ProblemError, OSError) as exc:
            outputs.append((path, None, None, f"error: {exc}"))
            failures += 1
            continue
        if problem.tier not in tiers:
            continue
        try:
            problem, report = _solve_one(path, args)
        except Exception as exc:  # report per problem, keep the batch going
            outputs.append((path, problem, None, f"error: {exc}"))
            failures += 1
            continue
        err = None
        if report.incomplete:
            err = "error: search incomplete (budget exhausted)"
            failures += 1
        elif problem.expected_count is not None \
                and report.count != problem.expected_count:
            err = (f"MISMATCH: expected {problem.expected_count}, "
                   f"got {report.count}")
            mismatches += 1
        outputs.append((path, problem, report, err))

    for path, problem, report, err in outputs:
        if args.json:
            doc = {"id": problem.id if problem else path.stem,
                   "path": str(path)}
            if report is not None:
                doc.update(report.to_json_dict())
                doc["ok"] = err is None
            if err is not None:
                doc["error"] = err
            print(json.dumps(doc))
            continue
        name = problem.id if problem else path.stem
        if report is None:
            print(f"{name}: {err}")
            continue
        line = f"{name}: count = {report.count}"
        if report.series_count is not None \
                and report.series_count != report.count:
            line += f" ({report.series_count} distinct series)"
        line += f"  [{report.elapsed:.2f}s, {report.nodes_visited} nodes]"
        if err:
            line += f"  {err}"
        print(line)
        if args.list and report.solutions is not None:
            for sol in report.solutions:
                print("  " + " ".join(sol))
            if report.truncated:
                print(f"  ... truncated at {args.limit} lines "
                      f"(raise with --limit)")
    if failures:
        return 1
    if mismatches:
        return 2
    return 0


def _parse_shape(text: str) -> tuple[int, ...]:
    text = text.strip()
    if not text:
        return ()
    return tuple(int(x) for x in text.split(","))


def cmd_oracle(args) -> int:
    name = args.name
    rest = " ".join(args.args)
    try:
        if name == "catalan":
            value = comb.catalan(int(rest))
        elif name == "euler":
            value = comb.euler_zigzag(int(rest))
        elif name == "fib":
            value = comb.fibonacci(int(rest))
        elif name == "multinomial":
            n, parts = args.args[0], args.args[1]
            value = comb.multinomial(int(n), _parse_shape(parts))
        elif name == "syt":
            value = comb.syt_count(_parse_shape(rest))
        elif name == "chess-tableaux":
            value = comb.chess_tableaux_count(_parse_shape(rest))
        elif name == "skew":
            outer, _, inner = rest.partition("/")
            value = comb.skew_syt_count(_parse_shape(outer),
                                        _parse_shape(inner))
        elif name == "extensions":
            elements: list[str] = []
            covers = []
            for tok in args.args:
                if "<" in tok:
                    a, _, b = tok.partition("<")
                    a, b = a.strip(), b.strip()
                    covers.append((a, b))
                    elements.extend(x for x in (a, b) if x not in elements)
                elif tok.strip() not in elements:
                    elements.append(tok.strip())
            value = Poset(elements, covers).count_linear_extensions()
        else:
            print(f"unknown oracle {name!r}", file=sys.stderr)
            return 1
    except (ValueError, IndexError) as exc:
        print(f"oracle error: {exc}", file=sys.stderr)
        return 1
    print(value)
    return 0


def cmd_analyze(args) -> int:
    try:
        problem = load_problem(args.path)
    except (ProblemError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    lim = _limits_from_args(args)
    report = enumerate_solutions(problem, lim)
    if report.solutions is None or not report.solutions:
        print(f"{problem.id}: no solutions to analyze")
        return 1
    if report.truncated:
        print(f"error: enumeration hit the limit of {args.limit} lines; "
              f"raise it with --limit", file=sys.stderr)
        return 1
    sset = solution_set(problem, report.solutions)
    structure = infer_precedence_poset(sset)
    print(f"{problem.id}: {report.count} solutions, "
          f"{len(sset.sequences)} distinct sequences")
    if not structure.common_multiset:
        print("common move set: no")
        return 0
    print("common move set: yes")
    structure = check_poset_exactness(sset, structure,
                                      alternating=args.alternating)
    assert structure.poset is not None
    print(f"poset: {len(structure.poset)} elements, "
          f"{len(structure.poset.covers)} cover edges")
    for line in cover_edges_text(structure.poset):
        print("  " + line)
    verdict = "yes" if structure.exact else "no"
    print(f"extension count: {structure.extension_count}")
    print(f"exact: {verdict} ({structure.extension_count} "
          f"{'=' if structure.exact else '!='} {len(sset.sequences)})")
    if args.dot:
        Path(args.dot).write_text(poset_dot(structure.poset, problem.id),
                                  encoding="utf-8")
    return 0


def cmd_validate(args) -> int:
    paths = _problem_paths(args.paths)
    bad = 0
    for path in paths:
        try:
            problem = load_problem(path)
        except (ProblemError, OSError) as exc:
            print(f"{path}: error: {exc}")
            bad += 1
            continue
        diags = validate_problem(problem)
        if diags:
            bad += 1
            for d in diags:
                print(f"{problem.id}: {d}")
        else:
            print(f"{problem.id}: ok")
    return 1 if bad else 0


def cmd_perft(args) -> int:
    try:
        pos = parse_fen(args.fen)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for d in range(1, args.depth + 1):
        print(f"perft({d}) = {perft(pos, d)}")
    return 0


def _add_search_flags(sp):
    sp.add_argument("--list", action="store_true",
                    help="enumerate and print lines of play")
    sp.add_argument("--limit", type=int, default=10_000,
                    help="maximum lines to enumerate (default 10000)")
    sp.add_argument("--tt-mb", type=int,
                    default=SearchLimits().tt_bytes // (1024 * 1024),
                    help="transposition table size in MiB")
    sp.add_argument("--no-prune", action="append", metavar="RULE",
                    choices=sorted(ALL_PRUNING_RULES),
                    help="disable a pruning rule (repeatable)")
    sp.add_argument("--paranoid-tt", action="store_true",
                    help="key the table on full positions, not hashes")
    sp.add_argument("--threads", type=int, default=1,
                    help="accepted for compatibility; solving is sequential")


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(
        prog="chesscount",
        description="Exact counting of chess problem solutions, with "
                    "combinatorics oracles for cross-validation.")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("solve", help="solve problem files or directories")
    sp.add_argument("paths", nargs="+")
    sp.add_argument("--json", action="store_true", help="JSON-lines output")
    sp.add_argument("--tier", choices=sorted(TIERS), default="fast",
                    help="which corpus tiers to run (default fast)")
    _add_search_flags(sp)
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("oracle", help="evaluate a combinatorics oracle")
    sp.add_argument("name", choices=["catalan", "euler", "fib", "multinomial",
                                     "syt", "skew", "extensions",
                                     "chess-tableaux"])
    sp.add_argument("args", nargs="*")
    sp.set_defaults(func=cmd_oracle)

    sp = sub.add_parser("analyze",
                        help="recover the move poset of a solved problem")
    sp.add_argument("path")
    sp.add_argument("--alternating", choices=["white", "black"],
                    help="count only extensions alternating sides, "
                         "starting with this side")
    sp.add_argument("--dot", metavar="FILE",
                    help="also write a Graphviz DOT rendering")
    _add_search_flags(sp)
    sp.set_defaults(func=cmd_analyze)

    sp = sub.add_parser("validate", help="check problem files for errors")
    sp.add_argument("paths", nargs="+")
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("perft", help="move-generator leaf counts")
    sp.add_argument("fen")
    sp.add_argument("depth", type=int)
    sp.set_defaults(func=cmd_perft)

    args = ap.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
