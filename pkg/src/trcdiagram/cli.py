"""Command-line entry point: ``trcdiagram <command> ...``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .diagram import read_diagram, validate, write_diagram
from .errors import TRCError
from .evaluator import equiv_on, evaluate, format_database, format_result, gen_instances, parse_database
from .fixtures import load_fixtures
from .fragments import Fragment, to_fragment
from .metrics import run_benchmark, size_metrics
from .parser import parse_query, pretty
from .render import render
from .safety import check_safety
from .translate import diagram_to_trc, to_builtin_form, trc_to_diagram, trc_to_representationB
from .trc import constants_of, maximal_scope

EXIT_OK, EXIT_ERROR, EXIT_NEGATIVE = 0, 1, 2


def _read(path: str) -> str:
    return Path(path).read_text(encoding="utf-8")


def _write(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_check(args) -> int:
    report = check_safety(parse_query(_read(args.file)))
    print(report.verdict)
    for line in report.lines():
        print(line)
    return EXIT_OK if report.safe else EXIT_NEGATIVE


def cmd_normalize(args) -> int:
    q = to_fragment(parse_query(_read(args.file)), Fragment(args.fragment))
    if args.maximal_scope:
        q = maximal_scope(q)
    print(pretty(q))
    return EXIT_OK


def cmd_to_diagram(args) -> int:
    q = parse_query(_read(args.file))
    d = trc_to_diagram(to_builtin_form(q)) if args.mode == "builtin" else trc_to_representationB(q)
    _write(write_diagram(d), args.output)
    return EXIT_OK


def cmd_from_diagram(args) -> int:
    d = read_diagram(_read(args.file))
    print(pretty(diagram_to_trc(d, disjunction=not args.expand, desugar=args.desugar)))
    return EXIT_OK


def cmd_render(args) -> int:
    d = read_diagram(_read(args.file))
    report = validate(d)
    if not report.valid:
        print(f"error: invalid diagram\n{report}", file=sys.stderr)
        return EXIT_ERROR
    _write(render(d, peirce_shading=args.shading, dotted_connectors=args.dotted), args.output)
    return EXIT_OK


def cmd_eval(args) -> int:
    q = parse_query(_read(args.file))
    db, dom = parse_database(_read(args.db))
    if dom is None:
        dom = frozenset(db.constants() | constants_of(q))
        print(f"# no domain declared; using active domain of size {len(dom)}", file=sys.stderr)
    print(format_result(evaluate(q, db, dom)))
    return EXIT_OK


def cmd_equiv(args) -> int:
    q1 = parse_query(_read(args.a))
    q2 = parse_query(_read(args.b))
    print(f"seed: {args.seed}")
    result = equiv_on(q1, q2, gen_instances([q1, q2], args.instances, args.seed))
    if result.equivalent:
        print(f"equivalent on {args.instances} instances")
        return EXIT_OK
    print("not equivalent; witness:")
    sys.stdout.write(format_database(result.witness.db, result.witness.domain))
    print(f"# {args.a}: {format_result(result.left)}".replace("\n", " "))
    print(f"# {args.b}: {format_result(result.right)}".replace("\n", " "))
    return EXIT_NEGATIVE


def cmd_metrics(args) -> int:
    m = size_metrics(read_diagram(_read(args.file)))
    print("boxes\tedges")
    print(f"{m.boxes}\t{m.edges}")
    return EXIT_OK


def cmd_bench(args) -> int:
    directory = args.dir
    if directory is not None and not Path(directory).is_dir():
        print(f"error: {directory} is not a directory", file=sys.stderr)
        return EXIT_ERROR
    report = run_benchmark(load_fixtures(directory), args.instances, args.seed)
    print(f"# seed\t{args.seed}")
    sys.stdout.write(report.to_tsv())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="trcdiagram", description="TRC queries and their diagrams")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("check", help="report safety; exit 0 if safe, 2 if unsafe")
    s.add_argument("file")
    s.set_defaults(func=cmd_check)

    s = sub.add_parser("normalize", help="print the normalized query, optionally rewritten into a fragment")
    s.add_argument("file")
    s.add_argument("--fragment", choices=[f.value for f in Fragment], default="full")
    s.add_argument("--maximal-scope", action="store_true")
    s.set_defaults(func=cmd_normalize)

    s = sub.add_parser("to-diagram", help="translate a query into a diagram file")
    s.add_argument("file")
    s.add_argument("--mode", choices=["builtin", "repb"], default="builtin")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_to_diagram)

    s = sub.add_parser("from-diagram", help="read a diagram back as a query")
    s.add_argument("file")
    s.add_argument("--expand", action="store_true", help="read fuse boxes as nested negations")
    s.add_argument("--desugar", action="store_true", help="read every in-scope built-in as a predicate")
    s.set_defaults(func=cmd_from_diagram)

    s = sub.add_parser("render", help="draw a diagram as SVG")
    s.add_argument("file")
    s.add_argument("--shading", action="store_true", help="gray fill for odd negation depth")
    s.add_argument("--dotted", action="store_true", help="separate fuse boxes and join them with dotted lines")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_render)

    s = sub.add_parser("eval", help="evaluate a query on a database file")
    s.add_argument("file")
    s.add_argument("--db", required=True)
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("equiv", help="compare two queries on random instances")
    s.add_argument("a")
    s.add_argument("b")
    s.add_argument("--instances", type=int, default=50)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_equiv)

    s = sub.add_parser("metrics", help="box and edge counts of a diagram")
    s.add_argument("file")
    s.set_defaults(func=cmd_metrics)

    s = sub.add_parser("bench", help="run the pipeline over a fixture directory")
    s.add_argument("dir", nargs="?", help="directory of .trc files (default: bundled fixtures)")
    s.add_argument("--instances", type=int, default=20)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except TRCError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
    return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
