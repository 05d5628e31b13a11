"""Command-line front end.

Exit codes: 0 when every check passes, 1 on violations or refutations,
2 on usage, parse or I/O errors.
"""
from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

from .hoare.vcgen import check_program
from .interp import MonitorOptions, default_cap, run_program
from .printer import print_program
from .reader import ParseError, parse_source
from .recipe import recipe_report, scaffold
from .syntax import Program
from .transform import TransformError, find_function, parse_ordering, to_state, to_while

OK, FAILED, USAGE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(USAGE, f"{self.prog}: error: {message}\n")


class _Abort(Exception):
    pass


def _load(path: str) -> Program:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise _Abort(f"{path}: {exc.strerror}") from exc
    try:
        return parse_source(text)
    except ParseError as exc:
        raise _Abort(f"{path}:{exc}") from exc


def _write(path: str, text: str) -> None:
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as exc:
        raise _Abort(f"{path}: {exc.strerror}") from exc


def _options(args) -> MonitorOptions:
    cap = args.cap if args.cap is not None else default_cap()
    if cap < 1:
        raise _Abort("--cap must be positive")
    return MonitorOptions(enabled=not getattr(args, "no_monitor", False), cap=cap,
                          strict=getattr(args, "strict", False))


def cmd_parse(args) -> int:
    print(print_program(_load(args.file)), end="")
    return OK


def cmd_run(args) -> int:
    result = run_program(_load(args.file), _options(args))
    for err in result.errors:
        print(f"error: {err}")
    for t in result.tests:
        where = f" at {t.pos}" if t.pos else ""
        if t.passed:
            print(f"pass{where}: {t.actual}")
        elif t.error:
            print(f"FAIL{where}: {t.error}")
        else:
            print(f"FAIL{where}: got {t.actual}, expected {t.expected}")
    for e in result.events:
        print(f"monitor: {e}")
    passed = sum(t.passed for t in result.tests)
    print(f"{passed} of {len(result.tests)} tests passed, {len(result.events)} monitor events")
    return OK if result.all_passed and not result.events else FAILED


def _reports(args):
    p = _load(args.file)
    if args.function is not None:
        try:
            find_function(p, args.function)
        except TransformError as exc:
            raise _Abort(f"{args.file}: {exc}") from exc
    reports = check_program(p, args.function, args.mode)
    if not reports:
        print("no loops found")
    return reports


def cmd_check(args) -> int:
    status = OK
    for r in _reports(args):
        print(r.text())
        if r.checkable and not r.verified:
            status = FAILED
    return status


def cmd_drag(args) -> int:
    status = OK
    for r in _reports(args):
        where = f" at {r.pos}" if r.pos else ""
        print(f";; {r.function}{where}")
        if not r.checkable:
            print(f";; not checkable: {r.unsupported}")
            continue
        print(r.drag.text())
        for v in r.vcs:
            if v.verdict != "proved" and v.statement is not None:
                print(f";; {v.label} fails after statement {v.statement}: {v.statement_text}")
        if not r.verified:
            status = FAILED
    return status


def cmd_transform(args) -> int:
    p = _load(args.file)
    try:
        ordering = parse_ordering(args.ordering)
        fn = to_state if args.to == "state" else to_while
        out, name = fn(p, args.function, ordering)
    except TransformError as exc:
        raise _Abort(f"{args.file}: {exc}") from exc
    text = print_program(out)
    if args.emit:
        _write(args.emit, text)
        print(f"wrote {name} to {args.emit}")
    else:
        print(text, end="")
    return OK


def cmd_scaffold(args) -> int:
    state = []
    for item in args.state_var:
        name, _, note = item.partition(":")
        state.append((name, note or None))
    try:
        print(scaffold(args.name, args.param, state), end="")
    except ValueError as exc:
        raise _Abort(str(exc)) from exc
    return OK


def cmd_report(args) -> int:
    p = _load(args.file)
    report = recipe_report(p, args.file, args.mode, _options(args))
    if args.json:
        _write(args.json, report.dumps())
    print(report.text(), end="")
    return OK if report.ok else FAILED


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="loopsmith", description="Design, check and transform while loops.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("parse", help="parse a file and pretty-print it")
    p.add_argument("file")
    p.set_defaults(fn=cmd_parse)

    p = sub.add_parser("run", help="run the check-expect tests with monitoring")
    p.add_argument("file")
    p.add_argument("--no-monitor", action="store_true", help="skip invariant and variant checks")
    p.add_argument("--cap", type=int, help="iteration cap per loop run")
    p.add_argument("--strict", action="store_true", help="stop a test at its first monitor event")
    p.set_defaults(fn=cmd_run)

    for name, fn, text in (("check", cmd_check, "verify annotated loops"),
                           ("drag", cmd_drag, "show the invariant dragged through each loop body")):
        p = sub.add_parser(name, help=text)
        p.add_argument("file")
        p.add_argument("--function", required=(name == "drag"))
        p.add_argument("--mode", choices=("sound", "lenient"), default="lenient")
        p.set_defaults(fn=fn)

    p = sub.add_parser("transform", help="registerize or while-ify a tail-recursive helper")
    p.add_argument("file")
    p.add_argument("--function", required=True)
    p.add_argument("--to", choices=("state", "while"), required=True)
    p.add_argument("--ordering", default="safe", help="safe, naive or a comma-separated name list")
    p.add_argument("--emit", metavar="OUT", help="write the program to OUT")
    p.set_defaults(fn=cmd_transform)

    p = sub.add_parser("scaffold", help="print a while-loop function template")
    p.add_argument("--name", required=True)
    p.add_argument("--param", action="append", default=[], help="function parameter (repeatable)")
    p.add_argument("--state-var", action="append", default=[], metavar="NAME:TYPE")
    p.set_defaults(fn=cmd_scaffold)

    p = sub.add_parser("report", help="design-recipe report")
    p.add_argument("file")
    p.add_argument("--json", metavar="OUT", help="also write the JSON report to OUT")
    p.add_argument("--mode", choices=("sound", "lenient"), default="lenient")
    p.add_argument("--cap", type=int, help="iteration cap per loop run")
    p.set_defaults(fn=cmd_report)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    for stream in (sys.stdout, sys.stderr):
        if hasattr(stream, "reconfigure"):
            stream.reconfigure(encoding="utf-8")
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else USAGE
    try:
        return args.fn(args)
    except _Abort as exc:
        print(f"loopsmith: {exc}", file=sys.stderr)
        return USAGE


if __name__ == "__main__":
    sys.exit(main())
