"""Command line driver: ``nanoccs check|explain|run``.

Exit codes: 0 success, 1 lexical/parse/semantic error, 2 over- or
underdetermined model, 3 unsatisfiable constraints, 4 runtime error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import registry as registry_mod
from .errors import CollisionError, NanoError, ScatterOverflow, SpannedError
from .output import summary_json, write_summary
from .pipeline import Compilation, compile_source, default_registry, explain
from .runtime import instantiate

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_DETERMINATION = 2
EXIT_UNSOLVABLE = 3
EXIT_RUNTIME = 4


def _emit_error(exc: SpannedError, source_path: str, as_json: bool) -> None:
    if as_json:
        span = exc.span
        print(json.dumps({"status": "error", "error": type(exc).__name__, "message": exc.message,
                          "path": getattr(exc, "path", ""),
                          "line": span.line if span else None, "column": span.column if span else None}))
    else:
        path = getattr(exc, "path", "")
        prefix = f"{path}: " if path else ""
        where = f" ({exc.span})" if exc.span else ""
        print(f"{source_path}: {type(exc).__name__}: {prefix}{exc.message}{where}", file=sys.stderr)


def _compile(source_path: str, as_json: bool) -> tuple[int, Compilation | None]:
    try:
        text = Path(source_path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        print(f"{source_path}: cannot read source: {exc}", file=sys.stderr)
        return EXIT_ERROR, None
    try:
        result = compile_source(text)
    except SpannedError as exc:
        _emit_error(exc, source_path, as_json)
        return EXIT_ERROR, None
    if result.diagnostics:
        if as_json:
            print(json.dumps({"status": "undetermined",
                              "diagnostics": [d.to_json() for d in result.diagnostics]}))
        else:
            for d in result.diagnostics:
                print(d.render(), file=sys.stderr)
        return EXIT_DETERMINATION, result
    if not result.outcome.ok:
        if as_json:
            print(json.dumps({"status": "unsolvable", "failure": result.outcome.to_json()}))
        else:
            print(result.outcome.render(), file=sys.stderr)
        return EXIT_UNSOLVABLE, result
    return EXIT_OK, result


def cmd_check(args: argparse.Namespace) -> int:
    code, _ = _compile(args.source, args.json)
    if code == EXIT_OK:
        print(json.dumps({"status": "solved"}) if args.json else f"{args.source}: ok")
    return code


def cmd_explain(args: argparse.Namespace) -> int:
    if args.source is None:
        dump = registry_mod.describe(default_registry())
        if args.json:
            print(json.dumps(dump, indent=2))
        else:
            _print_registry(dump)
        return EXIT_OK
    code, result = _compile(args.source, args.json)
    if code != EXIT_OK:
        return code
    lines = explain(result.solved)
    if args.json:
        print(json.dumps([line.to_json() for line in lines], indent=2))
    else:
        for line in lines:
            print(line.render())
    return EXIT_OK


def _print_registry(dump: dict) -> None:
    for cls in dump["classes"]:
        head = cls["name"]
        if cls["parent"]:
            head += f" < {cls['parent']}"
        if cls["keyword"]:
            head += f"  [{cls['keyword']}]"
        print(head)
        for slot in cls["slots"]:
            tail = "required" if slot["required"] else "defaults: " + " | ".join(slot["defaults"])
            print(f"    {slot['name']}: {slot['kind']} {slot['expected']}; {tail}")
    print("constraints:")
    for c in dump["constraints"]:
        print(f"    {c['label']} on {c['owner']}: {c['description']}")


def cmd_run(args: argparse.Namespace) -> int:
    if args.max_time <= 0:
        print("--max-time must be positive", file=sys.stderr)
        return EXIT_ERROR
    code, result = _compile(args.source, args.json)
    if code != EXIT_OK:
        return code
    out_dir = Path(args.out)
    try:
        world = instantiate(result.solved.tree, seed=args.seed, out_dir=out_dir,
                            registry=default_registry())
        end = world.run(args.max_time)
    except (CollisionError, ScatterOverflow) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    summary = world.summary()
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "summary.json").write_text(summary_json(summary) + "\n")
    if args.json:
        print(summary_json(summary))
    else:
        print(f"run ended: {end.kind}{' (' + end.reason + ')' if end.reason else ''}")
        write_summary(summary, sys.stdout)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nanoccs", description="Declarative agent-based model compiler.")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    check = sub.add_parser("check", help="compile a model and report whether it solves")
    check.add_argument("source")
    check.set_defaults(func=cmd_check)

    exp = sub.add_parser("explain", help="show every slot with its provenance (or the registry)")
    exp.add_argument("source", nargs="?")
    exp.set_defaults(func=cmd_explain)

    run = sub.add_parser("run", help="compile and simulate a model")
    run.add_argument("source")
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--out", default=os.environ.get("NANOCCS_OUT", "out"))
    run.add_argument("--max-time", type=float, default=1000.0)
    run.set_defaults(func=cmd_run)

    for p in (check, exp, run):
        p.add_argument("--json", action="store_true", help="machine-readable output")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except NanoError as exc:  # anything not mapped above is a bug surfaced cleanly
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
