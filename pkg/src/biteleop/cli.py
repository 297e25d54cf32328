"""Command line entry point.

Subcommands: ``run`` (replay a session or serve a live bridge),
``validate`` (check a config and the files it references, no run), and
``report`` (render a saved metrics document).

Exit codes are a stable contract: 0 success, 2 configuration error,
3 input parse error, 4 runtime error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import (ConfigurationError, SessionParseError, StructuralError,
                     TeleopError, UnsupportedFormatError)
from .report import render
from .runner import (Engine, load_metrics, load_run_config, run_replay,
                     write_metrics)
from .session import read_session

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_PARSE = 3
EXIT_RUNTIME = 4

_CONFIG_ERRORS = (ConfigurationError, StructuralError,
                  UnsupportedFormatError, OSError)


def _fail(code: int, message: str) -> int:
    print("error: %s" % message, file=sys.stderr)
    return code


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="biteleop",
        description="bimanual teleoperation simulator and tools")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute a configured run")
    run_p.add_argument("--config", required=True, help="run config file")
    mode = run_p.add_mutually_exclusive_group()
    mode.add_argument("--replay", metavar="SESSION",
                      help="replay this session log")
    mode.add_argument("--live", action="store_true",
                      help="serve a live bridge instead of replaying")
    run_p.add_argument("--port", type=int, help="live bridge port")
    run_p.add_argument("--seed", type=int, help="override the config seed")
    run_p.add_argument("--out", help="directory for metrics and logs")

    val_p = sub.add_parser("validate",
                           help="check a config and its referenced files")
    val_p.add_argument("--config", required=True)

    rep_p = sub.add_parser("report", help="render a saved metrics file")
    rep_p.add_argument("--in", dest="infile", required=True,
                       help="metrics.json from a run")
    rep_p.add_argument("--format", choices=["text", "json-like"],
                       default="text")
    return parser


def _overrides(args) -> dict:
    over = {}
    if args.replay is not None:
        over["mode"] = "replay"
        over["session"] = args.replay
    if args.live:
        over["mode"] = "live"
    if args.port is not None:
        over["port"] = args.port
    if args.seed is not None:
        over["seed"] = args.seed
    if args.out is not None:
        over["out"] = args.out
    return over


def _cmd_run(args) -> int:
    try:
        config = load_run_config(args.config, _overrides(args))
        engine = Engine(config)
    except _CONFIG_ERRORS as exc:
        return _fail(EXIT_CONFIG, str(exc))

    if config.mode == "replay":
        try:
            events = read_session(config.session)
        except (SessionParseError, UnsupportedFormatError) as exc:
            return _fail(EXIT_PARSE, str(exc))
        except OSError as exc:
            return _fail(EXIT_CONFIG, str(exc))
        try:
            metrics, engine = run_replay(config, events, engine)
        except TeleopError as exc:
            return _fail(EXIT_RUNTIME, str(exc))
    else:
        from .bridge import run_live
        out_dir = config.out if config.out is not None else Path.cwd()
        try:
            metrics, engine, session_path = run_live(config, engine=engine,
                                                     out_dir=out_dir)
        except (TeleopError, OSError) as exc:
            return _fail(EXIT_RUNTIME, str(exc))
        print("recorded session: %s" % session_path)

    out_dir = config.out if config.out is not None else Path.cwd()
    path = write_metrics(metrics, out_dir)
    sys.stdout.write(render(metrics, "text"))
    print("metrics written: %s" % path)
    return EXIT_OK


def _cmd_validate(args) -> int:
    try:
        config = load_run_config(args.config)
        Engine(config)
    except _CONFIG_ERRORS as exc:
        return _fail(EXIT_CONFIG, str(exc))
    if config.mode == "replay":
        try:
            events = read_session(config.session)
        except (SessionParseError, UnsupportedFormatError) as exc:
            return _fail(EXIT_PARSE, str(exc))
        except OSError as exc:
            return _fail(EXIT_CONFIG, str(exc))
        print("ok: %s (%d events)" % (config.name, len(events)))
    else:
        print("ok: %s (live, port %d)" % (config.name, config.port))
    return EXIT_OK


def _cmd_report(args) -> int:
    try:
        metrics = load_metrics(args.infile)
    except OSError as exc:
        return _fail(EXIT_CONFIG, str(exc))
    except json.JSONDecodeError as exc:
        return _fail(EXIT_PARSE, "%s: %s" % (args.infile, exc))
    sys.stdout.write(render(metrics, args.format))
    return EXIT_OK


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "run":
        return _cmd_run(args)
    if args.command == "validate":
        return _cmd_validate(args)
    return _cmd_report(args)


if __name__ == "__main__":
    sys.exit(main())
