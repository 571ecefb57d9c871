"""Command line interface.

``sxacml decide``  evaluate one request file offline
``sxacml serve``   run the HTTP decision service
``sxacml fmt``     print policy files in canonical form

``decide`` exits 0 when every decision is Permit, Deny or NotApplicable, 2 if
any is Indeterminate, and 1 when an input cannot be loaded. The log level is
taken from ``--log-level`` or the ``SXACML_LOG`` environment variable.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from .dsl import parse_policy_document, serialize_policy
from .pdp import Engine, LoadError, format_trace
from .request import RequestFormatError
from .service import ConfigError, EngineConfig, serve

EXIT_OK = 0
EXIT_LOAD_ERROR = 1
EXIT_INDETERMINATE = 2


def _add_inputs(parser: argparse.ArgumentParser, required: bool = True) -> None:
    parser.add_argument("--policies", nargs="+", metavar="FILE", required=required, default=[],
                        help="policy documents (.apl), combined in the given order")
    parser.add_argument("--ontologies", nargs="+", metavar="FILE", required=required, default=[],
                        help="domain ontology documents (.json)")
    parser.add_argument("--mapping", nargs="+", metavar="FILE", default=[],
                        help="mapping ontology documents (.json)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sxacml", description="Semantic ABAC decision engine")
    parser.add_argument("--log-level", default=os.environ.get("SXACML_LOG", "WARNING"),
                        help="logging level (default: $SXACML_LOG or WARNING)")
    sub = parser.add_subparsers(dest="command", required=True)

    decide = sub.add_parser("decide", help="evaluate a request file")
    _add_inputs(decide)
    decide.add_argument("--request", required=True, metavar="FILE", help="request document (.json)")
    decide.add_argument("--output", metavar="FILE", help="write the decision document here")
    decide.add_argument("--explain", action="store_true",
                        help="print the evaluation trace to standard error")

    srv = sub.add_parser("serve", help="run the HTTP decision service")
    _add_inputs(srv)
    srv.add_argument("--listen", default="127.0.0.1:8080", metavar="HOST:PORT")

    fmt = sub.add_parser("fmt", help="print policy files in canonical form")
    fmt.add_argument("files", nargs="+", metavar="FILE")
    return parser


def _configure_logging(level: str) -> None:
    numeric = logging.getLevelName(level.upper())
    if not isinstance(numeric, int):
        numeric = logging.WARNING
    logging.basicConfig(level=numeric, stream=sys.stderr,
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")


def cmd_decide(args) -> int:
    try:
        engine = Engine.from_files(args.policies, args.ontologies, args.mapping)
        request = Path(args.request).read_bytes()
        decisions = engine.decide_document(request, explain=args.explain)
    except OSError as exc:
        print(f"error: {args.request}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_LOAD_ERROR
    except (LoadError, RequestFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_LOAD_ERROR
    text = engine.decision_text(decisions)
    if args.explain:
        for line in format_trace(decisions, engine.prefixes):
            print(line, file=sys.stderr)
    if args.output:
        try:
            Path(args.output).write_text(text, encoding="utf-8")
        except OSError as exc:
            print(f"error: {args.output}: {exc.strerror or exc}", file=sys.stderr)
            return EXIT_LOAD_ERROR
    else:
        sys.stdout.write(text)
    return EXIT_INDETERMINATE if decisions.has_indeterminate else EXIT_OK


def cmd_serve(args) -> int:
    config = EngineConfig(args.listen, tuple(args.ontologies), tuple(args.mapping),
                          tuple(args.policies), args.log_level)
    try:
        serve(config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_LOAD_ERROR
    except KeyboardInterrupt:
        pass
    return EXIT_OK


def cmd_fmt(args) -> int:
    status = EXIT_OK
    for name in args.files:
        try:
            data = Path(name).read_bytes()
        except OSError as exc:
            print(f"error: {name}: {exc.strerror or exc}", file=sys.stderr)
            status = EXIT_LOAD_ERROR
            continue
        result = parse_policy_document(data)
        for d in result.diagnostics:
            print(f"{name}:{d}", file=sys.stderr)
        if result.ok:
            sys.stdout.write(serialize_policy(result.policy_set))
        else:
            status = EXIT_LOAD_ERROR
    return status


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    _configure_logging(args.log_level)
    handler = {"decide": cmd_decide, "serve": cmd_serve, "fmt": cmd_fmt}[args.command]
    return handler(args)
